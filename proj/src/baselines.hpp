// Copyright (c) 2026 trimreg developers.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "solver.hpp"

namespace trimreg {

enum class BaselineKind { L1, Scad, Mcp };

// Separable penalty applied to the penalized coordinates. SCAD needs a > 2,
// MCP needs gamma > 1; both reduce to a soft threshold near zero and leave
// large coordinates unpenalized.
struct BaselinePenalty {
  BaselineKind kind = BaselineKind::L1;
  double lambda = 0.0;
  double a = 3.0;      // SCAD concavity knot
  double gamma = 2.5;  // MCP concavity scale

  void validate() const;
  double value_scalar(double x) const;
  double value(const Vector& theta_pen) const;

  // Derivative for x != 0 (all three penalties are C^1 away from zero).
  double derivative(double x) const;

  // Exact argmin_x (x - z)^2 / (2 t) + penalty(x), by enumerating the
  // stationary point of each polynomial piece together with the knots. Exact
  // in the degenerate regimes (t near the concavity scale) where the pieces
  // stop being strictly convex.
  double prox_scalar(double z, double t) const;

  // Largest curvature the penalty subtracts from a quadratic model: 0 for l1,
  // 1/(a-1) for SCAD, 1/gamma for MCP.
  double concavity() const;
};

// Proximal gradient on loss + separable penalty. Reuses BcdConfig; tau and
// weight_step are ignored. The recorded certificate is the guaranteed
// decrease max(0, 1/eta - concavity)/2 * ||dtheta||^2, so certificate_holds
// applies to these traces too. Stopping tests the squared norm of the
// minimum-norm composite subgradient.
SolveResult solve_prox_gradient(const ProblemStructure& st, const BaselinePenalty& pen,
                                const BcdConfig& cfg = {}, const Vector* init = nullptr);

// Difference-of-convex handling of the trimmed penalty: split
// lambda * trimmed_l1 = lambda * l1 - lambda * (sum of h largest magnitudes),
// linearize the subtracted convex term at theta^k through its subgradient
// s^k (signs on the h largest coordinates, ties by lower index), and take one
// proximal gradient step on the convex majorizer. The true trimmed objective
// decreases every iteration; the trace records it.
SolveResult solve_dc_trimmed(const TrimmedProblem& prob, const BcdConfig& cfg = {},
                             const Vector* init = nullptr);

}  // namespace trimreg
