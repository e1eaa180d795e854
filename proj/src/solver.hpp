// Copyright (c) 2026 trimreg developers.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <optional>

#include "losses.hpp"
#include "penalty.hpp"
#include "types.hpp"

namespace trimreg {

// Which coordinates the trimmed penalty acts on, plus the shape constraints
// solvers must respect. Parameters are always flat vectors; matrix-valued
// problems (side s) store vec(Theta) column-major and keep it symmetric.
struct ProblemStructure {
  std::shared_ptr<const SmoothLoss> loss;
  std::vector<Index> penalized;  // strictly increasing indices into theta
  bool symmetrize = false;
  Index matrix_side = 0;  // > 0 when the parameter is a square matrix
  Vector initial_point;
};

// Least squares over all of theta, zero start.
ProblemStructure regression_structure(Matrix X, Vector y);

// Gaussian log-det loss; penalized set is every off-diagonal entry (column
// major), diagonal free, identity start.
ProblemStructure graphical_structure(Matrix S);

struct TrimmedProblem {
  ProblemStructure structure;
  double lambda = 0.0;   // >= 0
  Index trim_count = 0;  // h over structure.penalized
};

Vector gather(const Vector& theta, const std::vector<Index>& idx);

// Throws std::invalid_argument unless the loss is present, the initial point
// matches its dimension, the penalized indices are strictly increasing and in
// range, and matrix-shaped problems are square.
void validate_problem_structure(const ProblemStructure& st);

// loss(theta) + lambda * sum_i w_i |theta_i| over the penalized coordinates.
double joint_objective(const TrimmedProblem& prob, const Vector& theta, const WeightVector& w);

// loss(theta) + lambda * trimmed_l1 over the penalized coordinates: the joint
// objective minimized over the weight block. Comparable across solvers.
double reduced_objective(const TrimmedProblem& prob, const Vector& theta);

enum class WeightStep { Projected, Exact };
enum class StopReason { Stationary, MaxIterations, ObjectivePlateau };

struct BcdConfig {
  double eta = 0.0;  // theta step; 0 selects 1 / lipschitz()
  double tau = 0.0;  // w step in the scaled form w - tau * r; 0 selects 1 / lambda
  Index max_iters = 5000;
  double tol_stationarity = 1e-6;  // on the squared measure T
  double tol_objective = 0.0;      // relative plateau width; 0 disables
  Index plateau_span = 5;          // consecutive plateau iterations before stopping
  WeightStep weight_step = WeightStep::Projected;
};

struct IterationRecord {
  Index iter;                 // 0 is the initial point
  double objective;           // joint F(theta^k, w^k)
  double objective_reduced;   // loss + lambda * trimmed_l1
  double certificate;         // G for the step producing this iterate; 0 at iter 0
  double stationarity;        // T(theta^k, w^k)
  double theta_step;          // ||theta^k - theta^{k-1}||
  double weight_step;         // ||w^k - w^{k-1}||
};

struct SolveResult {
  Vector theta;
  WeightVector weights;
  StopReason stop = StopReason::MaxIterations;
  Index iterations = 0;
  double objective = 0.0;
  double objective_reduced = 0.0;
  double stationarity = 0.0;
  double lipschitz = 0.0;  // smooth constant backing the default step
  double eta = 0.0;        // theta step actually configured (last used when backtracking)
  double tau = 0.0;
  std::vector<IterationRecord> trace;
};

struct DivergenceError : std::runtime_error {
  DivergenceError(const std::string& msg, std::vector<IterationRecord> partial)
      : std::runtime_error(msg), trace(std::move(partial)) {}
  std::vector<IterationRecord> trace;
};

// Alternating scheme: a projected (or exact) weight update over the capped
// simplex followed by a proximal gradient step in theta. With the default
// steps the joint objective decreases by at least the per-iteration
// certificate G = ||dtheta||^2 / (2 eta) + (lambda / tau) ||dw||^2.
SolveResult solve_bcd(const TrimmedProblem& prob, const BcdConfig& cfg = {},
                      const Vector* init_theta = nullptr, const WeightVector* init_w = nullptr);

// Squared distance to zero of the closest element of the (theta, w) first
// order optimality system: ||u||^2 over theta plus the exact minimum over the
// simplex multiplier of the w block residual. Zero iff (theta, w) is
// stationary for the joint objective.
double stationarity_measure(const TrimmedProblem& prob, const Vector& theta,
                            const WeightVector& w);

// Same measure with the loss gradient already in hand.
double stationarity_measure(const TrimmedProblem& prob, const Vector& theta,
                            const WeightVector& w, const Vector& grad);

// Per-step check that each recorded certificate is covered by the recorded
// objective decrease.
bool certificate_holds(const std::vector<IterationRecord>& trace, double tol = 1e-8);

// Checks min_k T against the telescoped progress bound
//   min_{k=1..K} T_k <= (4 + 2 lambda / L) * (F_1 - F_{K+1}) / K + tol,
// valid for the default fixed-step configuration.
bool rate_bound_holds(const SolveResult& res, double lambda, double tol = 1e-6);

}  // namespace trimreg
