// Copyright (c) 2026 trimreg developers.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <memory>

#include "types.hpp"

namespace trimreg {

// Smooth part of a penalized objective, presented over a flat parameter
// vector so the solvers stay agnostic of matrix-shaped parameters.
class SmoothLoss {
 public:
  virtual ~SmoothLoss() = default;
  virtual Index dim() const = 0;
  virtual double value(const Vector& theta) const = 0;
  virtual double value_grad(const Vector& theta, Vector& grad) const = 0;

  // Upper bound on the gradient Lipschitz constant, where a global one
  // exists. Losses with needs_backtracking() == true only promise a local
  // bound through local_lipschitz().
  virtual double lipschitz() const = 0;

  virtual bool in_domain(const Vector&) const { return true; }
  virtual double local_lipschitz(const Vector&) const { return lipschitz(); }
  virtual bool needs_backtracking() const { return false; }
};

// (1/n) ||X theta - y||^2. Gradient (2/n) X^T (X theta - y), Lipschitz
// constant (2/n) lambda_max(X^T X).
//
// When n >= p the Gram matrix X^T X / n is precomputed once and every
// value/gradient evaluation costs O(p^2) instead of O(n p); with tall designs
// and thousands of warm-started solves this is the difference between
// minutes and hours.
class LeastSquaresLoss : public SmoothLoss {
 public:
  LeastSquaresLoss(Matrix X, Vector y);

  Index dim() const override { return p_; }
  double value(const Vector& theta) const override;
  double value_grad(const Vector& theta, Vector& grad) const override;
  double lipschitz() const override;

  bool using_gram() const { return use_gram_; }
  Index num_samples() const { return n_; }

 private:
  Matrix X_;
  Vector y_;
  Index n_ = 0, p_ = 0;
  bool use_gram_ = false;
  Matrix gram_;      // X^T X / n
  Vector xty_;       // X^T y / n
  double yty_ = 0.0; // y^T y / n
  mutable double lipschitz_cache_ = -1.0;
};

// trace(S Theta) - log det(Theta) over symmetric positive definite Theta,
// matrix space. Gradient S - Theta^{-1}. Throws NotPositiveDefiniteError
// outside the cone.
double gaussian_logdet_value(const Matrix& S, const Matrix& Theta);
double gaussian_logdet_value_grad(const Matrix& S, const Matrix& Theta, Matrix& grad);

// Same loss over vec(Theta) in column-major order. There is no global
// Lipschitz constant on the open cone; local_lipschitz returns
// 1 / lambda_min(Theta)^2 and needs_backtracking() is true, so solvers must
// re-estimate the step and backtrack on domain violations.
class GaussianLogDetLoss : public SmoothLoss {
 public:
  explicit GaussianLogDetLoss(Matrix S);

  Index dim() const override { return p_ * p_; }
  double value(const Vector& theta) const override;
  double value_grad(const Vector& theta, Vector& grad) const override;
  double lipschitz() const override { return 1.0; }  // local bound at Theta = I
  bool in_domain(const Vector& theta) const override;
  double local_lipschitz(const Vector& theta) const override;
  bool needs_backtracking() const override { return true; }

  Index side() const { return p_; }
  const Matrix& sample_cov() const { return S_; }

 private:
  Matrix S_;
  Index p_ = 0;
};

// Largest eigenvalue of a symmetric PSD operator given by matrix-free
// apply(v) -> A v, via power iteration (internally seeded, deterministic),
// inflated by 1% so that steps of size 1/L stay in the descent regime even
// when the iteration converges from below.
double spectral_bound_psd(const std::function<void(const Vector&, Vector&)>& apply, Index dim);

}  // namespace trimreg
