// Copyright (c) 2026 trimreg developers.
// SPDX-License-Identifier: Apache-2.0
#include "losses.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "rng.hpp"

namespace trimreg {

double spectral_bound_psd(const std::function<void(const Vector&, Vector&)>& apply, Index dim) {
  if (dim <= 0) throw std::invalid_argument("spectral_bound_psd: empty operator");
  Rng rng(0x5eedULL);  // fixed seed: the estimate must not depend on caller state
  Vector v(dim), av(dim);
  rng.fill_normal(v);
  v.normalize();
  double lam = 0.0;
  for (int it = 0; it < 2000; ++it) {
    apply(v, av);
    const double lam_new = v.dot(av);
    const double norm = av.norm();
    if (norm == 0.0) {
      // v is in the kernel; restart from a fresh direction.
      rng.fill_normal(v);
      v.normalize();
      lam = 0.0;
      continue;
    }
    v = av / norm;
    if (it > 0 && std::abs(lam_new - lam) <= 1e-6 * std::max(std::abs(lam_new), 1e-12)) {
      lam = lam_new;
      break;
    }
    lam = lam_new;
  }
  return 1.01 * std::max(lam, 0.0) + 1e-12;
}

LeastSquaresLoss::LeastSquaresLoss(Matrix X, Vector y)
    : X_(std::move(X)), y_(std::move(y)), n_(X_.rows()), p_(X_.cols()) {
  if (n_ <= 0 || p_ <= 0) throw std::invalid_argument("least squares: empty design matrix");
  if (y_.size() != n_)
    throw std::invalid_argument("least squares: y has " + std::to_string(y_.size()) +
                                " entries, X has " + std::to_string(n_) + " rows");
  use_gram_ = n_ >= p_;
  if (use_gram_) {
    const double inv_n = 1.0 / static_cast<double>(n_);
    gram_ = (X_.transpose() * X_) * inv_n;
    xty_ = X_.transpose() * y_ * inv_n;
    yty_ = y_.squaredNorm() * inv_n;
  }
}

double LeastSquaresLoss::value(const Vector& theta) const {
  if (theta.size() != p_) throw std::invalid_argument("least squares: theta dimension mismatch");
  if (use_gram_) return theta.dot(gram_ * theta) - 2.0 * theta.dot(xty_) + yty_;
  return (X_ * theta - y_).squaredNorm() / static_cast<double>(n_);
}

double LeastSquaresLoss::value_grad(const Vector& theta, Vector& grad) const {
  if (theta.size() != p_) throw std::invalid_argument("least squares: theta dimension mismatch");
  if (use_gram_) {
    const Vector gt = gram_ * theta;
    grad = 2.0 * (gt - xty_);
    return theta.dot(gt) - 2.0 * theta.dot(xty_) + yty_;
  }
  const Vector resid = X_ * theta - y_;
  grad = X_.transpose() * resid * (2.0 / static_cast<double>(n_));
  return resid.squaredNorm() / static_cast<double>(n_);
}

double LeastSquaresLoss::lipschitz() const {
  if (lipschitz_cache_ > 0.0) return lipschitz_cache_;
  if (use_gram_) {
    lipschitz_cache_ =
        2.0 * spectral_bound_psd([&](const Vector& v, Vector& out) { out = gram_ * v; }, p_);
  } else {
    const double inv_n = 1.0 / static_cast<double>(n_);
    lipschitz_cache_ = 2.0 * spectral_bound_psd(
                                 [&](const Vector& v, Vector& out) {
                                   out.noalias() = X_.transpose() * (X_ * v);
                                   out *= inv_n;
                                 },
                                 p_);
  }
  return lipschitz_cache_;
}

namespace {

void check_square(const Matrix& M, const char* what) {
  if (M.rows() != M.cols() || M.rows() == 0)
    throw std::invalid_argument(std::string(what) + ": expected a nonempty square matrix");
}

bool nearly_symmetric(const Matrix& M) {
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  return (M - M.transpose()).cwiseAbs().maxCoeff() <= 1e-8 * scale;
}

// LLT of Theta, throwing when Theta is not symmetric positive definite.
Eigen::LLT<Matrix> pd_factor(const Matrix& Theta) {
  check_square(Theta, "gaussian log-det loss");
  if (!nearly_symmetric(Theta))
    throw NotPositiveDefiniteError("gaussian log-det loss: argument is not symmetric");
  Eigen::LLT<Matrix> llt(Theta);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefiniteError("gaussian log-det loss: argument is not positive definite");
  return llt;
}

double logdet_from(const Eigen::LLT<Matrix>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace

double gaussian_logdet_value(const Matrix& S, const Matrix& Theta) {
  check_square(S, "gaussian log-det loss");
  if (S.rows() != Theta.rows()) throw std::invalid_argument("gaussian log-det loss: size mismatch");
  const auto llt = pd_factor(Theta);
  return (S * Theta).trace() - logdet_from(llt);
}

double gaussian_logdet_value_grad(const Matrix& S, const Matrix& Theta, Matrix& grad) {
  check_square(S, "gaussian log-det loss");
  if (S.rows() != Theta.rows()) throw std::invalid_argument("gaussian log-det loss: size mismatch");
  const auto llt = pd_factor(Theta);
  grad = S - llt.solve(Matrix::Identity(Theta.rows(), Theta.cols()));
  return (S * Theta).trace() - logdet_from(llt);
}

GaussianLogDetLoss::GaussianLogDetLoss(Matrix S) : S_(std::move(S)), p_(S_.rows()) {
  check_square(S_, "gaussian log-det loss");
  if (!nearly_symmetric(S_))
    throw std::invalid_argument("gaussian log-det loss: sample covariance must be symmetric");
  S_ = 0.5 * (S_ + S_.transpose().eval());
}

double GaussianLogDetLoss::value(const Vector& theta) const {
  if (theta.size() != p_ * p_)
    throw std::invalid_argument("gaussian log-det loss: theta dimension mismatch");
  const Eigen::Map<const Matrix> Theta(theta.data(), p_, p_);
  return gaussian_logdet_value(S_, Theta);
}

double GaussianLogDetLoss::value_grad(const Vector& theta, Vector& grad) const {
  if (theta.size() != p_ * p_)
    throw std::invalid_argument("gaussian log-det loss: theta dimension mismatch");
  const Eigen::Map<const Matrix> Theta(theta.data(), p_, p_);
  grad.resize(p_ * p_);
  Eigen::Map<Matrix> G(grad.data(), p_, p_);
  Matrix tmp;
  const double val = gaussian_logdet_value_grad(S_, Theta, tmp);
  G = tmp;
  return val;
}

bool GaussianLogDetLoss::in_domain(const Vector& theta) const {
  if (theta.size() != p_ * p_) return false;
  const Eigen::Map<const Matrix> Theta(theta.data(), p_, p_);
  if (!nearly_symmetric(Theta)) return false;
  Eigen::LLT<Matrix> llt(Theta);
  return llt.info() == Eigen::Success;
}

double GaussianLogDetLoss::local_lipschitz(const Vector& theta) const {
  const Eigen::Map<const Matrix> Theta(theta.data(), p_, p_);
  Eigen::SelfAdjointEigenSolver<Matrix> es(Theta, Eigen::EigenvaluesOnly);
  const double lam_min = es.eigenvalues().minCoeff();
  if (!(lam_min > 0.0))
    throw NotPositiveDefiniteError("gaussian log-det loss: local curvature undefined outside the cone");
  return 1.0 / (lam_min * lam_min);
}

}  // namespace trimreg
