// Copyright (c) 2026 trimreg developers.
// SPDX-License-Identifier: Apache-2.0
#include "baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace trimreg {

namespace {

double soft(double z, double cut) {
  const double mag = std::abs(z) - cut;
  return mag > 0.0 ? (z > 0.0 ? mag : -mag) : 0.0;
}

void symmetrize_vec(Vector& theta, Index s) {
  Eigen::Map<Matrix> M(theta.data(), s, s);
  M = 0.5 * (M + M.transpose()).eval();
}

}  // namespace

void BaselinePenalty::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("baseline penalty: lambda must be finite and > 0");
  if (kind == BaselineKind::Scad && !(a > 2.0))
    throw std::invalid_argument("scad penalty: a must be > 2");
  if (kind == BaselineKind::Mcp && !(gamma > 1.0))
    throw std::invalid_argument("mcp penalty: gamma must be > 1");
}

double BaselinePenalty::value_scalar(double x) const {
  const double ax = std::abs(x);
  switch (kind) {
    case BaselineKind::L1:
      return lambda * ax;
    case BaselineKind::Scad:
      if (ax <= lambda) return lambda * ax;
      if (ax <= a * lambda)
        return (2.0 * a * lambda * ax - ax * ax - lambda * lambda) / (2.0 * (a - 1.0));
      return 0.5 * lambda * lambda * (a + 1.0);
    case BaselineKind::Mcp:
      if (ax <= gamma * lambda) return lambda * ax - ax * ax / (2.0 * gamma);
      return 0.5 * gamma * lambda * lambda;
  }
  return 0.0;
}

double BaselinePenalty::value(const Vector& theta_pen) const {
  double s = 0.0;
  for (Index i = 0; i < theta_pen.size(); ++i) s += value_scalar(theta_pen[i]);
  return s;
}

double BaselinePenalty::derivative(double x) const {
  const double sgn = x > 0.0 ? 1.0 : -1.0;
  const double ax = std::abs(x);
  switch (kind) {
    case BaselineKind::L1:
      return sgn * lambda;
    case BaselineKind::Scad:
      if (ax <= lambda) return sgn * lambda;
      if (ax <= a * lambda) return sgn * (a * lambda - ax) / (a - 1.0);
      return 0.0;
    case BaselineKind::Mcp:
      if (ax <= gamma * lambda) return sgn * (lambda - ax / gamma);
      return 0.0;
  }
  return 0.0;
}

double BaselinePenalty::concavity() const {
  switch (kind) {
    case BaselineKind::L1:
      return 0.0;
    case BaselineKind::Scad:
      return 1.0 / (a - 1.0);
    case BaselineKind::Mcp:
      return 1.0 / gamma;
  }
  return 0.0;
}

double BaselinePenalty::prox_scalar(double z, double t) const {
  if (!(t > 0.0) || !std::isfinite(t))
    throw std::invalid_argument("prox_scalar: step t must be finite and > 0");
  if (kind == BaselineKind::L1) return soft(z, t * lambda);

  const double s = std::abs(z);
  double candidates[5];
  int nc = 0;
  if (kind == BaselineKind::Scad) {
    candidates[nc++] = std::clamp(s - t * lambda, 0.0, lambda);
    const double denom = a - 1.0 - t;
    if (denom > 0.0)
      candidates[nc++] = std::clamp(((a - 1.0) * s - t * a * lambda) / denom, lambda, a * lambda);
    candidates[nc++] = std::max(s, a * lambda);
    candidates[nc++] = lambda;
    candidates[nc++] = a * lambda;
  } else {
    if (gamma - t > 0.0)  // otherwise the inner piece is concave and the knots decide
      candidates[nc++] = std::clamp(gamma * (s - t * lambda) / (gamma - t), 0.0, gamma * lambda);
    candidates[nc++] = std::max(s, gamma * lambda);
    candidates[nc++] = 0.0;
    candidates[nc++] = gamma * lambda;
  }
  std::sort(candidates, candidates + nc);
  double best_x = candidates[0];
  double best_q = std::numeric_limits<double>::infinity();
  for (int i = 0; i < nc; ++i) {
    const double x = candidates[i];
    const double q = (x - s) * (x - s) / (2.0 * t) + value_scalar(x);
    if (q < best_q) {
      best_q = q;
      best_x = x;
    }
  }
  return z >= 0.0 ? best_x : -best_x;
}

namespace {

// Squared norm of the minimum-norm element of grad + d(penalty) at theta.
double composite_residual(const Vector& grad, const Vector& theta,
                          const std::vector<Index>& penalized, const BaselinePenalty& pen) {
  double usq = 0.0;
  std::size_t t = 0;
  for (Index j = 0; j < theta.size(); ++j) {
    double u;
    if (t < penalized.size() && penalized[t] == j) {
      u = theta[j] == 0.0 ? soft(grad[j], pen.lambda) : grad[j] + pen.derivative(theta[j]);
      ++t;
    } else {
      u = grad[j];
    }
    usq += u * u;
  }
  return usq;
}

// Residual of the trimmed objective through its convex-minus-convex split:
// minimum-norm element of grad - lambda s + lambda d(l1) at theta, with s the
// top-h sign subgradient at theta itself.
double dc_residual(const Vector& grad, const Vector& theta, const std::vector<Index>& penalized,
                   double lambda, Index h) {
  Vector s_pen = Vector::Zero(static_cast<Index>(penalized.size()));
  if (lambda > 0.0 && !penalized.empty()) {
    const Vector gathered = gather(theta, penalized);
    for (Index i : top_h_indices(gathered, h))
      s_pen[i] = gathered[i] > 0.0 ? 1.0 : (gathered[i] < 0.0 ? -1.0 : 0.0);
  }
  double usq = 0.0;
  std::size_t t = 0;
  for (Index j = 0; j < theta.size(); ++j) {
    double u;
    if (t < penalized.size() && penalized[t] == j) {
      const double g = grad[j] - lambda * s_pen[static_cast<Index>(t)];
      if (theta[j] == 0.0) {
        u = soft(g, lambda);
      } else {
        u = g + (theta[j] > 0.0 ? lambda : -lambda);
      }
      ++t;
    } else {
      u = grad[j];
    }
    usq += u * u;
  }
  return usq;
}

}  // namespace

SolveResult solve_prox_gradient(const ProblemStructure& st, const BaselinePenalty& pen,
                                const BcdConfig& cfg, const Vector* init) {
  validate_problem_structure(st);
  pen.validate();
  if (cfg.max_iters < 1) throw std::invalid_argument("max_iters must be positive");
  const SmoothLoss& loss = *st.loss;
  const Index d = loss.dim();

  Vector theta = init ? *init : st.initial_point;
  if (theta.size() != d) throw std::invalid_argument("initial theta dimension mismatch");
  if (st.symmetrize) symmetrize_vec(theta, st.matrix_side);
  if (!loss.in_domain(theta))
    throw std::invalid_argument("initial theta is outside the loss domain");

  const bool backtrack = loss.needs_backtracking();
  const double Lf = cfg.eta > 0.0 ? 1.0 / cfg.eta : loss.lipschitz();
  const double eta0 = 1.0 / Lf;

  SolveResult res;
  res.lipschitz = Lf;
  res.eta = eta0;
  res.tau = 0.0;

  Vector grad(d);
  double val = loss.value_grad(theta, grad);
  double F = val + pen.value(gather(theta, st.penalized));
  double T = composite_residual(grad, theta, st.penalized, pen);
  res.trace.push_back({0, F, F, 0.0, T, 0.0, 0.0});

  res.stop = StopReason::MaxIterations;
  Index plateau_run = 0;

  if (T <= cfg.tol_stationarity) {
    res.stop = StopReason::Stationary;
  } else {
    for (Index k = 0; k < cfg.max_iters; ++k) {
      double eta_k = backtrack ? 1.0 / loss.local_lipschitz(theta) : eta0;
      Vector cand(d), grad_new(d);
      double val_new = 0.0;
      bool accepted = false;
      for (int bt = 0; bt < 80; ++bt) {
        const Vector z = theta - eta_k * grad;
        cand = z;
        for (Index j : st.penalized) cand[j] = pen.prox_scalar(z[j], eta_k);
        if (st.symmetrize) symmetrize_vec(cand, st.matrix_side);
        if (!backtrack) {
          val_new = loss.value_grad(cand, grad_new);
          accepted = true;
          break;
        }
        try {
          val_new = loss.value_grad(cand, grad_new);
        } catch (const NotPositiveDefiniteError&) {
          eta_k *= 0.5;
          continue;
        }
        const Vector dth = cand - theta;
        const double quad = val + grad.dot(dth) + dth.squaredNorm() / (2.0 * eta_k);
        if (val_new <= quad + 1e-12 * std::max(1.0, std::abs(val))) {
          accepted = true;
          break;
        }
        eta_k *= 0.5;
      }
      if (!accepted)
        throw DivergenceError("theta step underflowed without an acceptable point", res.trace);

      const double dth = (cand - theta).norm();
      const double F_new = val_new + pen.value(gather(cand, st.penalized));
      if (!std::isfinite(F_new))
        throw DivergenceError("objective is no longer finite", res.trace);
      const double cert = 0.5 * std::max(0.0, 1.0 / eta_k - pen.concavity()) * dth * dth;

      theta = std::move(cand);
      grad = std::move(grad_new);
      val = val_new;
      res.eta = eta_k;
      T = composite_residual(grad, theta, st.penalized, pen);
      res.trace.push_back({k + 1, F_new, F_new, cert, T, dth, 0.0});
      const double F_prev = F;
      F = F_new;

      if (T <= cfg.tol_stationarity) {
        res.stop = StopReason::Stationary;
        break;
      }
      if (cfg.tol_objective > 0.0) {
        if (std::abs(F_prev - F) <= cfg.tol_objective * std::max(1.0, std::abs(F))) {
          if (++plateau_run >= cfg.plateau_span) {
            res.stop = StopReason::ObjectivePlateau;
            break;
          }
        } else {
          plateau_run = 0;
        }
      }
    }
  }

  res.iterations = static_cast<Index>(res.trace.size()) - 1;
  res.theta = std::move(theta);
  res.objective = F;
  res.objective_reduced = F;
  res.stationarity = T;
  return res;
}

SolveResult solve_dc_trimmed(const TrimmedProblem& prob, const BcdConfig& cfg,
                             const Vector* init) {
  const auto& st = prob.structure;
  validate_problem_structure(st);
  const SmoothLoss& loss = *st.loss;
  const Index d = loss.dim();
  const Index m = static_cast<Index>(st.penalized.size());
  const double lambda = prob.lambda;
  const Index h = prob.trim_count;
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("lambda must be finite and >= 0");
  if (h < 0 || h > m)
    throw std::invalid_argument("trim count must satisfy 0 <= h <= " + std::to_string(m));
  if (cfg.max_iters < 1) throw std::invalid_argument("max_iters must be positive");

  Vector theta = init ? *init : st.initial_point;
  if (theta.size() != d) throw std::invalid_argument("initial theta dimension mismatch");
  if (st.symmetrize) symmetrize_vec(theta, st.matrix_side);
  if (!loss.in_domain(theta))
    throw std::invalid_argument("initial theta is outside the loss domain");

  const bool backtrack = loss.needs_backtracking();
  const double Lf = cfg.eta > 0.0 ? 1.0 / cfg.eta : loss.lipschitz();
  const double eta0 = 1.0 / Lf;
  const bool penalize = lambda > 0.0 && m > 0;

  SolveResult res;
  res.lipschitz = Lf;
  res.eta = eta0;
  res.tau = 0.0;

  Vector grad(d);
  double val = loss.value_grad(theta, grad);
  double F = val + (penalize ? lambda * trimmed_l1(gather(theta, st.penalized), h) : 0.0);
  double T = dc_residual(grad, theta, st.penalized, lambda, h);
  res.trace.push_back({0, F, F, 0.0, T, 0.0, 0.0});

  res.stop = StopReason::MaxIterations;
  Index plateau_run = 0;

  if (T <= cfg.tol_stationarity) {
    res.stop = StopReason::Stationary;
  } else {
    for (Index k = 0; k < cfg.max_iters; ++k) {
      // Subgradient of the subtracted convex term at theta^k, folded into the
      // gradient. The l1 prox then acts on the convex majorizer.
      Vector grad_tilde = grad;
      if (penalize) {
        const Vector gathered = gather(theta, st.penalized);
        for (Index i : top_h_indices(gathered, h)) {
          const double sgn = gathered[i] > 0.0 ? 1.0 : (gathered[i] < 0.0 ? -1.0 : 0.0);
          grad_tilde[st.penalized[static_cast<std::size_t>(i)]] -= lambda * sgn;
        }
      }

      double eta_k = backtrack ? 1.0 / loss.local_lipschitz(theta) : eta0;
      Vector cand(d), grad_new(d);
      double val_new = 0.0;
      bool accepted = false;
      for (int bt = 0; bt < 80; ++bt) {
        const Vector z = theta - eta_k * grad_tilde;
        cand = z;
        if (penalize)
          for (Index j : st.penalized) cand[j] = soft(z[j], eta_k * lambda);
        if (st.symmetrize) symmetrize_vec(cand, st.matrix_side);
        if (!backtrack) {
          val_new = loss.value_grad(cand, grad_new);
          accepted = true;
          break;
        }
        try {
          val_new = loss.value_grad(cand, grad_new);
        } catch (const NotPositiveDefiniteError&) {
          eta_k *= 0.5;
          continue;
        }
        // The linear correction cancels on both sides, so the smooth-part
        // decrease test uses the plain gradient.
        const Vector dth = cand - theta;
        const double quad = val + grad.dot(dth) + dth.squaredNorm() / (2.0 * eta_k);
        if (val_new <= quad + 1e-12 * std::max(1.0, std::abs(val))) {
          accepted = true;
          break;
        }
        eta_k *= 0.5;
      }
      if (!accepted)
        throw DivergenceError("theta step underflowed without an acceptable point", res.trace);

      const double dth = (cand - theta).norm();
      const double F_new =
          val_new + (penalize ? lambda * trimmed_l1(gather(cand, st.penalized), h) : 0.0);
      if (!std::isfinite(F_new))
        throw DivergenceError("objective is no longer finite", res.trace);
      const double cert = dth * dth / (2.0 * eta_k);

      theta = std::move(cand);
      grad = std::move(grad_new);
      val = val_new;
      res.eta = eta_k;
      T = dc_residual(grad, theta, st.penalized, lambda, h);
      res.trace.push_back({k + 1, F_new, F_new, cert, T, dth, 0.0});
      const double F_prev = F;
      F = F_new;

      if (T <= cfg.tol_stationarity) {
        res.stop = StopReason::Stationary;
        break;
      }
      if (cfg.tol_objective > 0.0) {
        if (std::abs(F_prev - F) <= cfg.tol_objective * std::max(1.0, std::abs(F))) {
          if (++plateau_run >= cfg.plateau_span) {
            res.stop = StopReason::ObjectivePlateau;
            break;
          }
        } else {
          plateau_run = 0;
        }
      }
    }
  }

  res.iterations = static_cast<Index>(res.trace.size()) - 1;
  if (penalize) res.weights = optimal_weights(gather(theta, st.penalized), h);
  res.theta = std::move(theta);
  res.objective = F;
  res.objective_reduced = F;
  res.stationarity = T;
  return res;
}

}  // namespace trimreg
