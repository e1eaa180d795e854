// Copyright (c) 2026 trimreg developers.
// SPDX-License-Identifier: Apache-2.0
#include "solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace trimreg {

void validate_problem_structure(const ProblemStructure& st) {
  if (!st.loss) throw std::invalid_argument("problem structure has no loss");
  const Index d = st.loss->dim();
  if (st.initial_point.size() != d)
    throw std::invalid_argument("problem structure: initial point dimension mismatch");
  Index prev = -1;
  for (Index j : st.penalized) {
    if (j <= prev || j >= d)
      throw std::invalid_argument("problem structure: penalized indices must be strictly "
                                  "increasing and within the parameter dimension");
    prev = j;
  }
  if (st.symmetrize && st.matrix_side * st.matrix_side != d)
    throw std::invalid_argument("problem structure: symmetric problems need a square parameter");
}

namespace {

Vector expand_weights(const Vector& w_pen, const std::vector<Index>& idx, Index d) {
  Vector out = Vector::Zero(d);
  for (std::size_t i = 0; i < idx.size(); ++i) out[idx[i]] = w_pen[static_cast<Index>(i)];
  return out;
}

void symmetrize_vec(Vector& theta, Index s) {
  Eigen::Map<Matrix> M(theta.data(), s, s);
  M = 0.5 * (M + M.transpose()).eval();
}

// Average weights over transpose pairs (i,j)/(j,i). Keeps the iterate exactly
// pair-tied so matrix symmetry survives the prox thresholds; feasibility is
// unchanged because pair averaging preserves the total mass and the box.
void pair_average(Vector& w_pen, const std::vector<Index>& idx, Index s) {
  std::vector<Index> pos(static_cast<std::size_t>(s * s), -1);
  for (std::size_t i = 0; i < idx.size(); ++i)
    pos[static_cast<std::size_t>(idx[i])] = static_cast<Index>(i);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const Index f = idx[i];
    const Index row = f % s, col = f / s;
    if (row >= col) continue;
    const Index ft = col + row * s;  // transpose entry, column major
    const Index j = pos[static_cast<std::size_t>(ft)];
    if (j < 0) continue;
    const double avg = 0.5 * (w_pen[static_cast<Index>(i)] + w_pen[j]);
    w_pen[static_cast<Index>(i)] = avg;
    w_pen[j] = avg;
  }
}

// Exact minimum over the scalar multiplier mu of
//   sum_i phi_i(lambda |theta_i| + mu),
// phi_i depending on which side of the box w_i sits on. Each phi is a
// truncated square, so the total is convex piecewise quadratic in mu; a sweep
// over the breakpoints mu = -lambda |theta_i| finds the exact minimum.
double weight_block_residual(const Vector& theta_pen, const Vector& w, double lambda) {
  constexpr double wtol = 1e-10;
  struct Event {
    double pos;
    double a;
    int add;  // +1: starts contributing above pos, -1: stops contributing
  };
  std::vector<Event> events;
  events.reserve(static_cast<std::size_t>(w.size()));
  long cnt = 0;
  double sum_a = 0.0, sum_a2 = 0.0;  // aggregates of active a_i at mu -> -inf
  for (Index i = 0; i < w.size(); ++i) {
    const double a = lambda * std::abs(theta_pen[i]);
    if (w[i] <= wtol) {
      // contributes min(0, a + mu)^2: active for mu < -a
      ++cnt;
      sum_a += a;
      sum_a2 += a * a;
      events.push_back({-a, a, -1});
    } else if (w[i] >= 1.0 - wtol) {
      // contributes max(0, a + mu)^2: active for mu > -a
      events.push_back({-a, a, +1});
    } else {
      // interior: contributes (a + mu)^2 everywhere
      ++cnt;
      sum_a += a;
      sum_a2 += a * a;
    }
  }
  std::sort(events.begin(), events.end(), [](const Event& x, const Event& y) { return x.pos < y.pos; });

  double best = std::numeric_limits<double>::infinity();
  const auto eval_piece = [&](double lo, double hi) {
    if (cnt == 0) {
      best = std::min(best, 0.0);
      return;
    }
    const double mu = std::clamp(-sum_a / static_cast<double>(cnt), lo, hi);
    best = std::min(best, sum_a2 + mu * (2.0 * sum_a + mu * static_cast<double>(cnt)));
  };

  double lo = -std::numeric_limits<double>::infinity();
  for (const Event& e : events) {
    eval_piece(lo, e.pos);
    cnt += e.add;
    sum_a += e.add * e.a;
    sum_a2 += e.add * e.a * e.a;
    lo = e.pos;
  }
  eval_piece(lo, std::numeric_limits<double>::infinity());
  return std::max(best, 0.0);
}

double stationarity_from_grad(const Vector& grad, const Vector& theta, const WeightVector& w,
                              double lambda, const std::vector<Index>& penalized) {
  double usq = 0.0;
  std::size_t t = 0;
  for (Index j = 0; j < theta.size(); ++j) {
    double u;
    if (t < penalized.size() && penalized[t] == j) {
      const double a = lambda * w.entries[static_cast<Index>(t)];
      if (theta[j] == 0.0) {
        const double mag = std::abs(grad[j]) - a;
        u = mag > 0.0 ? mag : 0.0;
      } else {
        u = grad[j] + (theta[j] > 0.0 ? a : -a);
      }
      ++t;
    } else {
      u = grad[j];
    }
    usq += u * u;
  }
  if (penalized.empty() || lambda == 0.0) return usq;
  Vector theta_pen(static_cast<Index>(penalized.size()));
  for (std::size_t i = 0; i < penalized.size(); ++i)
    theta_pen[static_cast<Index>(i)] = theta[penalized[i]];
  return usq + weight_block_residual(theta_pen, w.entries, lambda);
}

}  // namespace

ProblemStructure regression_structure(Matrix X, Vector y) {
  ProblemStructure st;
  const Index p = X.cols();
  st.loss = std::make_shared<LeastSquaresLoss>(std::move(X), std::move(y));
  st.penalized.resize(static_cast<std::size_t>(p));
  for (Index j = 0; j < p; ++j) st.penalized[static_cast<std::size_t>(j)] = j;
  st.initial_point = Vector::Zero(p);
  return st;
}

ProblemStructure graphical_structure(Matrix S) {
  ProblemStructure st;
  const Index p = S.rows();
  st.loss = std::make_shared<GaussianLogDetLoss>(std::move(S));
  st.symmetrize = true;
  st.matrix_side = p;
  st.penalized.reserve(static_cast<std::size_t>(p * (p - 1)));
  for (Index f = 0; f < p * p; ++f)
    if (f % p != f / p) st.penalized.push_back(f);
  Matrix eye = Matrix::Identity(p, p);
  st.initial_point = Eigen::Map<Vector>(eye.data(), p * p);
  return st;
}

Vector gather(const Vector& theta, const std::vector<Index>& idx) {
  Vector out(static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Index>(i)] = theta[idx[i]];
  return out;
}

double joint_objective(const TrimmedProblem& prob, const Vector& theta, const WeightVector& w) {
  const auto& st = prob.structure;
  double pen = 0.0;
  if (prob.lambda > 0.0 && !st.penalized.empty())
    pen = prob.lambda * weighted_l1(gather(theta, st.penalized), w.entries);
  return st.loss->value(theta) + pen;
}

double reduced_objective(const TrimmedProblem& prob, const Vector& theta) {
  const auto& st = prob.structure;
  double pen = 0.0;
  if (prob.lambda > 0.0 && !st.penalized.empty())
    pen = prob.lambda * trimmed_l1(gather(theta, st.penalized), prob.trim_count);
  return st.loss->value(theta) + pen;
}

double stationarity_measure(const TrimmedProblem& prob, const Vector& theta,
                            const WeightVector& w) {
  const auto& st = prob.structure;
  validate_problem_structure(st);
  Vector grad(theta.size());
  st.loss->value_grad(theta, grad);
  return stationarity_from_grad(grad, theta, w, prob.lambda, st.penalized);
}

double stationarity_measure(const TrimmedProblem& prob, const Vector& theta,
                            const WeightVector& w, const Vector& grad) {
  return stationarity_from_grad(grad, theta, w, prob.lambda, prob.structure.penalized);
}

SolveResult solve_bcd(const TrimmedProblem& prob, const BcdConfig& cfg, const Vector* init_theta,
                      const WeightVector* init_w) {
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
  if (st.symmetrize && m > 0 && h >= m)
    throw std::invalid_argument(
        "graphical problems need h < p(p-1): trimming every off-diagonal entry removes the penalty");
  if (cfg.max_iters < 1) throw std::invalid_argument("max_iters must be positive");
  if (!(cfg.tol_stationarity >= 0.0)) throw std::invalid_argument("tol_stationarity must be >= 0");

  Vector theta = init_theta ? *init_theta : st.initial_point;
  if (theta.size() != d) throw std::invalid_argument("initial theta dimension mismatch");
  if (st.symmetrize) symmetrize_vec(theta, st.matrix_side);
  if (!loss.in_domain(theta))
    throw std::invalid_argument("initial theta is outside the loss domain");

  WeightVector w;
  w.trim_count = h;
  if (init_w) {
    if (init_w->entries.size() != m || init_w->trim_count != h)
      throw std::invalid_argument("initial weights do not match the penalized set / trim count");
    if (!on_capped_simplex(init_w->entries, h, 1e-8))
      throw std::invalid_argument("initial weights are not on the capped simplex");
    w.entries = init_w->entries.cwiseMax(0.0).cwiseMin(1.0);
  } else {
    // Neutral start: the center of the capped simplex.
    w.entries = m > 0 ? Vector::Constant(m, static_cast<double>(m - h) / static_cast<double>(m))
                      : Vector(0);
  }

  const bool backtrack = loss.needs_backtracking();
  const double Lf = cfg.eta > 0.0 ? 1.0 / cfg.eta : loss.lipschitz();
  const double eta0 = cfg.eta > 0.0 ? cfg.eta : 1.0 / Lf;
  const double tau = cfg.tau > 0.0 ? cfg.tau : (lambda > 0.0 ? 1.0 / lambda : 1.0);

  SolveResult res;
  res.lipschitz = Lf;
  res.eta = eta0;
  res.tau = tau;

  Vector grad(d);
  double val = loss.value_grad(theta, grad);
  const bool penalize = lambda > 0.0 && m > 0;
  double F = val + (penalize ? lambda * weighted_l1(gather(theta, st.penalized), w.entries) : 0.0);
  double T = stationarity_from_grad(grad, theta, w, lambda, st.penalized);
  res.trace.push_back({0, F,
                       val + (penalize ? lambda * trimmed_l1(gather(theta, st.penalized), h) : 0.0),
                       0.0, T, 0.0, 0.0});

  res.stop = StopReason::MaxIterations;
  Index plateau_run = 0;

  if (T <= cfg.tol_stationarity) {
    res.stop = StopReason::Stationary;
  } else {
    for (Index k = 0; k < cfg.max_iters; ++k) {
      // Weight block: one projected step (or the exact minimizer) at theta^k.
      // With h = 0 or lambda = 0 the weight block is a single feasible point.
      // The certified decrease differs by mode: the projected step obeys the
      // three-point bound (lambda/tau)||dw||^2, while the exact minimizer's
      // guarantee is its actual (linear) decrease.
      Vector w_new = w.entries;
      double dw = 0.0;
      double w_certificate = 0.0;
      if (penalize && h > 0) {
        const Vector r_abs = gather(theta, st.penalized).cwiseAbs();
        if (cfg.weight_step == WeightStep::Projected) {
          const Vector z = w.entries - tau * r_abs;
          w_new = project_capped_simplex(z, h);
        } else {
          w_new = optimal_weights(r_abs, h).entries;
        }
        if (st.symmetrize) pair_average(w_new, st.penalized, st.matrix_side);
        dw = (w_new - w.entries).norm();
        w_certificate = cfg.weight_step == WeightStep::Projected
                            ? (lambda / tau) * dw * dw
                            : std::max(0.0, lambda * r_abs.dot(w.entries - w_new));
      }

      // Theta block: proximal gradient step against the new weights.
      const Vector w_full = expand_weights(w_new, st.penalized, d);
      double eta_k = backtrack ? 1.0 / loss.local_lipschitz(theta) : eta0;
      Vector cand, grad_new(d);
      double val_new = 0.0;
      bool accepted = false;
      for (int bt = 0; bt < 80; ++bt) {
        cand = prox_weighted_l1(theta - eta_k * grad, w_full, lambda * eta_k);
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
      const double F_new =
          val_new + (penalize ? lambda * weighted_l1(gather(cand, st.penalized), w_new) : 0.0);
      if (!std::isfinite(F_new))
        throw DivergenceError("objective is no longer finite", res.trace);
      const double cert = dth * dth / (2.0 * eta_k) + w_certificate;

      theta = std::move(cand);
      w.entries = std::move(w_new);
      grad = std::move(grad_new);
      val = val_new;
      res.eta = eta_k;
      T = stationarity_from_grad(grad, theta, w, lambda, st.penalized);
      const double reduced =
          val + (penalize ? lambda * trimmed_l1(gather(theta, st.penalized), h) : 0.0);
      res.trace.push_back({k + 1, F_new, reduced, cert, T, dth, dw});
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
  res.weights = std::move(w);
  res.objective = F;
  res.objective_reduced = res.trace.back().objective_reduced;
  res.stationarity = T;
  return res;
}

bool certificate_holds(const std::vector<IterationRecord>& trace, double tol) {
  for (std::size_t k = 0; k + 1 < trace.size(); ++k)
    if (trace[k + 1].certificate > trace[k].objective - trace[k + 1].objective + tol) return false;
  return true;
}

bool rate_bound_holds(const SolveResult& res, double lambda, double tol) {
  const auto& trace = res.trace;
  const auto steps = static_cast<Index>(trace.size()) - 1;
  if (steps < 2) return true;
  const Index K = steps - 1;  // iterates 1..K, the final point is K+1
  double min_T = std::numeric_limits<double>::infinity();
  for (Index k = 1; k <= K; ++k)
    min_T = std::min(min_T, trace[static_cast<std::size_t>(k)].stationarity);
  const double progress = trace[1].objective - trace.back().objective;
  const double rhs =
      (4.0 + 2.0 * lambda / res.lipschitz) * progress / static_cast<double>(K) + tol;
  return min_T <= rhs;
}

}  // namespace trimreg
