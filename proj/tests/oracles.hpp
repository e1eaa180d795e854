// Copyright (c) 2026 trimreg developers.
// SPDX-License-Identifier: Apache-2.0
//
// Reference implementations used only by tests. Everything here is written
// for transparency over speed: exhaustive enumeration, dense grids and
// textbook algorithms that are easy to audit independently of the library.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "types.hpp"

namespace oracle {

using trimreg::Index;
using trimreg::Matrix;
using trimreg::Vector;

// Projection onto {w in [0,1]^m : sum w = m - h} by enumerating all 3^m
// active-set patterns (each coordinate pinned at 0, pinned at 1, or free with
// a common shift). The optimum is feasible under its own pattern, so the
// feasible candidate with the smallest distance is the projection.
inline Vector project_capped_simplex_bruteforce(const Vector& z, Index h) {
  const Index m = z.size();
  const double target = static_cast<double>(m - h);
  if (h == 0) return Vector::Ones(m);
  if (h == m) return Vector::Zero(m);

  Vector best;
  double best_dist = std::numeric_limits<double>::infinity();
  std::vector<int> pattern(static_cast<std::size_t>(m), 0);
  long total = 1;
  for (Index i = 0; i < m; ++i) total *= 3;

  for (long code = 0; code < total; ++code) {
    long c = code;
    double fixed = 0.0, free_sum = 0.0;
    Index free_count = 0;
    for (Index i = 0; i < m; ++i) {
      pattern[static_cast<std::size_t>(i)] = static_cast<int>(c % 3);
      c /= 3;
      if (pattern[static_cast<std::size_t>(i)] == 1) fixed += 1.0;
      if (pattern[static_cast<std::size_t>(i)] == 2) {
        free_sum += z[i];
        ++free_count;
      }
    }
    Vector w(m);
    if (free_count == 0) {
      if (std::abs(fixed - target) > 1e-12) continue;
      for (Index i = 0; i < m; ++i) w[i] = pattern[static_cast<std::size_t>(i)] == 1 ? 1.0 : 0.0;
    } else {
      const double mu = (free_sum - (target - fixed)) / static_cast<double>(free_count);
      bool ok = true;
      for (Index i = 0; i < m; ++i) {
        const int pi = pattern[static_cast<std::size_t>(i)];
        w[i] = pi == 1 ? 1.0 : (pi == 0 ? 0.0 : z[i] - mu);
        if (pi == 2 && (w[i] < -1e-12 || w[i] > 1.0 + 1e-12)) ok = false;
      }
      if (!ok) continue;
      for (Index i = 0; i < m; ++i) w[i] = std::min(1.0, std::max(0.0, w[i]));
    }
    const double dist = (w - z).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = w;
    }
  }
  if (best.size() == 0) throw std::logic_error("no feasible pattern found");
  return best;
}

// Dense grid minimization with repeated refinement around the incumbent.
// Resolves the argmin of a piecewise-smooth univariate function to roughly
// (hi - lo) * 1e-10.
inline double grid_minimize(const std::function<double(double)>& f, double lo, double hi) {
  const int n = 20000;
  const double dom_lo = lo, dom_hi = hi;  // refinement never leaves the domain
  double best_x = lo, best_v = std::numeric_limits<double>::infinity();
  for (int round = 0; round < 6; ++round) {
    const double step = (hi - lo) / n;
    for (int i = 0; i <= n; ++i) {
      const double x = lo + step * static_cast<double>(i);
      const double v = f(x);
      if (v < best_v) {
        best_v = v;
        best_x = x;
      }
    }
    lo = std::max(dom_lo, best_x - 2.0 * step);
    hi = std::min(dom_hi, best_x + 2.0 * step);
  }
  return best_x;
}

// Central finite differences.
inline Vector finite_difference_gradient(const std::function<double(const Vector&)>& f,
                                         const Vector& x, double step) {
  Vector g(x.size());
  Vector xp = x;
  for (Index i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    xp[i] = xi + step;
    const double fp = f(xp);
    xp[i] = xi - step;
    const double fm = f(xp);
    xp[i] = xi;
    g[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

inline double largest_eigenvalue(const Matrix& A) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (A + A.transpose()));
  return es.eigenvalues().maxCoeff();
}

inline Matrix inverse_lu(const Matrix& A) {
  return Eigen::FullPivLU<Matrix>(A).inverse();
}

// Cyclic coordinate descent for (1/n)||y - X theta||^2 + lambda sum_i w_i
// |theta_i|, run until a full sweep moves no coordinate by more than tol.
// The subproblem minimizer is a soft threshold:
//   theta_i = S(x_i^T r_{-i}, n lambda w_i / 2) / ||x_i||^2.
inline Vector weighted_lasso_cd(const Matrix& X, const Vector& y, const Vector& weights,
                                double lambda, Index max_sweeps = 100000, double tol = 1e-13) {
  const Index n = X.rows(), p = X.cols();
  Vector theta = Vector::Zero(p);
  Vector r = y;
  Vector col_sq(p);
  for (Index j = 0; j < p; ++j) col_sq[j] = X.col(j).squaredNorm();
  const double scale = 1.0 + y.norm();

  for (Index sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_move = 0.0;
    for (Index j = 0; j < p; ++j) {
      if (col_sq[j] <= 0.0) continue;
      const double rho = X.col(j).dot(r) + col_sq[j] * theta[j];
      const double cut = static_cast<double>(n) * lambda * weights[j] / 2.0;
      const double soft = std::abs(rho) <= cut ? 0.0 : (rho > 0 ? rho - cut : rho + cut);
      const double next = soft / col_sq[j];
      const double move = next - theta[j];
      if (move != 0.0) {
        r -= move * X.col(j);
        theta[j] = next;
      }
      max_move = std::max(max_move, std::abs(move));
    }
    if (max_move <= tol * scale) break;
  }
  return theta;
}

// Visits every size-h subset of {0, ..., p-1} in lexicographic order.
inline void for_each_subset(Index p, Index h,
                            const std::function<void(const std::vector<Index>&)>& fn) {
  std::vector<Index> pick(static_cast<std::size_t>(h));
  std::function<void(Index, Index)> rec = [&](Index start, Index depth) {
    if (depth == h) {
      fn(pick);
      return;
    }
    for (Index i = start; i <= p - (h - depth); ++i) {
      pick[static_cast<std::size_t>(depth)] = i;
      rec(i + 1, depth + 1);
    }
  };
  if (h == 0) {
    fn({});
    return;
  }
  rec(0, 0);
}

}  // namespace oracle
