// Copyright (c) 2026 trimreg developers.
// SPDX-License-Identifier: Apache-2.0
#include "penalty.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace trimreg {

namespace {

void check_trim_count(Index m, Index h) {
  if (h < 0 || h > m)
    throw std::invalid_argument("trim count must satisfy 0 <= h <= dimension, got h=" +
                                std::to_string(h) + " for dimension " + std::to_string(m));
}

}  // namespace

bool on_capped_simplex(const Vector& entries, Index h, double tol) {
  if (h < 0 || h > entries.size()) return false;
  for (Index i = 0; i < entries.size(); ++i)
    if (!(entries[i] >= -tol && entries[i] <= 1.0 + tol)) return false;
  const double target = static_cast<double>(entries.size() - h);
  return std::abs(entries.sum() - target) <= tol * std::max(1.0, target);
}

std::vector<Index> top_h_indices(const Vector& theta, Index h) {
  check_trim_count(theta.size(), h);
  std::vector<Index> order(static_cast<std::size_t>(theta.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::partial_sort(order.begin(), order.begin() + h, order.end(), [&](Index a, Index b) {
    const double va = std::abs(theta[a]), vb = std::abs(theta[b]);
    if (va != vb) return va > vb;
    return a < b;
  });
  order.resize(static_cast<std::size_t>(h));
  return order;
}

double trimmed_l1(const Vector& theta, Index h) {
  check_trim_count(theta.size(), h);
  const Index m = theta.size();
  if (h == 0) return theta.cwiseAbs().sum();
  if (h == m) return 0.0;
  std::vector<double> mags(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) mags[static_cast<std::size_t>(i)] = std::abs(theta[i]);
  std::nth_element(mags.begin(), mags.begin() + (m - h), mags.end());
  return std::accumulate(mags.begin(), mags.begin() + (m - h), 0.0);
}

double weighted_l1(const Vector& theta, const Vector& w) {
  if (theta.size() != w.size())
    throw std::invalid_argument("weighted_l1: size mismatch " + std::to_string(theta.size()) +
                                " vs " + std::to_string(w.size()));
  return w.dot(theta.cwiseAbs());
}

WeightVector optimal_weights(const Vector& theta, Index h) {
  WeightVector w;
  w.trim_count = h;
  w.entries = Vector::Ones(theta.size());
  for (Index i : top_h_indices(theta, h)) w.entries[i] = 0.0;
  return w;
}

Vector project_capped_simplex(const Vector& z, Index h) {
  const Index m = z.size();
  check_trim_count(m, h);
  const double target = static_cast<double>(m - h);
  if (h == 0) return Vector::Ones(m);
  if (h == m) return Vector::Zero(m);

  const auto mass = [&](double mu) {
    double s = 0.0;
    for (Index i = 0; i < m; ++i) s += std::clamp(z[i] - mu, 0.0, 1.0);
    return s;
  };

  // mass(mu) is continuous and non-increasing, equal to m at lo and 0 at hi.
  double lo = z.minCoeff() - 1.0, hi = z.maxCoeff();
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo) + std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (mass(mid) >= target ? lo : hi) = mid;
  }
  double mu = 0.5 * (lo + hi);

  // Exact shift from the active pattern at the bisected mu: free coordinates
  // carry z_i - mu, so mu = (sum of free z_i - remaining mass) / #free.
  const double band = 1e-9 * std::max(1.0, z.cwiseAbs().maxCoeff());
  double free_sum = 0.0, fixed_mass = 0.0;
  Index free_count = 0;
  for (Index i = 0; i < m; ++i) {
    const double d = z[i] - mu;
    if (d >= 1.0 - band) {
      fixed_mass += 1.0;
    } else if (d > band) {
      free_sum += z[i];
      ++free_count;
    }
  }
  if (free_count > 0) mu = (free_sum - (target - fixed_mass)) / static_cast<double>(free_count);

  Vector w(m);
  for (Index i = 0; i < m; ++i) w[i] = std::clamp(z[i] - mu, 0.0, 1.0);

  // Spread any residual over the strictly free coordinates.
  const double err = w.sum() - target;
  if (err != 0.0 && free_count > 0) {
    const double shift = err / static_cast<double>(free_count);
    for (Index i = 0; i < m; ++i)
      if (w[i] > band && w[i] < 1.0 - band) w[i] = std::clamp(w[i] - shift, 0.0, 1.0);
  }
  return w;
}

Vector prox_weighted_l1(const Vector& z, const Vector& w, double t) {
  if (z.size() != w.size())
    throw std::invalid_argument("prox_weighted_l1: size mismatch " + std::to_string(z.size()) +
                                " vs " + std::to_string(w.size()));
  if (!(t >= 0.0) || !std::isfinite(t))
    throw std::invalid_argument("prox_weighted_l1: step t must be finite and >= 0");
  Vector out(z.size());
  for (Index i = 0; i < z.size(); ++i) {
    const double cut = t * w[i];
    const double mag = std::abs(z[i]) - cut;
    out[i] = mag > 0.0 ? (z[i] > 0.0 ? mag : -mag) : 0.0;
  }
  return out;
}

}  // namespace trimreg
