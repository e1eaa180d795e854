// Copyright (c) 2026 trimreg developers.
// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "penalty.hpp"
#include "rng.hpp"

using namespace trimreg;

namespace {
Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}
}  // namespace

TEST_CASE("trimmed value drops the largest magnitudes") {
  const Vector theta = vec({3.0, -1.0, 2.0});
  CHECK(trimmed_l1(theta, 0) == doctest::Approx(6.0));
  CHECK(trimmed_l1(theta, 1) == doctest::Approx(3.0));  // keeps |-1| + |2|
  CHECK(trimmed_l1(theta, 2) == doctest::Approx(1.0));
  CHECK(trimmed_l1(theta, 3) == doctest::Approx(0.0));
  CHECK_THROWS_AS(trimmed_l1(theta, 4), std::invalid_argument);
  CHECK_THROWS_AS(trimmed_l1(theta, -1), std::invalid_argument);
}

TEST_CASE("trimmed value equals sorted-tail sum on random vectors") {
  Rng rng(11);
  for (int rep = 0; rep < 200; ++rep) {
    const Index m = 1 + static_cast<Index>(rng.below(12));
    Vector theta(m);
    rng.fill_normal(theta);
    const Index h = static_cast<Index>(rng.below(static_cast<std::uint64_t>(m) + 1));
    std::vector<double> mags;
    for (Index i = 0; i < m; ++i) mags.push_back(std::abs(theta[i]));
    std::sort(mags.begin(), mags.end());
    double tail = 0.0;
    for (Index i = 0; i < m - h; ++i) tail += mags[static_cast<std::size_t>(i)];
    CHECK(trimmed_l1(theta, h) == doctest::Approx(tail).epsilon(1e-12));
  }
}

TEST_CASE("top indices rank by magnitude then position") {
  const auto top = top_h_indices(vec({3.0, -1.0, 2.0}), 2);
  REQUIRE(top.size() == 2);
  CHECK(top[0] == 0);
  CHECK(top[1] == 2);
  // Tie between equal magnitudes goes to the earlier index.
  const auto tie = top_h_indices(vec({5.0, 5.0}), 1);
  CHECK(tie[0] == 0);
}

TEST_CASE("optimal weights zero out the trimmed entries and attain the value") {
  const Vector theta = vec({3.0, -1.0, 2.0});
  const WeightVector w = optimal_weights(theta, 1);
  CHECK(w.entries[0] == 0.0);
  CHECK(w.entries[1] == 1.0);
  CHECK(w.entries[2] == 1.0);
  CHECK(on_capped_simplex(w.entries, 1));
  CHECK(weighted_l1(theta, w.entries) == doctest::Approx(trimmed_l1(theta, 1)));

  const WeightVector tie = optimal_weights(vec({5.0, 5.0}), 1);
  CHECK(tie.entries[0] == 0.0);
  CHECK(tie.entries[1] == 1.0);

  // On random vectors the weighted sum at the optimal weights matches the
  // trimmed value, and no feasible w does better than a few random ones.
  Rng rng(5);
  for (int rep = 0; rep < 100; ++rep) {
    const Index m = 2 + static_cast<Index>(rng.below(8));
    Vector theta_r(m);
    rng.fill_normal(theta_r);
    const Index h = static_cast<Index>(rng.below(static_cast<std::uint64_t>(m) + 1));
    const WeightVector opt = optimal_weights(theta_r, h);
    CHECK(on_capped_simplex(opt.entries, h));
    CHECK(weighted_l1(theta_r, opt.entries) == doctest::Approx(trimmed_l1(theta_r, h)));
    for (int probe = 0; probe < 10; ++probe) {
      Vector z(m);
      for (Index i = 0; i < m; ++i) z[i] = rng.uniform() * 2.0 - 0.5;
      const Vector w_probe = project_capped_simplex(z, h);
      CHECK(weighted_l1(theta_r, w_probe) >= trimmed_l1(theta_r, h) - 1e-9);
    }
  }
}

TEST_CASE("projection matches hand-computed points") {
  const Vector inside = project_capped_simplex(vec({0.5, 0.5, 0.5}), 1);
  CHECK(inside[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(inside[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(inside[2] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  const Vector capped = project_capped_simplex(vec({2.0, 0.0, 0.0}), 1);
  CHECK(capped[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(capped[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(capped[2] == doctest::Approx(0.5).epsilon(1e-12));

  // h = 0 and h = m pin the whole box.
  CHECK((project_capped_simplex(vec({0.3, -2.0}), 0) - vec({1.0, 1.0})).norm() == 0.0);
  CHECK((project_capped_simplex(vec({0.3, -2.0}), 2) - vec({0.0, 0.0})).norm() == 0.0);
}

TEST_CASE("projection agrees with active-set enumeration") {
  Rng rng(101);
  for (int rep = 0; rep < 300; ++rep) {
    const Index m = 1 + static_cast<Index>(rng.below(7));
    const Index h = static_cast<Index>(rng.below(static_cast<std::uint64_t>(m) + 1));
    Vector z(m);
    for (Index i = 0; i < m; ++i) z[i] = 3.0 * (rng.uniform() * 2.0 - 1.0);
    const Vector fast = project_capped_simplex(z, h);
    const Vector slow = oracle::project_capped_simplex_bruteforce(z, h);
    CHECK((fast - slow).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(on_capped_simplex(fast, h));
  }
}

TEST_CASE("projection handles clustered and extreme inputs") {
  Rng rng(77);
  for (int rep = 0; rep < 100; ++rep) {
    const Index m = 2 + static_cast<Index>(rng.below(6));
    const Index h = static_cast<Index>(rng.below(static_cast<std::uint64_t>(m) + 1));
    Vector z(m);
    // Many exactly-equal coordinates force degenerate active sets.
    const double base = rng.uniform() * 2.0 - 0.5;
    for (Index i = 0; i < m; ++i) z[i] = rng.below(2) ? base : base + 1.0;
    const Vector fast = project_capped_simplex(z, h);
    const Vector slow = oracle::project_capped_simplex_bruteforce(z, h);
    CHECK((fast - slow).cwiseAbs().maxCoeff() <= 1e-8);
  }
  // Large shifts saturate everything; the sum is exact only up to the
  // rounding floor of the input magnitude.
  const Vector hi = project_capped_simplex(vec({1e9, 1e9 + 1.0, 1e9 + 2.0}), 1);
  CHECK(std::abs(hi.sum() - 2.0) <= 1e9 * 1e-12);
  CHECK(hi.minCoeff() >= 0.0);
  CHECK(hi.maxCoeff() <= 1.0);
}

TEST_CASE("weighted prox soft thresholds coordinate-wise") {
  const Vector out = prox_weighted_l1(vec({2.0, 2.0}), vec({1.0, 0.0}), 0.5);
  CHECK(out[0] == doctest::Approx(1.5));
  CHECK(out[1] == doctest::Approx(2.0));
  CHECK_THROWS_AS(prox_weighted_l1(vec({1.0}), vec({1.0}), -0.1), std::invalid_argument);

  // Against the dense grid oracle, coordinate by coordinate.
  Rng rng(303);
  for (int rep = 0; rep < 200; ++rep) {
    const double z = 4.0 * (rng.uniform() * 2.0 - 1.0);
    const double w = rng.uniform() * 2.0;
    const double t = rng.uniform() * 3.0 + 1e-3;
    Vector zv(1), wv(1);
    zv[0] = z;
    wv[0] = w;
    const double fast = prox_weighted_l1(zv, wv, t)[0];
    const double slow = oracle::grid_minimize(
        [&](double x) { return 0.5 * (x - z) * (x - z) + t * w * std::abs(x); }, -10.0, 10.0);
    CHECK(std::abs(fast - slow) <= 1e-5);
  }
}
