// Copyright (c) 2026 trimreg developers.
// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "baselines.hpp"
#include "oracles.hpp"
#include "rng.hpp"
#include "solver.hpp"

using namespace trimreg;

namespace {

ProblemStructure random_ls(Index n, Index p, std::uint64_t seed) {
  Rng rng(seed);
  Matrix X(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) X(i, j) = rng.normal();
  Vector beta = Vector::Zero(p);
  for (Index j = 0; j < std::min<Index>(3, p); ++j) beta[j] = 2.0 * rng.normal();
  Vector y = X * beta;
  for (Index i = 0; i < n; ++i) y[i] += 0.3 * rng.normal();
  return regression_structure(std::move(X), std::move(y));
}

// Midpoint-rule integral of the derivative from 0 to x; the penalties are
// absolutely continuous with piecewise linear derivatives, so this recovers
// the value independently of the closed form.
double value_by_integration(const BaselinePenalty& pen, double x) {
  const int cells = 20000;
  const double dx = x / cells;
  double acc = 0.0;
  for (int i = 0; i < cells; ++i) acc += pen.derivative((i + 0.5) * dx) * dx;
  return acc;
}

double prox_objective(const BaselinePenalty& pen, double z, double t, double x) {
  return (x - z) * (x - z) / (2.0 * t) + pen.value_scalar(x);
}

}  // namespace

TEST_CASE("penalty parameter validation") {
  BaselinePenalty pen;
  pen.lambda = 0.0;
  CHECK_THROWS_AS(pen.validate(), std::invalid_argument);
  pen.lambda = 1.0;
  CHECK_NOTHROW(pen.validate());

  pen.kind = BaselineKind::Scad;
  pen.a = 2.0;
  CHECK_THROWS_AS(pen.validate(), std::invalid_argument);
  pen.a = 3.7;
  CHECK_NOTHROW(pen.validate());

  pen.kind = BaselineKind::Mcp;
  pen.gamma = 1.0;
  CHECK_THROWS_AS(pen.validate(), std::invalid_argument);
  pen.gamma = 2.5;
  CHECK_NOTHROW(pen.validate());

  CHECK_THROWS_AS(pen.prox_scalar(1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(pen.prox_scalar(1.0, -0.5), std::invalid_argument);
}

TEST_CASE("penalty values at pinned points") {
  BaselinePenalty scad;
  scad.kind = BaselineKind::Scad;
  scad.lambda = 1.0;
  scad.a = 3.0;
  CHECK(scad.value_scalar(0.0) == 0.0);
  CHECK(scad.value_scalar(0.5) == doctest::Approx(0.5));
  CHECK(scad.value_scalar(2.0) == doctest::Approx(1.75));  // quadratic middle piece
  CHECK(scad.value_scalar(5.0) == doctest::Approx(2.0));   // flat tail (a + 1) lambda^2 / 2
  CHECK(scad.value_scalar(-5.0) == doctest::Approx(2.0));

  BaselinePenalty mcp;
  mcp.kind = BaselineKind::Mcp;
  mcp.lambda = 1.0;
  mcp.gamma = 2.5;
  CHECK(mcp.value_scalar(1.0) == doctest::Approx(0.8));
  CHECK(mcp.value_scalar(2.5) == doctest::Approx(1.25));  // knot meets the plateau
  CHECK(mcp.value_scalar(10.0) == doctest::Approx(1.25));
  CHECK(mcp.value_scalar(-1.0) == doctest::Approx(0.8));

  BaselinePenalty l1;
  l1.lambda = 0.7;
  CHECK(l1.value_scalar(-3.0) == doctest::Approx(2.1));
  CHECK(l1.concavity() == 0.0);
  CHECK(scad.concavity() == doctest::Approx(0.5));
  CHECK(mcp.concavity() == doctest::Approx(0.4));
}

TEST_CASE("penalty value integrates its derivative") {
  for (auto kind : {BaselineKind::L1, BaselineKind::Scad, BaselineKind::Mcp}) {
    BaselinePenalty pen;
    pen.kind = kind;
    pen.lambda = 0.8;
    pen.a = 3.2;
    pen.gamma = 2.0;
    for (double x : {0.1, 0.5, 0.79, 1.3, 2.5, 2.56, 4.0, 9.0}) {
      CAPTURE(static_cast<int>(kind));
      CAPTURE(x);
      const double closed = pen.value_scalar(x);
      const double integrated = value_by_integration(pen, x);
      CHECK(std::abs(closed - integrated) <= 1e-6 * (1.0 + std::abs(closed)));
    }
  }
}

TEST_CASE("scalar prox matches grid minimization") {
  Rng rng(501);
  for (auto kind : {BaselineKind::L1, BaselineKind::Scad, BaselineKind::Mcp}) {
    BaselinePenalty pen;
    pen.kind = kind;
    pen.lambda = 0.9;
    pen.a = 3.0;
    pen.gamma = 2.5;
    // Steps straddle the concavity thresholds a - 1 = 2 and gamma = 2.5.
    for (double t : {0.05, 0.4, 1.0, 1.9, 2.0, 2.4, 2.5, 3.5}) {
      const bool degenerate = (kind == BaselineKind::Scad && t >= pen.a - 1.0 - 1e-9) ||
                              (kind == BaselineKind::Mcp && t >= pen.gamma - 1e-9);
      for (int rep = 0; rep < 40; ++rep) {
        const double z = (rng.uniform() * 12.0) - 6.0;
        CAPTURE(static_cast<int>(kind));
        CAPTURE(t);
        CAPTURE(z);
        const double fast = pen.prox_scalar(z, t);
        const double span = std::abs(z) + 1.0;
        const double slow = oracle::grid_minimize(
            [&](double x) { return prox_objective(pen, z, t, x); }, -span, span);
        // The prox must attain the grid minimum; away from the degenerate
        // steps the minimizer is unique and the argmins agree too.
        CHECK(prox_objective(pen, z, t, fast) <= prox_objective(pen, z, t, slow) + 1e-8);
        if (!degenerate) CHECK(std::abs(fast - slow) <= 1e-5);
      }
    }
  }
}

TEST_CASE("prox is odd, shrinking, and unbiased in the tail") {
  BaselinePenalty scad;
  scad.kind = BaselineKind::Scad;
  scad.lambda = 1.0;
  scad.a = 3.0;
  BaselinePenalty mcp;
  mcp.kind = BaselineKind::Mcp;
  mcp.lambda = 1.0;
  mcp.gamma = 2.5;

  Rng rng(502);
  for (int rep = 0; rep < 200; ++rep) {
    const double z = (rng.uniform() * 10.0) - 5.0;
    const double t = 0.05 + rng.uniform();
    for (const auto& pen : {scad, mcp}) {
      const double x = pen.prox_scalar(z, t);
      CHECK(pen.prox_scalar(-z, t) == doctest::Approx(-x).epsilon(1e-12));
      CHECK(std::abs(x) <= std::abs(z) + 1e-12);
    }
  }
  // Beyond the flat region the penalty exerts no pull at all.
  CHECK(scad.prox_scalar(4.0, 0.5) == doctest::Approx(4.0));
  CHECK(mcp.prox_scalar(3.0, 0.5) == doctest::Approx(3.0));
  // Inner region: SCAD soft thresholds, MCP applies the firm rescale
  // gamma * S(z, t lambda) / (gamma - t).
  CHECK(scad.prox_scalar(1.2, 0.3) == doctest::Approx(0.9));
  CHECK(mcp.prox_scalar(0.8, 0.2) == doctest::Approx(2.5 * 0.6 / 2.3).epsilon(1e-9));
}

TEST_CASE("l1 proximal gradient solves the lasso") {
  Rng rng(31);
  const Index n = 40, p = 9;
  Matrix X(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) X(i, j) = rng.normal();
  Vector beta = Vector::Zero(p);
  beta[1] = 2.0;
  beta[5] = -1.0;
  Vector y = X * beta;
  for (Index i = 0; i < n; ++i) y[i] += 0.25 * rng.normal();
  auto st = regression_structure(X, y);

  BaselinePenalty pen;
  pen.lambda = 0.4;
  BcdConfig cfg;
  cfg.tol_stationarity = 1e-20;
  cfg.max_iters = 500000;
  const SolveResult res = solve_prox_gradient(st, pen, cfg);

  CHECK(res.stop == StopReason::Stationary);
  const Vector cd = oracle::weighted_lasso_cd(X, y, Vector::Ones(p), pen.lambda);
  CHECK((res.theta - cd).lpNorm<Eigen::Infinity>() <= 1e-6);
  CHECK(certificate_holds(res.trace, 1e-8));
  for (std::size_t k = 1; k < res.trace.size(); ++k)
    CHECK(res.trace[k].objective <= res.trace[k - 1].objective + 1e-8);
  CHECK(res.objective == doctest::Approx(res.objective_reduced).epsilon(1e-15));
}

TEST_CASE("nonconvex baselines reach first order stationary points") {
  auto st = random_ls(60, 12, 717);
  for (auto kind : {BaselineKind::Scad, BaselineKind::Mcp}) {
    CAPTURE(static_cast<int>(kind));
    BaselinePenalty pen;
    pen.kind = kind;
    pen.lambda = 0.5;
    BcdConfig cfg;
    cfg.tol_stationarity = 1e-16;
    cfg.max_iters = 200000;
    const SolveResult res = solve_prox_gradient(st, pen, cfg);
    CHECK(res.stop == StopReason::Stationary);
    CHECK(certificate_holds(res.trace, 1e-8));

    Vector grad(res.theta.size());
    st.loss->value_grad(res.theta, grad);
    for (Index j = 0; j < res.theta.size(); ++j) {
      if (res.theta[j] != 0.0)
        CHECK(std::abs(grad[j] + pen.derivative(res.theta[j])) <= 1e-6);
      else
        CHECK(std::abs(grad[j]) <= pen.lambda + 1e-9);
    }
  }
}

TEST_CASE("difference of convex descent decreases the trimmed objective") {
  TrimmedProblem prob{random_ls(50, 10, 808), 1.2, 3};
  BcdConfig cfg;
  cfg.tol_stationarity = 1e-14;
  cfg.max_iters = 100000;
  const SolveResult res = solve_dc_trimmed(prob, cfg);

  CHECK(res.stop == StopReason::Stationary);
  CHECK(certificate_holds(res.trace, 1e-8));
  for (std::size_t k = 1; k < res.trace.size(); ++k)
    CHECK(res.trace[k].objective <= res.trace[k - 1].objective + 1e-8);
  // The trace carries the true trimmed objective, not a surrogate.
  CHECK(res.objective == doctest::Approx(reduced_objective(prob, res.theta)).epsilon(1e-12));
  CHECK(res.objective == doctest::Approx(res.objective_reduced).epsilon(1e-15));
}

TEST_CASE("dc with no trimming is the lasso") {
  Rng rng(32);
  const Index n = 35, p = 7;
  Matrix X(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) X(i, j) = rng.normal();
  Vector y(n);
  rng.fill_normal(y);
  TrimmedProblem prob{regression_structure(X, y), 0.6, 0};
  BcdConfig cfg;
  cfg.tol_stationarity = 1e-20;
  cfg.max_iters = 500000;
  const SolveResult res = solve_dc_trimmed(prob, cfg);
  const Vector cd = oracle::weighted_lasso_cd(X, y, Vector::Ones(p), prob.lambda);
  CHECK((res.theta - cd).lpNorm<Eigen::Infinity>() <= 1e-6);
}

TEST_CASE("dc validates its inputs") {
  TrimmedProblem prob{random_ls(20, 5, 1), 1.0, 2};
  prob.trim_count = 6;
  CHECK_THROWS_AS(solve_dc_trimmed(prob), std::invalid_argument);
  prob.trim_count = 2;
  prob.lambda = -1.0;
  CHECK_THROWS_AS(solve_dc_trimmed(prob), std::invalid_argument);
}

TEST_CASE("graphical lasso via proximal gradient stays in the cone") {
  Rng rng(33);
  const Index p = 4;
  Matrix M(p, p);
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < p; ++j) M(i, j) = rng.normal();
  const Matrix S = M * M.transpose() / static_cast<double>(p) + 0.4 * Matrix::Identity(p, p);

  BaselinePenalty pen;
  pen.lambda = 0.3;
  BcdConfig cfg;
  cfg.tol_stationarity = 1e-12;
  cfg.max_iters = 50000;
  const SolveResult res = solve_prox_gradient(graphical_structure(S), pen, cfg);

  CHECK(res.stop == StopReason::Stationary);
  const Matrix theta = Eigen::Map<const Matrix>(res.theta.data(), p, p);
  CHECK((theta - theta.transpose()).lpNorm<Eigen::Infinity>() <= 1e-12);
  Eigen::SelfAdjointEigenSolver<Matrix> es(theta);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
  CHECK(certificate_holds(res.trace, 1e-8));
}
