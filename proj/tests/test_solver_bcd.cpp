// Copyright (c) 2026 trimreg developers.
// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "baselines.hpp"
#include "oracles.hpp"
#include "rng.hpp"
#include "solver.hpp"

using namespace trimreg;

namespace {

// Random tall least squares instance with a sparse planted signal.
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

// Feasible random weights covering all three box classes.
WeightVector random_weights(Index m, Index h, std::uint64_t seed) {
  Rng rng(seed);
  Vector z(m);
  for (Index i = 0; i < m; ++i) z[i] = 2.0 * rng.uniform() - 0.5;
  WeightVector w;
  w.trim_count = h;
  w.entries = project_capped_simplex(z, h);
  return w;
}

// Reconstructs the stationarity measure from its definition with grid
// searches standing in for the closed forms: the theta block minimizes
// |g + lambda w s| over subgradients s of |theta_j|, the weight block
// minimizes the per-class box violations over the scalar multiplier mu.
double stationarity_grid_oracle(const TrimmedProblem& prob, const Vector& theta,
                                const WeightVector& w) {
  const auto& st = prob.structure;
  Vector grad(theta.size());
  st.loss->value_grad(theta, grad);
  const double lambda = prob.lambda;

  double total = 0.0;
  std::size_t t = 0;
  for (Index j = 0; j < theta.size(); ++j) {
    double u;
    if (t < st.penalized.size() && st.penalized[t] == j) {
      const double a = lambda * w.entries[static_cast<Index>(t)];
      if (theta[j] == 0.0) {
        const double s =
            oracle::grid_minimize([&](double x) { return std::abs(grad[j] + a * x); }, -1.0, 1.0);
        u = std::abs(grad[j] + a * s);
      } else {
        u = grad[j] + (theta[j] > 0.0 ? a : -a);
      }
      ++t;
    } else {
      u = grad[j];
    }
    total += u * u;
  }

  if (lambda == 0.0 || st.penalized.empty()) return total;

  const Index m = static_cast<Index>(st.penalized.size());
  Vector a(m);
  for (Index i = 0; i < m; ++i) a[i] = lambda * std::abs(theta[st.penalized[static_cast<std::size_t>(i)]]);
  constexpr double wtol = 1e-10;
  const auto block = [&](double mu) {
    double s = 0.0;
    for (Index i = 0; i < m; ++i) {
      const double r = a[i] + mu;
      const double wi = w.entries[i];
      if (wi <= wtol)
        s += std::min(0.0, r) * std::min(0.0, r);
      else if (wi >= 1.0 - wtol)
        s += std::max(0.0, r) * std::max(0.0, r);
      else
        s += r * r;
    }
    return s;
  };
  const double span = a.maxCoeff() + 1.0;
  const double mu = oracle::grid_minimize(block, -span, 1.0);
  return total + block(mu);
}

Matrix reshape(const Vector& v, Index s) {
  return Eigen::Map<const Matrix>(v.data(), s, s);
}

}  // namespace

TEST_CASE("stationarity measure matches a grid oracle") {
  for (int trial = 0; trial < 60; ++trial) {
    const Index p = 4 + trial % 5;
    auto st = random_ls(25, p, 900 + static_cast<std::uint64_t>(trial));
    Rng rng(7000 + static_cast<std::uint64_t>(trial));
    Vector theta(p);
    for (Index j = 0; j < p; ++j) {
      theta[j] = rng.normal();
      if (rng.uniform() < 0.35) theta[j] = 0.0;  // exercise the subgradient branch
    }
    const double lambda = (trial % 3 == 0) ? 0.3 : (trial % 3 == 1 ? 1.0 : 3.0);
    const Index h = static_cast<Index>(trial % (p + 1));
    TrimmedProblem prob{st, lambda, h};
    const WeightVector w = random_weights(p, h, 5000 + static_cast<std::uint64_t>(trial));

    const double lib = stationarity_measure(prob, theta, w);
    const double ref = stationarity_grid_oracle(prob, theta, w);
    CHECK(std::abs(lib - ref) <= 1e-8 * (1.0 + std::abs(ref)));
  }
}

TEST_CASE("stationarity with lambda zero is the squared gradient norm") {
  auto st = random_ls(20, 5, 42);
  TrimmedProblem prob{st, 0.0, 2};
  Rng rng(43);
  Vector theta(5);
  rng.fill_normal(theta);
  const WeightVector w = random_weights(5, 2, 44);
  Vector grad(5);
  st.loss->value_grad(theta, grad);
  CHECK(stationarity_measure(prob, theta, w) ==
        doctest::Approx(grad.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("unpenalized and fully trimmed solves reach the least squares optimum") {
  Rng rng(11);
  const Index n = 40, p = 6;
  Matrix X(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) X(i, j) = rng.normal();
  Vector y(n);
  rng.fill_normal(y);
  const Matrix gram = X.transpose() * X;
  const Vector star = oracle::inverse_lu(gram) * (X.transpose() * y);

  BcdConfig cfg;
  cfg.tol_stationarity = 1e-18;
  cfg.max_iters = 200000;

  SUBCASE("lambda = 0") {
    TrimmedProblem prob{regression_structure(X, y), 0.0, 0};
    const SolveResult res = solve_bcd(prob, cfg);
    CHECK(res.stop == StopReason::Stationary);
    CHECK((res.theta - star).lpNorm<Eigen::Infinity>() <= 1e-7);
  }
  SUBCASE("h = p removes the penalty") {
    TrimmedProblem prob{regression_structure(X, y), 3.0, p};
    const SolveResult res = solve_bcd(prob, cfg);
    CHECK(res.stop == StopReason::Stationary);
    CHECK((res.theta - star).lpNorm<Eigen::Infinity>() <= 1e-7);
    // With every coordinate trimmed the weights carry no mass.
    CHECK(res.weights.entries.lpNorm<Eigen::Infinity>() <= 1e-12);
    CHECK(res.objective == doctest::Approx(res.objective_reduced).epsilon(1e-12));
  }
}

TEST_CASE("h = 0 solves the lasso") {
  Rng rng(21);
  const Index n = 50, p = 10;
  Matrix X(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) X(i, j) = rng.normal();
  Vector beta = Vector::Zero(p);
  beta[0] = 3.0;
  beta[3] = -2.0;
  beta[7] = 1.5;
  Vector y = X * beta;
  for (Index i = 0; i < n; ++i) y[i] += 0.2 * rng.normal();

  BcdConfig cfg;
  cfg.tol_stationarity = 1e-20;
  cfg.max_iters = 500000;

  for (double lambda : {0.2, 1.0}) {
    CAPTURE(lambda);
    TrimmedProblem prob{regression_structure(X, y), lambda, 0};
    const SolveResult res = solve_bcd(prob, cfg);
    const Vector cd = oracle::weighted_lasso_cd(X, y, Vector::Ones(p), lambda);
    CHECK((res.theta - cd).lpNorm<Eigen::Infinity>() <= 1e-6);
    CHECK(reduced_objective(prob, res.theta) <= reduced_objective(prob, cd) + 1e-9);

    // The dedicated l1 proximal gradient solver lands on the same point.
    BaselinePenalty pen;
    pen.kind = BaselineKind::L1;
    pen.lambda = lambda;
    const SolveResult ista = solve_prox_gradient(prob.structure, pen, cfg);
    CHECK((res.theta - ista.theta).lpNorm<Eigen::Infinity>() <= 1e-7);
  }
}

TEST_CASE("a lambda above the gradient bound yields the zero solution") {
  auto st = random_ls(30, 8, 77);
  Vector grad0(8);
  st.loss->value_grad(Vector::Zero(8), grad0);
  const double lambda = 2.5 * grad0.lpNorm<Eigen::Infinity>();
  TrimmedProblem prob{st, lambda, 0};
  BcdConfig cfg;
  cfg.tol_stationarity = 1e-18;
  const SolveResult res = solve_bcd(prob, cfg);
  CHECK(res.theta.lpNorm<Eigen::Infinity>() <= 1e-10);
  CHECK(res.stop == StopReason::Stationary);
}

TEST_CASE("certificates, monotonicity, and the rate bound hold on random instances") {
  for (int trial = 0; trial < 50; ++trial) {
    const std::uint64_t seed = 3000 + static_cast<std::uint64_t>(trial);
    Rng pick(seed);
    const Index p = 5 + static_cast<Index>(pick.below(11));
    const Index n = 20 + static_cast<Index>(pick.below(41));
    const Index h = static_cast<Index>(pick.below(static_cast<std::uint64_t>(p) + 1));
    const double lambda = (trial % 3 == 0) ? 0.3 : (trial % 3 == 1 ? 1.0 : 3.0);
    CAPTURE(trial);
    CAPTURE(p);
    CAPTURE(h);
    CAPTURE(lambda);

    TrimmedProblem prob{random_ls(n, p, seed * 31 + 1), lambda, h};
    BcdConfig cfg;
    cfg.max_iters = 300;
    cfg.tol_stationarity = 1e-12;
    const SolveResult res = solve_bcd(prob, cfg);

    CHECK(certificate_holds(res.trace, 1e-8));
    CHECK(rate_bound_holds(res, lambda, 1e-6));
    for (std::size_t k = 1; k < res.trace.size(); ++k) {
      const auto& prev = res.trace[k - 1];
      const auto& cur = res.trace[k];
      CHECK(cur.certificate <= prev.objective - cur.objective + 1e-8);
      CHECK(cur.objective <= prev.objective + 1e-8);  // joint objective never increases
      CHECK(cur.objective_reduced <= cur.objective + 1e-10);
    }
    CHECK(on_capped_simplex(res.weights.entries, h, 1e-8));
    CHECK(res.iterations == static_cast<Index>(res.trace.size()) - 1);
    CHECK(res.objective == doctest::Approx(res.trace.back().objective).epsilon(1e-15));
    const double reported = res.stationarity;
    const double recomputed = stationarity_measure(prob, res.theta, res.weights);
    CHECK(std::abs(reported - recomputed) <= 1e-10 * (1.0 + recomputed));
  }
}

TEST_CASE("exact weight steps certify their linear decrease") {
  TrimmedProblem prob{random_ls(40, 8, 555), 1.0, 3};
  BcdConfig cfg;
  cfg.weight_step = WeightStep::Exact;
  cfg.tol_stationarity = 1e-14;
  cfg.max_iters = 50000;
  const SolveResult res = solve_bcd(prob, cfg);

  CHECK(certificate_holds(res.trace, 1e-8));
  for (std::size_t k = 1; k < res.trace.size(); ++k)
    CHECK(res.trace[k].objective <= res.trace[k - 1].objective + 1e-8);
  // The exact minimizer is a vertex of the capped simplex.
  for (Index i = 0; i < res.weights.size(); ++i) {
    const double wi = res.weights.entries[i];
    CHECK(std::min(std::abs(wi), std::abs(wi - 1.0)) <= 1e-12);
  }
  // Optimal weights make the joint and reduced objectives agree.
  CHECK(std::abs(res.objective - res.objective_reduced) <= 1e-10);
  CHECK(res.stop == StopReason::Stationary);
}

TEST_CASE("warm starts are honored and validated") {
  TrimmedProblem prob{random_ls(30, 6, 99), 0.8, 2};
  BcdConfig cfg;
  cfg.tol_stationarity = 1e-16;
  cfg.max_iters = 100000;
  const SolveResult first = solve_bcd(prob, cfg);
  CHECK(first.stop == StopReason::Stationary);

  SUBCASE("restarting at the solution stops immediately") {
    const SolveResult again = solve_bcd(prob, cfg, &first.theta, &first.weights);
    CHECK(again.stop == StopReason::Stationary);
    CHECK(again.iterations == 0);
    CHECK(again.objective == doctest::Approx(first.objective).epsilon(1e-12));
  }
  SUBCASE("the initial trace row reports the warm objective") {
    Rng rng(123);
    Vector theta0(6);
    rng.fill_normal(theta0);
    const WeightVector w0 = random_weights(6, 2, 124);
    const SolveResult res = solve_bcd(prob, cfg, &theta0, &w0);
    CHECK(res.trace[0].objective == doctest::Approx(joint_objective(prob, theta0, w0)));
    CHECK(res.trace[0].iter == 0);
    CHECK(res.trace[0].certificate == 0.0);
  }
  SUBCASE("invalid starts are rejected") {
    Vector bad_theta(5);
    bad_theta.setZero();
    CHECK_THROWS_AS(solve_bcd(prob, cfg, &bad_theta), std::invalid_argument);

    WeightVector bad_count;
    bad_count.trim_count = 1;  // problem has h = 2
    bad_count.entries = Vector::Constant(6, 5.0 / 6.0);
    CHECK_THROWS_AS(solve_bcd(prob, cfg, nullptr, &bad_count), std::invalid_argument);

    WeightVector off_simplex;
    off_simplex.trim_count = 2;
    off_simplex.entries = Vector::Ones(6);  // sums to 6, not 4
    CHECK_THROWS_AS(solve_bcd(prob, cfg, nullptr, &off_simplex), std::invalid_argument);
  }
}

TEST_CASE("configuration validation") {
  TrimmedProblem prob{random_ls(20, 5, 1), 1.0, 2};
  BcdConfig cfg;

  SUBCASE("negative lambda") {
    prob.lambda = -0.5;
    CHECK_THROWS_AS(solve_bcd(prob, cfg), std::invalid_argument);
  }
  SUBCASE("trim count out of range") {
    prob.trim_count = 6;
    CHECK_THROWS_AS(solve_bcd(prob, cfg), std::invalid_argument);
    prob.trim_count = -1;
    CHECK_THROWS_AS(solve_bcd(prob, cfg), std::invalid_argument);
  }
  SUBCASE("non-positive iteration budget") {
    cfg.max_iters = 0;
    CHECK_THROWS_AS(solve_bcd(prob, cfg), std::invalid_argument);
  }
}

TEST_CASE("stopping reasons") {
  TrimmedProblem prob{random_ls(30, 8, 202), 1.0, 3};

  SUBCASE("iteration budget") {
    BcdConfig cfg;
    cfg.max_iters = 3;
    cfg.tol_stationarity = 0.0;
    const SolveResult res = solve_bcd(prob, cfg);
    CHECK(res.stop == StopReason::MaxIterations);
    CHECK(res.iterations == 3);
    CHECK(res.trace.size() == 4);
  }
  SUBCASE("objective plateau") {
    BcdConfig cfg;
    cfg.max_iters = 100000;
    cfg.tol_stationarity = 0.0;  // unreachable, forces the plateau test
    cfg.tol_objective = 1e-9;
    cfg.plateau_span = 4;
    const SolveResult res = solve_bcd(prob, cfg);
    CHECK(res.stop == StopReason::ObjectivePlateau);
    CHECK(res.iterations < 100000);
  }
}

TEST_CASE("graphical solves stay symmetric and positive definite") {
  Rng rng(31);
  const Index p = 4;
  Matrix M(p, p);
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < p; ++j) M(i, j) = rng.normal();
  const Matrix S = M * M.transpose() / static_cast<double>(p) + 0.5 * Matrix::Identity(p, p);

  auto st = graphical_structure(S);
  TrimmedProblem prob{st, 0.2, 2};
  BcdConfig cfg;
  cfg.tol_stationarity = 1e-12;
  cfg.max_iters = 20000;
  const SolveResult res = solve_bcd(prob, cfg);

  CHECK(res.stop == StopReason::Stationary);
  CHECK(certificate_holds(res.trace, 1e-8));
  for (std::size_t k = 1; k < res.trace.size(); ++k)
    CHECK(res.trace[k].objective <= res.trace[k - 1].objective + 1e-8);

  const Matrix theta = reshape(res.theta, p);
  CHECK((theta - theta.transpose()).lpNorm<Eigen::Infinity>() <= 1e-12);
  Eigen::SelfAdjointEigenSolver<Matrix> es(theta);
  CHECK(es.eigenvalues().minCoeff() > 0.0);

  // Weights agree across transpose pairs: entry (i, j) ties to (j, i).
  for (std::size_t t = 0; t < st.penalized.size(); ++t) {
    const Index f = st.penalized[t];
    const Index ft = (f / p) + (f % p) * p;
    const auto it = std::find(st.penalized.begin(), st.penalized.end(), ft);
    REQUIRE(it != st.penalized.end());
    const Index u = static_cast<Index>(it - st.penalized.begin());
    CHECK(res.weights.entries[static_cast<Index>(t)] ==
          doctest::Approx(res.weights.entries[u]).epsilon(1e-12));
  }
}

TEST_CASE("graphical problems reject full trimming and infeasible starts") {
  const Matrix S = Matrix::Identity(3, 3);
  auto st = graphical_structure(S);

  TrimmedProblem full{st, 0.5, 6};  // p(p-1) = 6 off-diagonal entries
  CHECK_THROWS_AS(solve_bcd(full), std::invalid_argument);

  TrimmedProblem ok{st, 0.5, 2};
  Matrix bad = -Matrix::Identity(3, 3);
  Vector bad_vec = Eigen::Map<Vector>(bad.data(), 9);
  CHECK_THROWS_AS(solve_bcd(ok, BcdConfig{}, &bad_vec), std::invalid_argument);
}

TEST_CASE("reduced objective lower bounds the joint objective everywhere") {
  TrimmedProblem prob{random_ls(25, 7, 404), 1.3, 3};
  Rng rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    Vector theta(7);
    rng.fill_normal(theta);
    const WeightVector w = random_weights(7, 3, 600 + static_cast<std::uint64_t>(trial));
    CHECK(reduced_objective(prob, theta) <= joint_objective(prob, theta, w) + 1e-12);
  }
}
