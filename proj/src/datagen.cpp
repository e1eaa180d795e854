// Copyright (c) 2026 trimreg developers.
// SPDX-License-Identifier: Apache-2.0
#include "datagen.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>

#include "csv.hpp"
#include "rng.hpp"

namespace trimreg {

std::string design_name(DesignKind kind) {
  switch (kind) {
    case DesignKind::M2: return "m2";
    case DesignKind::M1: return "m1";
    case DesignKind::DiamondGgm: return "diamond";
  }
  return "m2";
}

DesignKind design_from_name(const std::string& name) {
  if (name == "m2") return DesignKind::M2;
  if (name == "m1") return DesignKind::M1;
  if (name == "diamond") return DesignKind::DiamondGgm;
  throw std::invalid_argument("unknown design '" + name + "'; expected m2, m1 or diamond");
}

Matrix m2_covariance(Index p, double theta) {
  if (p < 1) throw std::invalid_argument("m2 covariance: p must be positive");
  if (!(theta >= 0.0 && theta < 1.0))
    throw std::invalid_argument("m2 covariance: theta must lie in [0, 1)");
  return Matrix::Constant(p, p, theta) + (1.0 - theta) * Matrix::Identity(p, p);
}

Matrix m1_covariance(Index p, Index k, double theta) {
  if (p < 2 || k < 1 || k >= p)
    throw std::invalid_argument("m1 covariance: need 1 <= k < p");
  if (!(std::abs(theta) * std::sqrt(static_cast<double>(k)) < 1.0))
    throw std::invalid_argument(
        "m1 covariance is not positive definite: need |theta| < 1/sqrt(k) = " +
        format_double(1.0 / std::sqrt(static_cast<double>(k))));
  Matrix S = Matrix::Identity(p, p);
  for (Index j = 0; j < k; ++j) S(k, j) = S(j, k) = theta;
  return S;
}

Matrix diamond_covariance(double rho) {
  Matrix S(4, 4);
  S << 1.0, rho, rho, 2.0 * rho * rho,
       rho, 1.0, 0.0, rho,
       rho, 0.0, 1.0, rho,
       2.0 * rho * rho, rho, rho, 1.0;
  Eigen::LLT<Matrix> llt(S);
  if (llt.info() != Eigen::Success)
    throw std::domain_error("diamond covariance is not positive definite at rho = " +
                            format_double(rho));
  return S;
}

Matrix diamond_precision(double rho) {
  const Matrix S = diamond_covariance(rho);
  Eigen::LLT<Matrix> llt(S);
  Matrix Om = llt.solve(Matrix::Identity(4, 4));
  Om = 0.5 * (Om + Om.transpose().eval());
  // The construction zeroes the (1,4) conditional dependence exactly; snap
  // the round-off residue so support extraction is unambiguous.
  Om(0, 3) = Om(3, 0) = 0.0;
  return Om;
}

namespace {

Matrix sample_gaussian_rows(const Matrix& sigma, Index n, Rng& rng) {
  const Index p = sigma.rows();
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw std::domain_error("design covariance is not positive definite");
  const Matrix L = llt.matrixL();
  Matrix X(n, p);
  Vector g(p);
  for (Index i = 0; i < n; ++i) {
    rng.fill_normal(g);
    X.row(i) = (L * g).transpose();
  }
  return X;
}

SyntheticDataset gen_linear(DesignKind kind, Index n, Index p, Index k, double theta_cov,
                            double beta_sd, double noise_sd, std::uint64_t seed) {
  if (n < 1 || p < 1 || k < 0 || k > p)
    throw std::invalid_argument("linear design: need n >= 1 and 0 <= k <= p");
  if (!(beta_sd >= 0.0) || !(noise_sd >= 0.0))
    throw std::invalid_argument("linear design: beta_sd and noise_sd must be >= 0");

  SyntheticDataset ds;
  ds.design = kind;
  ds.n = n;
  ds.p = p;
  ds.k = k;
  ds.theta_cov = theta_cov;
  ds.beta_sd = beta_sd;
  ds.noise_sd = noise_sd;
  ds.seed = seed;
  ds.sigma_star = kind == DesignKind::M2 ? m2_covariance(p, theta_cov)
                                         : m1_covariance(p, k, theta_cov);

  Rng rng(seed);
  // Draw order is part of the format: support, beta values, X rows, noise.
  if (kind == DesignKind::M2) {
    ds.support = rng.sample_without_replacement(p, k);
    std::sort(ds.support.begin(), ds.support.end());
  } else {
    ds.support.resize(static_cast<std::size_t>(k));
    for (Index j = 0; j < k; ++j) ds.support[static_cast<std::size_t>(j)] = j;
  }
  ds.theta_star = Vector::Zero(p);
  for (Index j : ds.support) ds.theta_star[j] = beta_sd * rng.normal();

  ds.X = sample_gaussian_rows(ds.sigma_star, n, rng);
  ds.y = ds.X * ds.theta_star;
  for (Index i = 0; i < n; ++i) ds.y[i] += noise_sd * rng.normal();
  return ds;
}

}  // namespace

SyntheticDataset gen_linear_m2(Index n, Index p, Index k, double theta_cov, double beta_sd,
                               double noise_sd, std::uint64_t seed) {
  return gen_linear(DesignKind::M2, n, p, k, theta_cov, beta_sd, noise_sd, seed);
}

SyntheticDataset gen_linear_m1(Index n, Index p, Index k, double theta_cov, double beta_sd,
                               double noise_sd, std::uint64_t seed) {
  return gen_linear(DesignKind::M1, n, p, k, theta_cov, beta_sd, noise_sd, seed);
}

SyntheticDataset gen_diamond_ggm(Index n, double rho, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("diamond design: need n >= 2");
  SyntheticDataset ds;
  ds.design = DesignKind::DiamondGgm;
  ds.n = n;
  ds.p = 4;
  ds.theta_cov = rho;
  ds.beta_sd = 0.0;
  ds.noise_sd = 0.0;
  ds.seed = seed;
  ds.sigma_star = diamond_covariance(rho);

  const Matrix Om = diamond_precision(rho);
  ds.theta_star = Vector(16);
  Eigen::Map<Matrix>(ds.theta_star.data(), 4, 4) = Om;
  for (Index f = 0; f < 16; ++f) {
    const Index r = f % 4, c = f / 4;
    if (r != c && std::abs(ds.theta_star[f]) > 1e-9) ds.support.push_back(f);
  }
  ds.k = static_cast<Index>(ds.support.size());

  Rng rng(seed);
  ds.X = sample_gaussian_rows(ds.sigma_star, n, rng);
  const Vector mean = ds.X.colwise().mean();
  const Matrix centered = ds.X.rowwise() - mean.transpose();
  ds.sample_cov = centered.transpose() * centered / static_cast<double>(n);
  return ds;
}

IncoherenceReport incoherence_from_gamma(const Matrix& Gamma, const std::vector<Index>& support,
                                         Index h, Index num_samples, std::uint64_t seed) {
  const Index p = Gamma.rows();
  if (Gamma.cols() != p) throw std::invalid_argument("incoherence: Gamma must be square");
  for (Index j : support)
    if (j < 0 || j >= p) throw std::invalid_argument("incoherence: support index out of range");
  if (h < 0 || h > p) throw std::invalid_argument("incoherence: need 0 <= h <= p");
  if (num_samples < 1) throw std::invalid_argument("incoherence: need num_samples >= 1");

  IncoherenceReport report;
  report.samples = num_samples;
  Rng rng(seed);
  for (Index s = 0; s < num_samples; ++s) {
    std::set<Index> a_set(support.begin(), support.end());
    for (Index j : rng.sample_without_replacement(p, h)) a_set.insert(j);
    const std::vector<Index> A(a_set.begin(), a_set.end());
    std::vector<Index> Ac;
    for (Index j = 0; j < p; ++j)
      if (!a_set.count(j)) Ac.push_back(j);

    const auto na = static_cast<Index>(A.size());
    Matrix Gaa(na, na);
    for (Index i = 0; i < na; ++i)
      for (Index j = 0; j < na; ++j) Gaa(i, j) = Gamma(A[static_cast<std::size_t>(i)], A[static_cast<std::size_t>(j)]);

    Eigen::SelfAdjointEigenSolver<Matrix> es(Gaa);
    const double emax = es.eigenvalues().maxCoeff();
    const double emin = es.eigenvalues().minCoeff();
    if (!(emin > 1e-12 * std::max(1.0, emax))) {
      ++report.singular_failures;
      continue;
    }
    const Matrix inv = es.eigenvectors() *
                       es.eigenvalues().cwiseInverse().asDiagonal() *
                       es.eigenvectors().transpose();
    report.inv_norm_max = std::max(report.inv_norm_max, inv.cwiseAbs().rowwise().sum().maxCoeff());
    report.eig_max = std::max(report.eig_max, 1.0 / emin);

    if (!Ac.empty()) {
      const auto nc = static_cast<Index>(Ac.size());
      Matrix Gca(nc, na);
      Matrix Gcc(nc, nc);
      for (Index i = 0; i < nc; ++i) {
        for (Index j = 0; j < na; ++j) Gca(i, j) = Gamma(Ac[static_cast<std::size_t>(i)], A[static_cast<std::size_t>(j)]);
        for (Index j = 0; j < nc; ++j) Gcc(i, j) = Gamma(Ac[static_cast<std::size_t>(i)], Ac[static_cast<std::size_t>(j)]);
      }
      const Matrix cross = Gca * inv;
      report.cross_norm_max =
          std::max(report.cross_norm_max, cross.cwiseAbs().rowwise().sum().maxCoeff());
      Eigen::SelfAdjointEigenSolver<Matrix> esc(Gcc, Eigen::EigenvaluesOnly);
      report.eig_max = std::max(report.eig_max, esc.eigenvalues().maxCoeff());
    }
  }
  return report;
}

IncoherenceReport incoherence_diagnostics(const Matrix& X, const std::vector<Index>& support,
                                          Index h, Index num_samples, std::uint64_t seed) {
  if (X.rows() < 1) throw std::invalid_argument("incoherence: empty sample matrix");
  const Matrix Gamma = X.transpose() * X / static_cast<double>(X.rows());
  return incoherence_from_gamma(Gamma, support, h, num_samples, seed);
}

namespace {

Table matrix_table(const Matrix& M, const std::string& prefix) {
  Table t;
  for (Index j = 0; j < M.cols(); ++j) t.header.push_back(prefix + std::to_string(j));
  t.rows.reserve(static_cast<std::size_t>(M.rows()));
  for (Index i = 0; i < M.rows(); ++i) {
    std::vector<std::string> row;
    row.reserve(static_cast<std::size_t>(M.cols()));
    for (Index j = 0; j < M.cols(); ++j) row.push_back(format_double(M(i, j)));
    t.rows.push_back(std::move(row));
  }
  return t;
}

Matrix table_matrix(const Table& t) {
  const auto rows = static_cast<Index>(t.rows.size());
  const auto cols = static_cast<Index>(t.header.size());
  Matrix M(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const auto& row = t.rows[static_cast<std::size_t>(i)];
    if (static_cast<Index>(row.size()) != cols) throw std::runtime_error("ragged csv matrix");
    for (Index j = 0; j < cols; ++j) M(i, j) = parse_double(row[static_cast<std::size_t>(j)]);
  }
  return M;
}

}  // namespace

void save_dataset(const std::string& dir, const SyntheticDataset& ds) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path base(dir);

  write_table((base / "X.csv").string(), matrix_table(ds.X, "x"));
  write_table((base / "theta_star.csv").string(), matrix_table(ds.theta_star, "theta_star"));
  {
    Table t;
    t.header = {"support"};
    for (Index j : ds.support) t.rows.push_back({std::to_string(j)});
    write_table((base / "support.csv").string(), t);
  }
  if (ds.design == DesignKind::DiamondGgm) {
    write_table((base / "sample_cov.csv").string(), matrix_table(ds.sample_cov, "c"));
  } else {
    write_table((base / "y.csv").string(), matrix_table(ds.y, "y"));
  }

  nlohmann::json meta{{"design", design_name(ds.design)},
                      {"n", ds.n},
                      {"p", ds.p},
                      {"k", ds.k},
                      {"theta_cov", ds.theta_cov},
                      {"beta_sd", ds.beta_sd},
                      {"noise_sd", ds.noise_sd},
                      {"seed", ds.seed}};
  std::ofstream out(base / "meta.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + (base / "meta.json").string());
  out << meta.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + (base / "meta.json").string());
}

SyntheticDataset load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path base(dir);
  std::ifstream in(base / "meta.json", std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset metadata: " + (base / "meta.json").string());
  nlohmann::json meta = nlohmann::json::parse(in);

  SyntheticDataset ds;
  ds.design = design_from_name(meta.at("design").get<std::string>());
  ds.n = meta.at("n").get<Index>();
  ds.p = meta.at("p").get<Index>();
  ds.k = meta.at("k").get<Index>();
  ds.theta_cov = meta.at("theta_cov").get<double>();
  ds.beta_sd = meta.at("beta_sd").get<double>();
  ds.noise_sd = meta.at("noise_sd").get<double>();
  ds.seed = meta.at("seed").get<std::uint64_t>();

  ds.X = table_matrix(read_table((base / "X.csv").string()));
  ds.theta_star = table_matrix(read_table((base / "theta_star.csv").string()));
  for (const auto& row : read_table((base / "support.csv").string()).rows)
    ds.support.push_back(parse_int(row.at(0)));
  if (ds.design == DesignKind::DiamondGgm) {
    ds.sample_cov = table_matrix(read_table((base / "sample_cov.csv").string()));
    ds.sigma_star = diamond_covariance(ds.theta_cov);
  } else {
    ds.y = table_matrix(read_table((base / "y.csv").string()));
    ds.sigma_star = ds.design == DesignKind::M2 ? m2_covariance(ds.p, ds.theta_cov)
                                                : m1_covariance(ds.p, ds.k, ds.theta_cov);
  }
  return ds;
}

}  // namespace trimreg
