// Copyright (c) 2026 trimreg developers.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

#include "types.hpp"

namespace trimreg {

enum class DesignKind { M2, M1, DiamondGgm };

std::string design_name(DesignKind kind);
DesignKind design_from_name(const std::string& name);

// One generated problem instance. Regression datasets carry (X, y) and a
// sparse coefficient vector; the graphical dataset carries samples, their
// centered covariance and the true precision matrix as theta_star (flattened
// column major, matching the solver parameterization).
struct SyntheticDataset {
  DesignKind design = DesignKind::M2;
  Index n = 0, p = 0, k = 0;
  double theta_cov = 0.0;  // design correlation (rho for the diamond graph)
  double beta_sd = 5.0;
  double noise_sd = 1.0;
  std::uint64_t seed = 0;

  Matrix X;                    // n x p samples
  Vector y;                    // size n for regression, empty for the graphical design
  Vector theta_star;           // p, or p*p flattened precision
  std::vector<Index> support;  // indices of nonzero theta_star entries (flat for graphical)
  Matrix sigma_star;           // population covariance of the rows of X
  Matrix sample_cov;           // centered maximum-likelihood covariance (graphical only)
};

// theta * ones + (1 - theta) * I: every pair of variables equally correlated.
Matrix m2_covariance(Index p, double theta);

// Identity plus theta in the first k entries of row/column k+1 (zero based:
// row/column index k). Positive definite iff theta < 1 / sqrt(k).
Matrix m1_covariance(Index p, Index k, double theta);

// 4-node covariance: unit diagonal, rho on every edge pair except (2,3)
// which is zero, and 2 rho^2 at the non-edge (1,4) so that the precision
// matrix is exactly zero there. 1-based node labels in the description,
// zero-based storage.
Matrix diamond_covariance(double rho);

// Inverse of diamond_covariance; its off-diagonal support is every pair
// except (1,4).
Matrix diamond_precision(double rho);

// x_i iid N(0, M2(theta_cov)); support at k uniformly random positions with
// N(0, beta_sd^2) values; y = X beta + noise_sd * eps. Draw order (support,
// beta values, X row by row, noise) is fixed so a seed pins the bytes.
SyntheticDataset gen_linear_m2(Index n, Index p, Index k, double theta_cov, double beta_sd,
                               double noise_sd, std::uint64_t seed);

// Same with covariance M1(theta_cov) and the support fixed to {0..k-1}, so
// coordinate k is the correlated off-support variable.
SyntheticDataset gen_linear_m1(Index n, Index p, Index k, double theta_cov, double beta_sd,
                               double noise_sd, std::uint64_t seed);

// n draws from N(0, diamond covariance); sample_cov is the centered 1/n
// covariance and theta_star the flattened true precision.
SyntheticDataset gen_diamond_ggm(Index n, double rho, std::uint64_t seed);

struct IncoherenceReport {
  double inv_norm_max = 0.0;    // max over samples of ||(G_AA)^{-1}||_inf
  double cross_norm_max = 0.0;  // max of ||G_{A^c A} (G_AA)^{-1}||_inf
  double eig_max = 0.0;         // max of lambda_max(G_{A^c A^c}) and lambda_max((G_AA)^{-1})
  Index samples = 0;
  Index singular_failures = 0;  // samples with a singular G_AA block, skipped
};

// For num_samples random trim sets T of size h, evaluates the block norms
// above over A = support union T on the matrix Gamma.
IncoherenceReport incoherence_from_gamma(const Matrix& Gamma, const std::vector<Index>& support,
                                         Index h, Index num_samples, std::uint64_t seed);

// Same on the empirical Gamma = X^T X / n.
IncoherenceReport incoherence_diagnostics(const Matrix& X, const std::vector<Index>& support,
                                          Index h, Index num_samples, std::uint64_t seed);

// Directory serialization: X.csv, theta_star.csv, support.csv, meta.json and
// (by design kind) y.csv or sample_cov.csv. load reverses save bit-exactly.
void save_dataset(const std::string& dir, const SyntheticDataset& ds);
SyntheticDataset load_dataset(const std::string& dir);

}  // namespace trimreg
