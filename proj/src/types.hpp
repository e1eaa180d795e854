// Copyright (c) 2026 trimreg developers.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace trimreg {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Weight vector living on the capped simplex
//   { w in [0,1]^m : sum(w) = m - h }.
// h entries' worth of mass is removed from the all-ones vector; those are the
// coordinates the trimmed penalty leaves unpenalized.
struct WeightVector {
  Vector entries;
  Index trim_count = 0;  // h

  Index size() const { return entries.size(); }
};

// Returns true when `entries` lies on the capped simplex for trim count h,
// up to `tol` in both the box and the sum constraint.
bool on_capped_simplex(const Vector& entries, Index h, double tol = 1e-9);

struct NotPositiveDefiniteError : std::domain_error {
  using std::domain_error::domain_error;
};

}  // namespace trimreg
