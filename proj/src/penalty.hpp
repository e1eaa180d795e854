// Copyright (c) 2026 trimreg developers.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "types.hpp"

namespace trimreg {

// Indices of the h largest |theta_i|, ranked by (|theta_i| descending, index
// ascending). The index tie rule makes every consumer (weights, trimming,
// support scoring) deterministic.
std::vector<Index> top_h_indices(const Vector& theta, Index h);

// Sum of the (p - h) smallest |theta_i|. h = 0 is the full l1 norm, h = p
// is identically zero.
double trimmed_l1(const Vector& theta, Index h);

// sum_i w_i |theta_i|.
double weighted_l1(const Vector& theta, const Vector& w);

// Minimizer over the capped simplex of sum_i w_i |theta_i|: zero weight on
// the h largest |theta_i| (ties by top_h_indices), one elsewhere. Attains
// trimmed_l1(theta, h).
WeightVector optimal_weights(const Vector& theta, Index h);

// Euclidean projection of z onto { w in [0,1]^m : sum(w) = m - h }.
// Bisection on the shift mu in clip(z - mu, 0, 1), then an exact recompute of
// mu from the stabilized active pattern; the sum constraint holds to 1e-12.
Vector project_capped_simplex(const Vector& z, Index h);

// Coordinate-wise soft threshold at level t * w_i:
//   out_i = sign(z_i) * max(|z_i| - t * w_i, 0).
// This is the prox of theta -> t * sum_i w_i |theta_i| for w_i >= 0.
Vector prox_weighted_l1(const Vector& z, const Vector& w, double t);

}  // namespace trimreg
