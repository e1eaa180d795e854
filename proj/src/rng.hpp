// Copyright (c) 2026 trimreg developers.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "types.hpp"

namespace trimreg {

// Deterministic generator used everywhere randomness is needed. The point of
// rolling the sequence by hand instead of using std::mt19937 is that the byte
// stream is pinned by this file alone, so seeds reproduce across compilers
// and standard libraries.
//
// State setup: splitmix64 applied to the seed fills the four xoshiro256++
// words. Normal deviates come from Box-Muller on pairs of uniforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform on [0, 1): 53-bit mantissa of next_u64.
  double uniform();

  // Standard normal via Box-Muller. Draws two uniforms per pair and caches
  // the second deviate.
  double normal();

  // Uniform integer in [0, n), n > 0, by rejection (no modulo bias).
  std::uint64_t below(std::uint64_t n);

  // First k entries of a partial Fisher-Yates shuffle of {0, ..., n-1}.
  std::vector<Index> sample_without_replacement(Index n, Index k);

  void fill_normal(Vector& v);

 private:
  std::uint64_t s_[4];
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

// Seed for one replicate of one experiment cell, mixed from the experiment
// base seed and a cell/replicate index so cells are statistically independent
// but individually reproducible.
std::uint64_t replicate_seed(std::uint64_t base_seed, std::uint64_t cell_index,
                             std::uint64_t replicate);

}  // namespace trimreg
