// Copyright (c) 2026 trimreg developers.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "datagen.hpp"
#include "solver.hpp"

namespace trimreg {

// One experiment description. A single struct covers all five experiment
// kinds; fields irrelevant to a kind are ignored by its runner. Defaults that
// depend on the kind (grids, methods, instance sizes) are filled by
// resolve_plan so a resolved plan round-trips through JSON unchanged.
struct ExperimentPlan {
  std::string experiment;     // support_recovery | error_curves | convergence | ggm_diamond | init_study
  std::string experiment_id;  // tag written into every row; default: experiment name
  std::string design = "m2";  // m2 | m1 (regression kinds)
  Index p = 0, k = 0;         // 0: kind default
  std::vector<Index> n_grid;  // empty: fractions of 40 k log p
  Index n = 0;                // single-instance kinds; 0: kind default
  std::string h_policy = "k";  // k | fixed | frac_p (h = ceil(h_frac p))
  Index h = 0;                 // used when h_policy == fixed
  double h_frac = 0.05;
  std::vector<Index> h_values;       // error_curves sweep; empty: {0, k}
  std::vector<double> h_fracs;       // ggm grid of (p^2 - h)/p^2; empty: {0.4..1.0}
  std::vector<double> log10_lambdas; // empty: {-3.0, -2.8, ..., 1.0}
  std::vector<double> lambdas;       // convergence; empty: {0.5, 5, 20}
  std::vector<std::string> methods;  // empty: kind default
  Index replicates = 0;              // 0: kind default (50)
  std::uint64_t base_seed = 1;
  double theta_cov = -1.0;     // design correlation; -1: 0.7 for m2, 0.3 for m1
  std::vector<double> rhos;    // ggm; empty: {0.1, 0.3}
  double beta_sd = 5.0;
  double noise_sd = 1.0;
  std::string lambda_rule = "";  // cv | theory; default cv (theory for error_curves)
  double theory_c = 2.0;         // lambda = theory_c sqrt(log p / n)
  Index cv_folds = 5;
  Index num_inits = 0;  // init_study; 0: 50
  Index max_iters = 2000;
  double tol = 1e-6;
  double scad_a = 3.0;
  double mcp_gamma = 2.5;
};

// Kind defaults, already resolved.
ExperimentPlan plan_defaults(const std::string& experiment);

// Strict parse: unknown keys are rejected with the list of valid keys.
// Missing keys keep the unresolved defaults above.
ExperimentPlan plan_from_json(const std::string& json_text);

// Fills kind-dependent defaults and validates; idempotent.
ExperimentPlan resolve_plan(const ExperimentPlan& plan);

std::string plan_to_json(const ExperimentPlan& plan);

struct ExperimentResult {
  std::vector<std::string> files;  // file names written inside out_dir
};

// Runs the plan and writes its CSV outputs into out_dir (created when
// missing). The rows and aggregates are a pure function of the resolved plan;
// jobs only changes wall time (and the runtime_ms measurement columns).
ExperimentResult run_experiment(const ExperimentPlan& plan, const std::string& out_dir,
                                int jobs = 1);

enum class SuccessMode { ExactZero, TopK };

// exact_zero: the entries above 1e-6 in magnitude are exactly the support.
// top_k: the k = |support| largest magnitudes sit on the support and strictly
// dominate every off-support magnitude.
bool support_recovered(const Vector& theta_hat, const std::vector<Index>& support,
                       SuccessMode mode);

}  // namespace trimreg
