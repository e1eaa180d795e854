// Copyright (c) 2026 trimreg developers.
// SPDX-License-Identifier: Apache-2.0
#include "trimreg/trimreg.h"

#include <cstdlib>
#include <cstring>
#include <json.hpp>
#include <string>

#include "baselines.hpp"
#include "csv.hpp"
#include "datagen.hpp"
#include "experiments.hpp"
#include "solver.hpp"

using namespace trimreg;

namespace {

thread_local std::string g_last_error;

int fail(int code, const std::string& what) {
  g_last_error = what;
  return code;
}

// Runs f, translating exceptions into status codes. The core throws
// invalid_argument/domain_error for bad inputs, NotPositiveDefiniteError and
// DivergenceError for numerical failures, and runtime_error for file
// problems.
template <typename F>
int guarded(F&& f) {
  try {
    return f();
  } catch (const NotPositiveDefiniteError& e) {
    return fail(TRIMREG_NOT_POSITIVE_DEFINITE, e.what());
  } catch (const DivergenceError& e) {
    return fail(TRIMREG_DIVERGED, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(TRIMREG_INVALID_ARGUMENT, e.what());
  } catch (const std::domain_error& e) {
    return fail(TRIMREG_INVALID_ARGUMENT, e.what());
  } catch (const std::runtime_error& e) {
    return fail(TRIMREG_IO_ERROR, e.what());
  } catch (const std::exception& e) {
    return fail(TRIMREG_INTERNAL_ERROR, e.what());
  } catch (...) {
    return fail(TRIMREG_INTERNAL_ERROR, "unknown error");
  }
}

int require(bool ok, const char* what) {
  if (ok) return TRIMREG_OK;
  throw std::invalid_argument(what);
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

struct trimreg_problem {
  ProblemStructure st;
};

struct trimreg_result {
  SolveResult res;
};

extern "C" {

const char* trimreg_version(void) { return "0.1.0"; }

const char* trimreg_last_error(void) { return g_last_error.c_str(); }

int trimreg_trimmed_l1(const double* theta, int64_t m, int64_t h, double* value_out) {
  return guarded([&] {
    require(theta && value_out && m >= 0, "trimmed_l1: null argument");
    Vector v = Eigen::Map<const Vector>(theta, m);
    *value_out = trimmed_l1(v, h);
    return TRIMREG_OK;
  });
}

int trimreg_project_capped_simplex(const double* z, int64_t m, int64_t h, double* w_out) {
  return guarded([&] {
    require(z && w_out && m >= 0, "project_capped_simplex: null argument");
    Vector zv = Eigen::Map<const Vector>(z, m);
    const Vector w = project_capped_simplex(zv, h);
    Eigen::Map<Vector>(w_out, m) = w;
    return TRIMREG_OK;
  });
}

int trimreg_prox_weighted_l1(const double* v, const double* weights, int64_t m, double step,
                             double* theta_out) {
  return guarded([&] {
    require(v && weights && theta_out && m >= 0, "prox_weighted_l1: null argument");
    Vector vv = Eigen::Map<const Vector>(v, m);
    Vector wv = Eigen::Map<const Vector>(weights, m);
    const Vector x = prox_weighted_l1(vv, wv, step);
    Eigen::Map<Vector>(theta_out, m) = x;
    return TRIMREG_OK;
  });
}

int trimreg_problem_ls(const double* X, const double* y, int64_t n, int64_t p,
                       trimreg_problem** problem_out) {
  return guarded([&] {
    require(X && y && problem_out && n >= 1 && p >= 1, "problem_ls: null or empty argument");
    Matrix Xm =
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            X, n, p);
    Vector yv = Eigen::Map<const Vector>(y, n);
    auto* prob = new trimreg_problem{regression_structure(std::move(Xm), std::move(yv))};
    *problem_out = prob;
    return TRIMREG_OK;
  });
}

int trimreg_problem_ggm(const double* S, int64_t p, trimreg_problem** problem_out) {
  return guarded([&] {
    require(S && problem_out && p >= 1, "problem_ggm: null or empty argument");
    Matrix Sm =
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            S, p, p);
    auto* prob = new trimreg_problem{graphical_structure(std::move(Sm))};
    *problem_out = prob;
    return TRIMREG_OK;
  });
}

int trimreg_problem_load(const char* dataset_dir, trimreg_problem** problem_out) {
  return guarded([&] {
    require(dataset_dir && problem_out, "problem_load: null argument");
    const SyntheticDataset ds = load_dataset(dataset_dir);
    auto* prob = new trimreg_problem{ds.design == DesignKind::DiamondGgm
                                         ? graphical_structure(ds.sample_cov)
                                         : regression_structure(ds.X, ds.y)};
    *problem_out = prob;
    return TRIMREG_OK;
  });
}

int trimreg_problem_dim(const trimreg_problem* problem, int64_t* dim_out,
                        int64_t* penalized_out) {
  return guarded([&] {
    require(problem != nullptr, "problem_dim: null problem");
    if (dim_out) *dim_out = problem->st.initial_point.size();
    if (penalized_out) *penalized_out = static_cast<int64_t>(problem->st.penalized.size());
    return TRIMREG_OK;
  });
}

void trimreg_problem_free(trimreg_problem* problem) { delete problem; }

void trimreg_solve_config_init(trimreg_solve_config* config) {
  if (!config) return;
  const BcdConfig defaults;
  config->lambda = 0.0;
  config->trim_count = 0;
  config->eta = defaults.eta;
  config->tau = defaults.tau;
  config->max_iters = defaults.max_iters;
  config->tol_stationarity = defaults.tol_stationarity;
  config->tol_objective = defaults.tol_objective;
  config->plateau_span = defaults.plateau_span;
  config->exact_weight_step = 0;
  config->scad_a = 3.0;
  config->mcp_gamma = 2.5;
}

int trimreg_solve(const trimreg_problem* problem, const char* method,
                  const trimreg_solve_config* config, const double* theta_init,
                  trimreg_result** result_out) {
  return guarded([&] {
    require(problem && method && result_out, "solve: null argument");
    trimreg_solve_config defaults;
    trimreg_solve_config_init(&defaults);
    const trimreg_solve_config& c = config ? *config : defaults;

    BcdConfig cfg;
    cfg.eta = c.eta;
    cfg.tau = c.tau;
    cfg.max_iters = c.max_iters;
    cfg.tol_stationarity = c.tol_stationarity;
    cfg.tol_objective = c.tol_objective;
    cfg.plateau_span = c.plateau_span;
    cfg.weight_step = c.exact_weight_step ? WeightStep::Exact : WeightStep::Projected;

    Vector init;
    const Vector* init_ptr = nullptr;
    if (theta_init) {
      init = Eigen::Map<const Vector>(theta_init, problem->st.initial_point.size());
      init_ptr = &init;
    }

    const std::string name(method);
    SolveResult res;
    if (name == "trimmed") {
      res = solve_bcd(TrimmedProblem{problem->st, c.lambda, c.trim_count}, cfg, init_ptr);
    } else if (name == "dc") {
      res = solve_dc_trimmed(TrimmedProblem{problem->st, c.lambda, c.trim_count}, cfg, init_ptr);
    } else if (name == "lasso" || name == "glasso" || name == "scad" || name == "mcp") {
      BaselinePenalty pen;
      pen.kind = name == "scad" ? BaselineKind::Scad
                                : (name == "mcp" ? BaselineKind::Mcp : BaselineKind::L1);
      pen.lambda = c.lambda;
      pen.a = c.scad_a;
      pen.gamma = c.mcp_gamma;
      res = solve_prox_gradient(problem->st, pen, cfg, init_ptr);
    } else {
      throw std::invalid_argument("unknown method '" + name +
                                  "'; expected trimmed, dc, lasso, glasso, scad or mcp");
    }
    *result_out = new trimreg_result{std::move(res)};
    return TRIMREG_OK;
  });
}

int64_t trimreg_result_dim(const trimreg_result* result) {
  return result ? result->res.theta.size() : 0;
}

int trimreg_result_theta(const trimreg_result* result, double* theta_out) {
  return guarded([&] {
    require(result && theta_out, "result_theta: null argument");
    Eigen::Map<Vector>(theta_out, result->res.theta.size()) = result->res.theta;
    return TRIMREG_OK;
  });
}

double trimreg_result_objective(const trimreg_result* result) {
  return result ? result->res.objective : 0.0;
}

double trimreg_result_objective_reduced(const trimreg_result* result) {
  return result ? result->res.objective_reduced : 0.0;
}

double trimreg_result_stationarity(const trimreg_result* result) {
  return result ? result->res.stationarity : 0.0;
}

int64_t trimreg_result_iterations(const trimreg_result* result) {
  return result ? result->res.iterations : 0;
}

int trimreg_result_stop_reason(const trimreg_result* result) {
  if (!result) return 1;
  switch (result->res.stop) {
    case StopReason::Stationary:
      return 0;
    case StopReason::MaxIterations:
      return 1;
    case StopReason::ObjectivePlateau:
      return 2;
  }
  return 1;
}

int64_t trimreg_result_trace_len(const trimreg_result* result) {
  return result ? static_cast<int64_t>(result->res.trace.size()) : 0;
}

int trimreg_result_trace_row(const trimreg_result* result, int64_t i, double row_out[5]) {
  return guarded([&] {
    require(result && row_out, "trace_row: null argument");
    require(i >= 0 && i < static_cast<int64_t>(result->res.trace.size()),
            "trace_row: index out of range");
    const auto& rec = result->res.trace[static_cast<std::size_t>(i)];
    row_out[0] = static_cast<double>(rec.iter);
    row_out[1] = rec.objective;
    row_out[2] = rec.objective_reduced;
    row_out[3] = rec.certificate;
    row_out[4] = rec.stationarity;
    return TRIMREG_OK;
  });
}

int trimreg_result_write_trace_csv(const trimreg_result* result, const char* path,
                                   const char* method_label, double lambda) {
  return guarded([&] {
    require(result && path && method_label, "write_trace_csv: null argument");
    Table t;
    t.header = {"method", "lambda", "iter", "objective", "G_k", "T"};
    const std::string lam = format_double(lambda);
    for (const auto& rec : result->res.trace)
      t.rows.push_back({method_label, lam, std::to_string(rec.iter),
                        format_double(rec.objective), format_double(rec.certificate),
                        format_double(rec.stationarity)});
    write_table(path, t);
    return TRIMREG_OK;
  });
}

void trimreg_result_free(trimreg_result* result) { delete result; }

int trimreg_gen_dataset(const char* design, int64_t n, int64_t p, int64_t k, double theta_cov,
                        double beta_sd, double noise_sd, uint64_t seed, const char* out_dir) {
  return guarded([&] {
    require(design && out_dir, "gen_dataset: null argument");
    const DesignKind kind = design_from_name(design);
    SyntheticDataset ds;
    if (kind == DesignKind::M2)
      ds = gen_linear_m2(n, p, k, theta_cov, beta_sd, noise_sd, seed);
    else if (kind == DesignKind::M1)
      ds = gen_linear_m1(n, p, k, theta_cov, beta_sd, noise_sd, seed);
    else
      ds = gen_diamond_ggm(n, theta_cov, seed);
    save_dataset(out_dir, ds);
    return TRIMREG_OK;
  });
}

int trimreg_plan_defaults(const char* experiment, char** json_out) {
  return guarded([&] {
    require(experiment && json_out, "plan_defaults: null argument");
    *json_out = copy_string(plan_to_json(plan_defaults(experiment)));
    return TRIMREG_OK;
  });
}

int trimreg_plan_resolve(const char* plan_json, char** json_out) {
  return guarded([&] {
    require(plan_json && json_out, "plan_resolve: null argument");
    *json_out = copy_string(plan_to_json(plan_from_json(plan_json)));
    return TRIMREG_OK;
  });
}

int trimreg_run_experiment(const char* plan_json, const char* out_dir, int jobs,
                           char** files_json_out) {
  return guarded([&] {
    require(plan_json && out_dir, "run_experiment: null argument");
    const ExperimentPlan plan = plan_from_json(plan_json);
    const ExperimentResult result = run_experiment(plan, out_dir, jobs);
    if (files_json_out) *files_json_out = copy_string(nlohmann::json(result.files).dump());
    return TRIMREG_OK;
  });
}

void trimreg_string_free(char* s) { std::free(s); }

int trimreg_diag_incoherence(const char* dataset_dir, int64_t trim_count, int64_t num_samples,
                             uint64_t seed, double report_out[5]) {
  return guarded([&] {
    require(dataset_dir && report_out, "diag_incoherence: null argument");
    const SyntheticDataset ds = load_dataset(dataset_dir);
    require(ds.y.size() > 0, "diag_incoherence: needs a regression dataset");
    const IncoherenceReport rep =
        incoherence_diagnostics(ds.X, ds.support, trim_count, num_samples, seed);
    report_out[0] = rep.inv_norm_max;
    report_out[1] = rep.cross_norm_max;
    report_out[2] = rep.eig_max;
    report_out[3] = static_cast<double>(rep.samples);
    report_out[4] = static_cast<double>(rep.singular_failures);
    return TRIMREG_OK;
  });
}

}  // extern "C"
