// Copyright (c) 2026 trimreg developers.
// SPDX-License-Identifier: Apache-2.0
//
// Command line front end. All numerical work goes through the trimreg C API;
// this file only parses flags, merges JSON configs and writes run manifests.
#include <CLI11.hpp>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <string>
#include <vector>

#include "trimreg/trimreg.h"

namespace {

using nlohmann::json;

// Non-zero C API status mapped onto the documented exit codes: 1 for
// usage/configuration/file problems, 2 for numerical failures.
int exit_code(int status) {
  if (status == TRIMREG_OK) return 0;
  if (status == TRIMREG_INVALID_ARGUMENT || status == TRIMREG_IO_ERROR) return 1;
  return 2;
}

int report(int status) {
  if (status != TRIMREG_OK) std::cerr << "trimreg: " << trimreg_last_error() << "\n";
  return exit_code(status);
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string resolve_out_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("TRIMREG_OUT_DIR"); env && *env) return env;
  return ".";
}

void write_manifest(const std::string& out_dir, const std::string& command, const json& config,
                    const std::vector<std::string>& outputs, const std::string& started) {
  json manifest{{"tool", "trimreg"},
                {"version", trimreg_version()},
                {"command", command},
                {"plan", config},
                {"outputs", outputs},
                {"started", started},
                {"finished", utc_now()}};
  const auto path = std::filesystem::path(out_dir) / "manifest.json";
  std::ofstream out(path);
  out << manifest.dump(2) << "\n";
  if (!out) throw std::runtime_error("cannot write manifest: " + path.string());
  std::cout << "wrote " << path.string() << "\n";
}

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("config file " + path + " is not valid JSON: " + e.what());
  }
  // A manifest written by a previous run can be fed back in directly.
  if (j.is_object() && j.count("plan")) j = j["plan"];
  if (!j.is_object()) throw std::runtime_error("config file " + path + " must hold a JSON object");
  return j;
}

struct CString {
  char* ptr = nullptr;
  ~CString() { trimreg_string_free(ptr); }
};

struct Problem {
  trimreg_problem* ptr = nullptr;
  ~Problem() { trimreg_problem_free(ptr); }
};

struct Result {
  trimreg_result* ptr = nullptr;
  ~Result() { trimreg_result_free(ptr); }
};

// ---------------------------------------------------------------------------
// solve

struct SolveArgs {
  std::string data;
  std::string method = "trimmed";
  double lambda = 0.1;
  std::int64_t h = 0;
  double eta = 0.0;
  double tau = 0.0;
  std::int64_t max_iters = 5000;
  double tol = 1e-6;
  bool exact_w = false;
  bool trace = false;
  std::string out_dir;
};

int run_solve(const SolveArgs& args) {
  Problem prob;
  int status = trimreg_problem_load(args.data.c_str(), &prob.ptr);
  if (status != TRIMREG_OK) return report(status);

  trimreg_solve_config cfg;
  trimreg_solve_config_init(&cfg);
  cfg.lambda = args.lambda;
  cfg.trim_count = args.h;
  cfg.eta = args.eta;
  cfg.tau = args.tau;
  cfg.max_iters = args.max_iters;
  cfg.tol_stationarity = args.tol;
  cfg.exact_weight_step = args.exact_w ? 1 : 0;

  Result res;
  status = trimreg_solve(prob.ptr, args.method.c_str(), &cfg, nullptr, &res.ptr);
  if (status != TRIMREG_OK) return report(status);

  const std::int64_t dim = trimreg_result_dim(res.ptr);
  std::vector<double> theta(static_cast<std::size_t>(dim));
  status = trimreg_result_theta(res.ptr, theta.data());
  if (status != TRIMREG_OK) return report(status);

  const char* stops[] = {"stationary", "max_iters", "plateau"};
  std::cout.precision(17);
  std::cout << "method=" << args.method << " lambda=" << args.lambda << " h=" << args.h << "\n"
            << "stop=" << stops[trimreg_result_stop_reason(res.ptr)]
            << " iters=" << trimreg_result_iterations(res.ptr)
            << " objective=" << trimreg_result_objective(res.ptr)
            << " reduced=" << trimreg_result_objective_reduced(res.ptr)
            << " T=" << trimreg_result_stationarity(res.ptr) << "\n";
  std::cout << "theta=";
  for (std::int64_t i = 0; i < dim; ++i) std::cout << (i ? "," : "") << theta[i];
  std::cout << "\n";

  if (args.trace) {
    std::cout << "iter,objective,G_k,T\n";
    const std::int64_t len = trimreg_result_trace_len(res.ptr);
    for (std::int64_t i = 0; i < len; ++i) {
      double row[5];
      trimreg_result_trace_row(res.ptr, i, row);
      std::cout << static_cast<std::int64_t>(row[0]) << "," << row[1] << "," << row[3] << ","
                << row[4] << "\n";
    }
  }

  if (!args.out_dir.empty()) {
    std::filesystem::create_directories(args.out_dir);
    const std::string started = utc_now();
    std::vector<std::string> outputs;
    if (args.trace) {
      const auto path = std::filesystem::path(args.out_dir) / "trace.csv";
      status = trimreg_result_write_trace_csv(res.ptr, path.string().c_str(),
                                              args.method.c_str(), args.lambda);
      if (status != TRIMREG_OK) return report(status);
      outputs.push_back("trace.csv");
    }
    json config{{"data", args.data},     {"method", args.method}, {"lambda", args.lambda},
                {"h", args.h},           {"eta", args.eta},       {"tau", args.tau},
                {"max_iters", args.max_iters}, {"tol", args.tol}};
    write_manifest(args.out_dir, "solve", config, outputs, started);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// gen

struct GenArgs {
  std::string design = "m2";
  std::int64_t n = 100;
  std::int64_t p = 64;
  std::int64_t k = 4;
  double theta_cov = -1.0;
  double beta_sd = 5.0;
  double noise_sd = 1.0;
  std::uint64_t seed = 1;
  std::string out_dir;
};

int run_gen(const GenArgs& args) {
  const std::string out_dir = resolve_out_dir(args.out_dir);
  double corr = args.theta_cov;
  if (corr < 0.0) corr = args.design == "m1" ? 0.3 : (args.design == "diamond" ? 0.1 : 0.7);
  const std::string started = utc_now();
  const int status = trimreg_gen_dataset(args.design.c_str(), args.n, args.p, args.k, corr,
                                         args.beta_sd, args.noise_sd, args.seed, out_dir.c_str());
  if (status != TRIMREG_OK) return report(status);
  json config{{"design", args.design}, {"n", args.n},
              {"p", args.p},           {"k", args.k},
              {"theta_cov", corr},     {"beta_sd", args.beta_sd},
              {"noise_sd", args.noise_sd}, {"seed", args.seed}};
  std::vector<std::string> outputs{"X.csv", "theta_star.csv", "support.csv", "meta.json"};
  outputs.push_back(args.design == "diamond" ? "sample_cov.csv" : "y.csv");
  write_manifest(out_dir, "gen", config, outputs, started);
  return 0;
}

// ---------------------------------------------------------------------------
// exp

struct ExpArgs {
  std::string config_path;
  std::string out_dir;
  int jobs = 1;
  // Flag overrides; only applied when the flag was passed.
  std::string id, design, lambda_rule, h_policy;
  std::int64_t p = 0, k = 0, n = 0, replicates = 0, h = 0, num_inits = 0, max_iters = 0,
               cv_folds = 0;
  std::uint64_t seed = 0;
  double theta_cov = 0, noise_sd = 0, beta_sd = 0, theory_c = 0, tol = 0, h_frac = 0;
  std::vector<double> lambdas, log10_lambdas, rhos, h_fracs;
  std::vector<std::int64_t> n_grid, h_values;
  std::vector<std::string> methods;
};

int run_exp(const std::string& kind, const ExpArgs& args, const CLI::App& cmd) {
  json config = json::object();
  if (!args.config_path.empty()) {
    try {
      config = load_config_file(args.config_path);
    } catch (const std::exception& e) {
      std::cerr << "trimreg: " << e.what() << "\n";
      return 1;
    }
  }
  if (config.count("experiment") && config["experiment"] != kind) {
    std::cerr << "trimreg: config is for experiment '"
              << config["experiment"].get<std::string>() << "', not '" << kind << "'\n";
    return 1;
  }
  config["experiment"] = kind;

  const auto passed = [&](const std::string& flag) { return cmd.count(flag) > 0; };
  if (passed("--id")) config["experiment_id"] = args.id;
  if (passed("--design")) config["design"] = args.design;
  if (passed("--lambda-rule")) config["lambda_rule"] = args.lambda_rule;
  if (passed("--h-policy")) config["h_policy"] = args.h_policy;
  if (passed("--p")) config["p"] = args.p;
  if (passed("--k")) config["k"] = args.k;
  if (passed("--n")) config["n"] = args.n;
  if (passed("--replicates")) config["replicates"] = args.replicates;
  if (passed("--h")) {
    config["h"] = args.h;
    config["h_policy"] = "fixed";
  }
  if (passed("--h-frac")) {
    config["h_frac"] = args.h_frac;
    config["h_policy"] = "frac_p";
  }
  if (passed("--num-inits")) config["num_inits"] = args.num_inits;
  if (passed("--max-iters")) config["max_iters"] = args.max_iters;
  if (passed("--cv-folds")) config["cv_folds"] = args.cv_folds;
  if (passed("--seed")) config["base_seed"] = args.seed;
  if (passed("--theta-cov")) config["theta_cov"] = args.theta_cov;
  if (passed("--noise-sd")) config["noise_sd"] = args.noise_sd;
  if (passed("--beta-sd")) config["beta_sd"] = args.beta_sd;
  if (passed("--theory-c")) config["theory_c"] = args.theory_c;
  if (passed("--tol")) config["tol"] = args.tol;
  if (passed("--lambdas")) config["lambdas"] = args.lambdas;
  if (passed("--log10-lambdas")) config["log10_lambdas"] = args.log10_lambdas;
  if (passed("--rhos")) config["rhos"] = args.rhos;
  if (passed("--h-fracs")) config["h_fracs"] = args.h_fracs;
  if (passed("--n-grid")) config["n_grid"] = args.n_grid;
  if (passed("--h-values")) config["h_values"] = args.h_values;
  if (passed("--methods")) config["methods"] = args.methods;

  CString resolved;
  int status = trimreg_plan_resolve(config.dump().c_str(), &resolved.ptr);
  if (status != TRIMREG_OK) return report(status);

  const std::string out_dir = resolve_out_dir(args.out_dir);
  const std::string started = utc_now();
  CString files;
  status = trimreg_run_experiment(resolved.ptr, out_dir.c_str(), args.jobs, &files.ptr);
  if (status != TRIMREG_OK) return report(status);

  const json plan = json::parse(resolved.ptr);
  const std::vector<std::string> outputs = json::parse(files.ptr);
  for (const auto& f : outputs) std::cout << "wrote " << (std::filesystem::path(out_dir) / f).string() << "\n";
  write_manifest(out_dir, "exp " + kind, plan, outputs, started);
  return 0;
}

// ---------------------------------------------------------------------------
// diag incoherence

struct DiagArgs {
  std::string data;
  std::int64_t h = 0;
  std::int64_t samples = 200;
  std::uint64_t seed = 1;
  std::string out_dir;
};

int run_diag(const DiagArgs& args) {
  double rep[5];
  const int status =
      trimreg_diag_incoherence(args.data.c_str(), args.h, args.samples, args.seed, rep);
  if (status != TRIMREG_OK) return report(status);
  std::cout.precision(17);
  std::cout << "inv_norm_max=" << rep[0] << "\n"
            << "cross_norm_max=" << rep[1] << "\n"
            << "eig_max=" << rep[2] << "\n"
            << "samples=" << static_cast<std::int64_t>(rep[3]) << "\n"
            << "singular_failures=" << static_cast<std::int64_t>(rep[4]) << "\n";
  if (!args.out_dir.empty()) {
    std::filesystem::create_directories(args.out_dir);
    const std::string started = utc_now();
    const auto path = std::filesystem::path(args.out_dir) / "incoherence.csv";
    std::ofstream out(path, std::ios::binary);
    out.precision(17);
    out << "inv_norm_max,cross_norm_max,eig_max,samples,singular_failures\n"
        << rep[0] << "," << rep[1] << "," << rep[2] << "," << static_cast<std::int64_t>(rep[3])
        << "," << static_cast<std::int64_t>(rep[4]) << "\n";
    if (!out) {
      std::cerr << "trimreg: cannot write " << path.string() << "\n";
      return 1;
    }
    json config{{"data", args.data}, {"h", args.h}, {"samples", args.samples}, {"seed", args.seed}};
    write_manifest(args.out_dir, "diag incoherence", config, {"incoherence.csv"}, started);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trimreg: sparse M-estimation with a trimmed l1 penalty"};
  app.set_version_flag("--version", std::string(trimreg_version()));
  app.require_subcommand(1);
  // --h is a real option below, so help must not claim -h.
  app.set_help_flag("--help", "Print help");
  const auto sub = [](CLI::App* parent, const std::string& name, const std::string& help) {
    auto* cmd = parent->add_subcommand(name, help);
    cmd->set_help_flag("--help", "Print help");
    return cmd;
  };

  // solve
  SolveArgs solve_args;
  auto* solve = sub(&app, "solve", "Solve one problem from a dataset directory");
  solve->add_option("--data", solve_args.data, "Dataset directory written by gen")->required();
  solve->add_option("--method", solve_args.method,
                    "trimmed | dc | lasso | glasso | scad | mcp");
  solve->add_option("--lambda", solve_args.lambda, "Penalty strength");
  solve->add_option("--h", solve_args.h, "Trimmed entries (h = 0 is the plain l1 penalty)");
  solve->add_option("--eta", solve_args.eta, "Parameter step; 0 uses 1/L");
  solve->add_option("--tau", solve_args.tau, "Weight step; 0 uses 1/lambda");
  solve->add_option("--max-iters", solve_args.max_iters, "Iteration cap");
  solve->add_option("--tol", solve_args.tol, "Stationarity tolerance");
  solve->add_flag("--exact-w", solve_args.exact_w, "Minimize over weights exactly each step");
  solve->add_flag("--trace", solve_args.trace, "Print (and with --out-dir write) the trace");
  solve->add_option("--out-dir", solve_args.out_dir, "Write trace.csv and manifest.json here");

  // gen
  GenArgs gen_args;
  auto* gen = sub(&app, "gen", "Generate a synthetic dataset directory");
  gen->add_option("--design", gen_args.design, "m2 | m1 | diamond");
  gen->add_option("--n", gen_args.n, "Samples");
  gen->add_option("--p", gen_args.p, "Dimension (regression designs)");
  gen->add_option("--k", gen_args.k, "True support size (regression designs)");
  gen->add_option("--theta-cov", gen_args.theta_cov,
                  "Design correlation (rho for diamond); default 0.7 m2, 0.3 m1, 0.1 diamond");
  gen->add_option("--beta-sd", gen_args.beta_sd, "Coefficient scale");
  gen->add_option("--noise-sd", gen_args.noise_sd, "Noise scale");
  gen->add_option("--seed", gen_args.seed, "Seed");
  gen->add_option("--out-dir", gen_args.out_dir, "Output directory (or TRIMREG_OUT_DIR)");

  // exp
  auto* exp = sub(&app, "exp", "Run an experiment");
  exp->require_subcommand(1);
  const std::vector<std::pair<std::string, std::string>> kinds = {
      {"support-recovery", "Support recovery probability against sample size"},
      {"error-curves", "Estimation error against sample size"},
      {"convergence", "Objective traces of the joint and DC solvers"},
      {"ggm-diamond", "Graph recovery on the 4-node diamond model"},
      {"init-study", "Objective spread across random initializations"}};
  ExpArgs exp_args;
  std::vector<CLI::App*> exp_cmds;
  for (const auto& [name, help] : kinds) {
    auto* cmd = sub(exp, name, help);
    cmd->add_option("--config", exp_args.config_path, "JSON plan (a manifest also works)");
    cmd->add_option("--out-dir", exp_args.out_dir, "Output directory (or TRIMREG_OUT_DIR)");
    cmd->add_option("--jobs", exp_args.jobs, "Concurrent replicates");
    cmd->add_option("--id", exp_args.id, "experiment_id tag in every row");
    cmd->add_option("--design", exp_args.design, "m2 | m1");
    cmd->add_option("--p", exp_args.p, "Dimension");
    cmd->add_option("--k", exp_args.k, "True support size");
    cmd->add_option("--n", exp_args.n, "Samples (single-instance experiments)");
    cmd->add_option("--replicates", exp_args.replicates, "Replicates per cell");
    cmd->add_option("--seed", exp_args.seed, "Base seed");
    cmd->add_option("--h", exp_args.h, "Fixed trim count (sets h_policy=fixed)");
    cmd->add_option("--h-policy", exp_args.h_policy, "k | fixed | frac_p");
    cmd->add_option("--h-frac", exp_args.h_frac, "h = ceil(h_frac * p) (sets h_policy=frac_p)");
    cmd->add_option("--theta-cov", exp_args.theta_cov, "Design correlation");
    cmd->add_option("--noise-sd", exp_args.noise_sd, "Noise scale");
    cmd->add_option("--beta-sd", exp_args.beta_sd, "Coefficient scale");
    cmd->add_option("--lambda-rule", exp_args.lambda_rule, "cv | theory");
    cmd->add_option("--theory-c", exp_args.theory_c, "lambda = c sqrt(log p / n)");
    cmd->add_option("--cv-folds", exp_args.cv_folds, "Cross-validation folds");
    cmd->add_option("--num-inits", exp_args.num_inits, "Random starts (init-study)");
    cmd->add_option("--max-iters", exp_args.max_iters, "Iteration cap per fit");
    cmd->add_option("--tol", exp_args.tol, "Stationarity tolerance");
    cmd->add_option("--lambdas", exp_args.lambdas, "Trace lambdas (convergence)")
        ->delimiter(',');
    cmd->add_option("--log10-lambdas", exp_args.log10_lambdas, "Path grid exponents")
        ->delimiter(',');
    cmd->add_option("--rhos", exp_args.rhos, "Diamond correlations")->delimiter(',');
    cmd->add_option("--h-fracs", exp_args.h_fracs, "Trimming fractions (ggm-diamond)")
        ->delimiter(',');
    cmd->add_option("--n-grid", exp_args.n_grid, "Sample sizes")->delimiter(',');
    cmd->add_option("--h-values", exp_args.h_values, "Trim counts (error-curves)")
        ->delimiter(',');
    cmd->add_option("--methods", exp_args.methods, "Solvers to run")->delimiter(',');
    exp_cmds.push_back(cmd);
  }

  // diag
  DiagArgs diag_args;
  auto* diag = sub(&app, "diag", "Diagnostics");
  auto* inco = sub(diag, "incoherence", "Block incoherence of a saved design");
  inco->add_option("--data", diag_args.data, "Dataset directory")->required();
  inco->add_option("--h", diag_args.h, "Trim set size");
  inco->add_option("--samples", diag_args.samples, "Random trim sets to draw");
  inco->add_option("--seed", diag_args.seed, "Seed");
  inco->add_option("--out-dir", diag_args.out_dir, "Write incoherence.csv and manifest here");
  diag->require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (solve->parsed()) return run_solve(solve_args);
    if (gen->parsed()) return run_gen(gen_args);
    if (exp->parsed())
      for (std::size_t i = 0; i < exp_cmds.size(); ++i)
        if (exp_cmds[i]->parsed()) {
          std::string kind = kinds[i].first;
          std::replace(kind.begin(), kind.end(), '-', '_');
          return run_exp(kind, exp_args, *exp_cmds[i]);
        }
    if (inco->parsed()) return run_diag(diag_args);
  } catch (const std::exception& e) {
    std::cerr << "trimreg: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
