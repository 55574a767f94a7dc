// Copyright 2026 The pflsim Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Command-line front end. Uses only the C interface of libpflsim.

#include "pflsim/pflsim.h"

#include <CLI11.hpp>

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

namespace {

struct FitDeleter {
  void operator()(pflsim_fit* f) const { pflsim_fit_free(f); }
};
struct ReportDeleter {
  void operator()(pflsim_report* r) const { pflsim_report_free(r); }
};
using FitPtr = std::unique_ptr<pflsim_fit, FitDeleter>;
using ReportPtr = std::unique_ptr<pflsim_report, ReportDeleter>;

struct Failure {
  pflsim_status status;
};

void check(pflsim_status status) {
  if (status != PFLSIM_OK) throw Failure{status};
}

struct EstimatorFlags {
  pflsim_estimator_options options{};

  void add(CLI::App* app) {
    pflsim_estimator_options_default(&options);
    app->add_option("--m", options.m, "principal components used while profiling")
        ->capture_default_str()->check(CLI::NonNegativeNumber);
    app->add_option("--c0", options.c0, "knot spacing constant, h0 = c0 * n^(-1/5)")
        ->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--h0", options.h0, "knot spacing; overrides --c0")->check(CLI::PositiveNumber);
    app->add_option("--knots", options.subintervals, "number of index subintervals; overrides --h0")
        ->check(CLI::PositiveNumber);
    app->add_option("--degree", options.degree, "spline degree")
        ->capture_default_str()->check(CLI::Range(1, 10));
    app->add_option("--rho0", options.rho0, "lower bound for the last index coordinate")
        ->capture_default_str()->check(CLI::Range(0.0, 1.0));
    app->add_option("--max-iter", options.max_iter, "quasi-Newton iteration limit")
        ->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--restarts", options.restarts, "directions scanned before the search")
        ->capture_default_str()->check(CLI::NonNegativeNumber);
    app->add_option("--refine", options.refine, "scanned directions that are optimized")
        ->capture_default_str()->check(CLI::NonNegativeNumber);
    app->add_option("--search-seed", options.seed, "seed of the scanned directions")
        ->capture_default_str();
  }
};

pflsim_header parse_header(const std::string& s) {
  if (s == "yes") return PFLSIM_HEADER_PRESENT;
  if (s == "no") return PFLSIM_HEADER_ABSENT;
  return PFLSIM_HEADER_AUTO;
}

std::string fit_summary(const pflsim_fit* fit) {
  size_t needed = 0;
  pflsim_fit_summary(fit, nullptr, 0, &needed);
  std::vector<char> buf(needed);
  check(pflsim_fit_summary(fit, buf.data(), buf.size(), &needed));
  return buf.data();
}

std::string report_summary(const pflsim_report* report) {
  size_t needed = 0;
  pflsim_report_summary(report, nullptr, 0, &needed);
  std::vector<char> buf(needed);
  check(pflsim_report_summary(report, buf.data(), buf.size(), &needed));
  return buf.data();
}

void write_text(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out.flush()) {
      std::remove(tmp.c_str());
      throw std::runtime_error(path + ": cannot write");
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw std::runtime_error(path + ": cannot rename into place");
  }
}

pflsim_model parse_model(const std::string& s) {
  return s == "m42" ? PFLSIM_MODEL_42 : PFLSIM_MODEL_41;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Partial functional partially linear single-index regression"};
  app.set_config("--config", "", "TOML or INI file with option values; flags take precedence");
  app.require_subcommand(1);
  app.fallthrough();
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "suppress summaries on standard output");

  const std::vector<std::string> header_choices{"auto", "yes", "no"};
  const std::vector<std::string> model_choices{"m41", "m42"};

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "estimate the model from curve and covariate files");
  std::string fit_curves, fit_scalars, fit_artifact, fit_out, fit_header = "auto";
  EstimatorFlags fit_flags;
  fit_cmd->add_option("--curves", fit_curves, "curves, one subject per row; optional grid header row")
      ->required();
  fit_cmd->add_option("--scalars", fit_scalars, "covariates with header y,w1..wq,z1..zd")->required();
  fit_cmd->add_option("--artifact", fit_artifact, "fit artifact to write (JSON)")->required();
  fit_cmd->add_option("--out", fit_out, "also write the text summary here");
  fit_cmd->add_option("--curves-header", fit_header, "grid header row in the curve file")
      ->capture_default_str()->check(CLI::IsMember(header_choices));
  fit_flags.add(fit_cmd);

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "predict responses with a saved fit");
  std::string pred_curves, pred_scalars, pred_artifact, pred_out, pred_header = "auto";
  predict_cmd->add_option("--artifact", pred_artifact, "fit artifact from `fit`")->required();
  predict_cmd->add_option("--curves", pred_curves, "new curves")->required();
  predict_cmd->add_option("--scalars", pred_scalars, "new covariates w1..wq,z1..zd (y ignored)")
      ->required();
  predict_cmd->add_option("--out", pred_out, "prediction table to write (CSV)")->required();
  predict_cmd->add_option("--curves-header", pred_header, "grid header row in the curve file")
      ->capture_default_str()->check(CLI::IsMember(header_choices));

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo study of a simulation model");
  pflsim_sim_options sim{};
  pflsim_sim_options_default(&sim);
  std::string sim_model = "m41", sim_out, sim_table;
  bool sim_timings = false;
  EstimatorFlags sim_flags;
  sim_cmd->add_option("--model", sim_model, "simulation model")
      ->capture_default_str()->check(CLI::IsMember(model_choices));
  sim_cmd->add_option("--n", sim.n, "training sample size")->capture_default_str()
      ->check(CLI::Range(30, 1000000));
  sim_cmd->add_option("--delta", sim.delta, "eigenvalue decay exponent")->capture_default_str();
  sim_cmd->add_option("--reps", sim.replications, "replications")->capture_default_str()
      ->check(CLI::PositiveNumber);
  sim_cmd->add_option("--seed", sim.seed, "master seed")->capture_default_str();
  sim_cmd->add_option("--sigma", sim.sigma, "noise sd (default 0.5 for m41, 1 for m42)")
      ->check(CLI::PositiveNumber);
  sim_cmd->add_option("--test-size", sim.test_size, "test set size per replication")
      ->capture_default_str()->check(CLI::PositiveNumber);
  sim_cmd->add_option("--grid-size", sim.grid_size, "curve grid points")->capture_default_str()
      ->check(CLI::Range(2, 100000));
  sim_cmd->add_option("--jobs", sim.jobs, "worker threads (0 = all cores)")->capture_default_str();
  sim_cmd->add_option("--out", sim_out, "report to write (JSON)")->required();
  sim_cmd->add_option("--table", sim_table, "per-replication table (default: report path with .csv)");
  sim_cmd->add_flag("--timings", sim_timings, "record per-replication runtimes (output is then run-dependent)");
  sim_flags.add(sim_cmd);

  // generate
  auto* gen_cmd = app.add_subcommand("generate", "write one simulated training set to files");
  pflsim_sim_options gen{};
  pflsim_sim_options_default(&gen);
  std::string gen_model = "m41", gen_curves, gen_scalars;
  std::uint32_t gen_replication = 0;
  gen_cmd->add_option("--model", gen_model, "simulation model")
      ->capture_default_str()->check(CLI::IsMember(model_choices));
  gen_cmd->add_option("--n", gen.n, "sample size")->capture_default_str()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--delta", gen.delta, "eigenvalue decay exponent")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "master seed")->capture_default_str();
  gen_cmd->add_option("--replication", gen_replication, "replication stream")->capture_default_str();
  gen_cmd->add_option("--sigma", gen.sigma, "noise sd")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--grid-size", gen.grid_size, "curve grid points")->capture_default_str()
      ->check(CLI::Range(2, 100000));
  gen_cmd->add_option("--curves", gen_curves, "curve file to write")->required();
  gen_cmd->add_option("--scalars", gen_scalars, "covariate file to write")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit_cmd->parsed()) {
      pflsim_fit* raw = nullptr;
      check(pflsim_fit_files(fit_curves.c_str(), fit_scalars.c_str(), parse_header(fit_header),
                             &fit_flags.options, &raw));
      FitPtr fit(raw);
      check(pflsim_fit_save(fit.get(), fit_artifact.c_str()));
      const std::string summary = fit_summary(fit.get());
      if (!fit_out.empty()) write_text(fit_out, summary);
      if (!quiet) std::cout << summary;
      pflsim_fit_info info{};
      check(pflsim_fit_get_info(fit.get(), &info));
      if (!info.converged)
        std::cerr << "pflsim: warning: optimizer stopped before converging after "
                  << info.iterations << " iterations\n";
    } else if (predict_cmd->parsed()) {
      pflsim_fit* raw = nullptr;
      check(pflsim_fit_load(pred_artifact.c_str(), &raw));
      FitPtr fit(raw);
      size_t rows = 0;
      check(pflsim_predict_files(fit.get(), pred_curves.c_str(), pred_scalars.c_str(),
                                 parse_header(pred_header), pred_out.c_str(), &rows));
      if (!quiet) std::cout << "wrote " << rows << " predictions to " << pred_out << "\n";
    } else if (sim_cmd->parsed()) {
      sim.model = parse_model(sim_model);
      if (sim_table.empty())
        sim_table = std::filesystem::path(sim_out).replace_extension(".csv").string();
      pflsim_report* raw = nullptr;
      check(pflsim_simulate(&sim, &sim_flags.options, &raw));
      ReportPtr report(raw);
      check(pflsim_report_save(report.get(), sim_out.c_str(), sim_table.c_str(), sim_timings ? 1 : 0));
      if (!quiet) std::cout << report_summary(report.get());
    } else if (gen_cmd->parsed()) {
      gen.model = parse_model(gen_model);
      check(pflsim_generate_files(&gen, gen_replication, gen_curves.c_str(), gen_scalars.c_str()));
    }
  } catch (const Failure& f) {
    std::cerr << "pflsim: error: " << pflsim_last_error() << " ("
              << pflsim_status_string(f.status) << ")\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "pflsim: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
