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


#include "pflsim/pflsim.h"

#include "pflsim/error.hpp"
#include "pflsim/estimator.hpp"
#include "pflsim/io.hpp"
#include "pflsim/simgen.hpp"

#include <cstring>
#include <new>
#include <string>
#include <thread>

struct pflsim_fit {
  pflsim::ProfileFit fit;
};

struct pflsim_report {
  pflsim::McReport report;
};

namespace {

thread_local std::string last_error;

pflsim_status status_of(pflsim::ErrorKind kind) {
  using pflsim::ErrorKind;
  switch (kind) {
    case ErrorKind::Io: return PFLSIM_ERR_IO;
    case ErrorKind::Format: return PFLSIM_ERR_FORMAT;
    case ErrorKind::Parse: return PFLSIM_ERR_PARSE;
    case ErrorKind::Dimension: return PFLSIM_ERR_DIMENSION;
    case ErrorKind::Extrapolation: return PFLSIM_ERR_EXTRAPOLATION;
    case ErrorKind::Precondition: return PFLSIM_ERR_PRECONDITION;
    case ErrorKind::Rank: return PFLSIM_ERR_RANK;
    case ErrorKind::DegenerateIndex: return PFLSIM_ERR_DEGENERATE_INDEX;
    case ErrorKind::Configuration: return PFLSIM_ERR_CONFIGURATION;
    case ErrorKind::Harness: return PFLSIM_ERR_HARNESS;
  }
  return PFLSIM_ERR_INTERNAL;
}

pflsim_status invalid(const char* what) {
  last_error = what;
  return PFLSIM_ERR_INVALID_ARGUMENT;
}

template <class F>
pflsim_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return PFLSIM_OK;
  } catch (const pflsim::Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return PFLSIM_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return PFLSIM_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown failure";
    return PFLSIM_ERR_INTERNAL;
  }
}

pflsim::OptimizerConfig to_config(const pflsim_estimator_options* o) {
  pflsim::OptimizerConfig c;
  if (!o) return c;
  c.m = o->m;
  c.degree = o->degree;
  c.c0 = o->c0;
  if (o->h0 > 0.0) c.h0 = o->h0;
  if (o->subintervals > 0) c.subintervals = o->subintervals;
  c.rho0 = o->rho0;
  c.tol_obj = o->tol_obj;
  c.tol_step = o->tol_step;
  c.max_iter = o->max_iter;
  c.ridge = o->ridge;
  c.restarts = o->restarts;
  c.refine = o->refine;
  c.seed = o->seed;
  return c;
}

pflsim::SimSpec to_spec(const pflsim_sim_options& o, const pflsim_estimator_options* est) {
  pflsim::SimSpec s;
  if (o.model != PFLSIM_MODEL_41 && o.model != PFLSIM_MODEL_42)
    pflsim::fail(pflsim::ErrorKind::Configuration, "unknown simulation model");
  s.model = o.model == PFLSIM_MODEL_41 ? pflsim::SimModel::M41 : pflsim::SimModel::M42;
  s.n = o.n;
  s.delta = o.delta;
  s.replications = o.replications;
  s.seed = o.seed;
  s.test_size = o.test_size;
  s.grid_size = o.grid_size;
  if (o.sigma > 0.0) s.sigma = o.sigma;
  s.jobs = o.jobs ? o.jobs : std::max(1u, std::thread::hardware_concurrency());
  s.estimator = to_config(est);
  return s;
}

pflsim::HeaderMode to_header(pflsim_header h) {
  switch (h) {
    case PFLSIM_HEADER_PRESENT: return pflsim::HeaderMode::Present;
    case PFLSIM_HEADER_ABSENT: return pflsim::HeaderMode::Absent;
    default: return pflsim::HeaderMode::Auto;
  }
}

pflsim_status copy_text(const std::string& text, char* buffer, size_t capacity, size_t* needed) {
  if (needed) *needed = text.size() + 1;
  if (!buffer || capacity < text.size() + 1) {
    last_error = "buffer too small";
    return PFLSIM_ERR_INVALID_ARGUMENT;
  }
  std::memcpy(buffer, text.c_str(), text.size() + 1);
  last_error.clear();
  return PFLSIM_OK;
}

pflsim_status copy_vector(const Eigen::VectorXd& v, double* out, size_t capacity) {
  if (!out) return invalid("output pointer is null");
  if (capacity < static_cast<size_t>(v.size())) return invalid("output capacity too small");
  std::memcpy(out, v.data(), static_cast<size_t>(v.size()) * sizeof(double));
  last_error.clear();
  return PFLSIM_OK;
}

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::MatrixXd matrix_from(const double* data, size_t rows, size_t cols) {
  if (rows == 0 || cols == 0) return Eigen::MatrixXd(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  return Eigen::Map<const RowMajor>(data, static_cast<Eigen::Index>(rows),
                                    static_cast<Eigen::Index>(cols));
}

}  // namespace

extern "C" {

const char* pflsim_version(void) { return "0.1.0"; }

const char* pflsim_status_string(pflsim_status status) {
  switch (status) {
    case PFLSIM_OK: return "ok";
    case PFLSIM_ERR_IO: return "io error";
    case PFLSIM_ERR_FORMAT: return "format error";
    case PFLSIM_ERR_PARSE: return "parse error";
    case PFLSIM_ERR_DIMENSION: return "dimension error";
    case PFLSIM_ERR_EXTRAPOLATION: return "extrapolation error";
    case PFLSIM_ERR_PRECONDITION: return "precondition error";
    case PFLSIM_ERR_RANK: return "rank error";
    case PFLSIM_ERR_DEGENERATE_INDEX: return "degenerate index";
    case PFLSIM_ERR_CONFIGURATION: return "configuration error";
    case PFLSIM_ERR_HARNESS: return "harness error";
    case PFLSIM_ERR_INVALID_ARGUMENT: return "invalid argument";
    case PFLSIM_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* pflsim_last_error(void) { return last_error.c_str(); }

void pflsim_estimator_options_default(pflsim_estimator_options* o) {
  if (!o) return;
  const pflsim::OptimizerConfig c;
  o->m = c.m;
  o->degree = c.degree;
  o->c0 = c.c0;
  o->h0 = 0.0;
  o->subintervals = 0;
  o->rho0 = c.rho0;
  o->tol_obj = c.tol_obj;
  o->tol_step = c.tol_step;
  o->max_iter = c.max_iter;
  o->ridge = c.ridge;
  o->restarts = c.restarts;
  o->refine = c.refine;
  o->seed = c.seed;
}

void pflsim_sim_options_default(pflsim_sim_options* o) {
  if (!o) return;
  const pflsim::SimSpec s;
  o->model = PFLSIM_MODEL_41;
  o->n = s.n;
  o->delta = s.delta;
  o->replications = s.replications;
  o->seed = s.seed;
  o->test_size = s.test_size;
  o->grid_size = s.grid_size;
  o->sigma = 0.0;
  o->jobs = 0;
}

pflsim_status pflsim_fit_files(const char* curves_path, const char* scalars_path,
                               pflsim_header header, const pflsim_estimator_options* options,
                               pflsim_fit** out) {
  if (!curves_path || !scalars_path || !out) return invalid("null argument");
  *out = nullptr;
  return guarded([&] {
    const pflsim::OptimizerConfig config = to_config(options);
    config.validate();
    const auto data = pflsim::load_regression_data(curves_path, scalars_path, to_header(header));
    *out = new pflsim_fit{pflsim::fit(data, config)};
  });
}

pflsim_status pflsim_fit_arrays(size_t n, size_t grid_size, const double* grid,
                                const double* curves, const double* y, size_t q,
                                const double* w, size_t d, const double* z,
                                const pflsim_estimator_options* options, pflsim_fit** out) {
  if (!out || !curves || !y || !z || (q > 0 && !w)) return invalid("null argument");
  *out = nullptr;
  return guarded([&] {
    const pflsim::OptimizerConfig config = to_config(options);
    config.validate();
    pflsim::Grid g = grid ? pflsim::Grid(std::vector<double>(grid, grid + grid_size))
                          : pflsim::Grid::uniform(grid_size);
    pflsim::FunctionalSample sample(std::move(g), matrix_from(curves, n, grid_size));
    Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y, static_cast<Eigen::Index>(n));
    const auto data = pflsim::RegressionData::build(std::move(sample), std::move(yv),
                                                    matrix_from(w, n, q), matrix_from(z, n, d));
    *out = new pflsim_fit{pflsim::fit(data, config)};
  });
}

void pflsim_fit_free(pflsim_fit* fit) { delete fit; }

pflsim_status pflsim_fit_save(const pflsim_fit* fit, const char* path) {
  if (!fit || !path) return invalid("null argument");
  return guarded([&] { pflsim::save_fit(fit->fit, path); });
}

pflsim_status pflsim_fit_load(const char* path, pflsim_fit** out) {
  if (!path || !out) return invalid("null argument");
  *out = nullptr;
  return guarded([&] { *out = new pflsim_fit{pflsim::load_fit(path)}; });
}

pflsim_status pflsim_fit_get_info(const pflsim_fit* fit, pflsim_fit_info* info) {
  if (!fit || !info) return invalid("null argument");
  const auto& f = fit->fit;
  info->q = static_cast<size_t>(f.alpha.size());
  info->d = static_cast<size_t>(f.beta.size());
  info->grid_size = f.grid.size();
  info->m = f.m;
  info->m_tilde = f.m_tilde;
  info->k_star = f.k_star;
  info->objective = f.objective_value;
  info->initial_objective = f.initial_objective;
  info->iterations = f.iterations;
  info->converged = f.converged ? 1 : 0;
  last_error.clear();
  return PFLSIM_OK;
}

pflsim_status pflsim_fit_alpha(const pflsim_fit* fit, double* out, size_t capacity) {
  if (!fit) return invalid("null fit");
  return copy_vector(fit->fit.alpha, out, capacity);
}

pflsim_status pflsim_fit_beta(const pflsim_fit* fit, double* out, size_t capacity) {
  if (!fit) return invalid("null fit");
  return copy_vector(fit->fit.beta, out, capacity);
}

pflsim_status pflsim_fit_slope(const pflsim_fit* fit, double* out, size_t capacity) {
  if (!fit) return invalid("null fit");
  return copy_vector(fit->fit.a_curve, out, capacity);
}

pflsim_status pflsim_fit_link(const pflsim_fit* fit, double u, double* out) {
  if (!fit || !out) return invalid("null argument");
  return guarded([&] { *out = fit->fit.link(u); });
}

pflsim_status pflsim_fit_summary(const pflsim_fit* fit, char* buffer, size_t capacity,
                                 size_t* needed) {
  if (!fit) return invalid("null fit");
  std::string text;
  const pflsim_status st = guarded([&] { text = pflsim::format_fit_summary(fit->fit); });
  if (st != PFLSIM_OK) return st;
  return copy_text(text, buffer, capacity, needed);
}

pflsim_status pflsim_predict_arrays(const pflsim_fit* fit, size_t n, size_t grid_size,
                                    const double* grid, const double* curves, const double* w,
                                    const double* z, double* out) {
  if (!fit) return invalid("null fit");
  if (n == 0) {
    last_error.clear();
    return PFLSIM_OK;
  }
  const auto& f = fit->fit;
  const auto q = static_cast<size_t>(f.alpha.size());
  const auto d = static_cast<size_t>(f.beta.size());
  if (!curves || !z || !out || (q > 0 && !w)) return invalid("null argument");
  return guarded([&] {
    pflsim::Grid g = grid ? pflsim::Grid(std::vector<double>(grid, grid + grid_size)) : f.grid;
    if (!grid && grid_size != f.grid.size())
      pflsim::fail(pflsim::ErrorKind::Dimension, "curve length does not match the fit grid");
    pflsim::FunctionalSample sample(std::move(g), matrix_from(curves, n, grid_size));
    const Eigen::VectorXd pred = pflsim::predict(f, sample, matrix_from(w, n, q), matrix_from(z, n, d));
    std::memcpy(out, pred.data(), n * sizeof(double));
  });
}

pflsim_status pflsim_predict_files(const pflsim_fit* fit, const char* curves_path,
                                   const char* scalars_path, pflsim_header header,
                                   const char* out_path, size_t* rows) {
  if (!fit || !curves_path || !scalars_path || !out_path) return invalid("null argument");
  return guarded([&] {
    const auto inputs = pflsim::load_prediction_inputs(curves_path, scalars_path, to_header(header));
    const Eigen::VectorXd pred = pflsim::predict(fit->fit, inputs);
    pflsim::save_predictions(pred, out_path);
    if (rows) *rows = static_cast<size_t>(pred.size());
  });
}

pflsim_status pflsim_simulate(const pflsim_sim_options* options,
                              const pflsim_estimator_options* estimator, pflsim_report** out) {
  if (!options || !out) return invalid("null argument");
  *out = nullptr;
  return guarded([&] { *out = new pflsim_report{pflsim::monte_carlo(to_spec(*options, estimator))}; });
}

void pflsim_report_free(pflsim_report* report) { delete report; }

pflsim_status pflsim_report_get_info(const pflsim_report* report, pflsim_report_info* info) {
  if (!report || !info) return invalid("null argument");
  const auto& r = report->report;
  info->replications = r.records.size();
  info->failures = r.failures;
  info->converged = r.converged;
  info->mise_g_mean = r.mise_g_mean;
  info->mise_g_median = r.mise_g_median;
  info->mise_a_mean = r.mise_a_mean;
  info->mise_a_median = r.mise_a_median;
  info->mae_mean = r.mae_mean;
  info->mae_median = r.mae.median;
  last_error.clear();
  return PFLSIM_OK;
}

pflsim_status pflsim_report_save(const pflsim_report* report, const char* json_path,
                                 const char* table_path, int timings) {
  if (!report || !json_path || !table_path) return invalid("null argument");
  return guarded([&] { pflsim::save_report(report->report, json_path, table_path, timings != 0); });
}

pflsim_status pflsim_report_summary(const pflsim_report* report, char* buffer, size_t capacity,
                                    size_t* needed) {
  if (!report) return invalid("null report");
  std::string text;
  const pflsim_status st = guarded([&] { text = pflsim::format_report_summary(report->report); });
  if (st != PFLSIM_OK) return st;
  return copy_text(text, buffer, capacity, needed);
}

pflsim_status pflsim_generate_files(const pflsim_sim_options* options, uint32_t replication,
                                    const char* curves_path, const char* scalars_path) {
  if (!options || !curves_path || !scalars_path) return invalid("null argument");
  return guarded([&] {
    const pflsim::SimSpec spec = to_spec(*options, nullptr);
    if (spec.n < 1) pflsim::fail(pflsim::ErrorKind::Configuration, "n must be positive");
    pflsim::GeneratorOptions gen{spec.grid_size, spec.sigma, 1};
    const auto data = pflsim::generate(spec.model, spec.n, spec.delta,
                                       {spec.seed, replication, 0}, gen);
    pflsim::export_simulated(data, curves_path, scalars_path);
  });
}

}  // extern "C"
