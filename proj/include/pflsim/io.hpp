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


#pragma once

#include "pflsim/curves.hpp"
#include "pflsim/estimator.hpp"
#include "pflsim/simgen.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <string>

namespace pflsim {

/// Columns of a scalar covariate file. The header names the blocks with the
/// tokens y, w1..wq and z1..zd (any order, case-insensitive).
struct ScalarTable {
  Eigen::VectorXd y;  // empty when the file has no y column
  Eigen::MatrixXd w;  // n x q, q may be 0
  Eigen::MatrixXd z;  // n x d
  bool has_y = false;
};

/// An empty file, or one holding only a header, yields zero rows.
ScalarTable load_scalars(const std::filesystem::path& path, bool require_y);

/// Curves and covariates read together; row counts must agree.
RegressionData load_regression_data(const std::filesystem::path& curves,
                                    const std::filesystem::path& scalars,
                                    HeaderMode header = HeaderMode::Auto);

struct PredictionInputs {
  FunctionalSample curves;
  ScalarTable scalars;
  Eigen::Index rows() const { return scalars.z.rows(); }
};

/// Empty curve and covariate files give zero rows.
PredictionInputs load_prediction_inputs(const std::filesystem::path& curves,
                                        const std::filesystem::path& scalars,
                                        HeaderMode header = HeaderMode::Auto);

/// Predictions for inputs whose curve grid may differ from the fit grid;
/// curves must lie within the fit domain.
Eigen::VectorXd predict(const ProfileFit& fit, const PredictionInputs& inputs);

/// JSON text holding everything predict needs; doubles round-trip exactly.
std::string fit_to_json(const ProfileFit& fit);
ProfileFit fit_from_json(const std::string& text, const std::string& origin = "artifact");

void save_fit(const ProfileFit& fit, const std::filesystem::path& path);
ProfileFit load_fit(const std::filesystem::path& path);

/// Plain-text account of a fit: parameters, cut-offs, objective, convergence.
std::string format_fit_summary(const ProfileFit& fit);

/// Report JSON; per-replication runtimes only with `timings`.
std::string report_to_json(const McReport& report, bool timings = false);
/// One CSV row per replication.
std::string report_to_table(const McReport& report, bool timings = false);
/// Bias/sd/MISE/MAE summary in the layout of a results table.
std::string format_report_summary(const McReport& report);

void save_report(const McReport& report, const std::filesystem::path& json_path,
                 const std::filesystem::path& table_path, bool timings = false);

/// Curves with a grid header row, and a y,w..,z.. covariate table.
void export_simulated(const SimulatedData& data, const std::filesystem::path& curves_path,
                      const std::filesystem::path& scalars_path);

/// One value per line under a "prediction" header.
void save_predictions(const Eigen::Ref<const Eigen::VectorXd>& values,
                      const std::filesystem::path& path);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

}  // namespace pflsim
