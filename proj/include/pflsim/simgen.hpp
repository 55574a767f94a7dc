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

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pflsim {

enum class SimModel { M41, M42 };

const char* to_string(SimModel model) noexcept;
SimModel parse_model(const std::string& name);

/// Noise standard deviation used when none is configured: 0.5 for M41, 1 for M42.
double default_sigma(SimModel model) noexcept;

/// Population quantities behind a simulated data set.
struct TruthBundle {
  SimModel model = SimModel::M41;
  double delta = 1.5;
  Eigen::VectorXd eigenvalues;    // lambda_j, j = 1..50
  Eigen::VectorXd a_coeffs;       // a_j, j = 1..50
  Eigen::MatrixXd eigenfunctions; // phi_j on the grid, 50 x G
  Eigen::VectorXd a_curve;        // a(t) on the grid
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;
  double sigma = 0.5;

  double link(double u) const;
};

struct SimulatedData {
  FunctionalSample curves;  // raw, not centered
  Eigen::VectorXd y;
  Eigen::MatrixXd w;
  Eigen::MatrixXd z;
  Eigen::MatrixXd true_scores;  // xi_ij, n x 50
  Eigen::VectorXd noise;
  Eigen::VectorXd regression;   // noiseless E[Y | X, W, Z]
  TruthBundle truth;
};

struct StreamKey {
  std::uint64_t seed = 0;
  std::uint32_t replication = 0;
  std::uint32_t salt = 0;  // separates training and test draws
};

struct GeneratorOptions {
  std::size_t grid_size = 101;
  std::optional<double> sigma;  // default 0.5 for M41, 1 for M42
  std::size_t first_index = 1;  // 1-based subject index of the first row
};

constexpr int kTruncation = 50;

Eigen::VectorXd slope_coefficients();
Eigen::VectorXd model_eigenvalues(SimModel model, double delta);
/// phi_1 = 1, phi_j = sqrt(2) cos((j-1) pi t).
Eigen::MatrixXd cosine_basis(const Grid& grid);

SimulatedData generate(SimModel model, std::size_t n, double delta, const StreamKey& key,
                       const GeneratorOptions& options = {});
SimulatedData generate_model41(std::size_t n, double delta, std::uint64_t seed,
                               const GeneratorOptions& options = {});
SimulatedData generate_model42(std::size_t n, double delta, std::uint64_t seed,
                               const GeneratorOptions& options = {});

RegressionData to_regression_data(const SimulatedData& sim);

/// Trapezoidal integral of (estimate - truth)^2.
double mise(const Eigen::Ref<const Eigen::VectorXd>& estimate,
            const Eigen::Ref<const Eigen::VectorXd>& truth, const Grid& grid);

/// Integrated squared link error over the second-stage index range.
double link_mise(const ProfileFit& fit, const TruthBundle& truth, std::size_t points = 201);

/// Mean absolute difference between predictions and noiseless regression values.
double mae_prediction(const ProfileFit& fit, const SimulatedData& test);
double mean_absolute_error(const Eigen::Ref<const Eigen::VectorXd>& predicted,
                           const Eigen::Ref<const Eigen::VectorXd>& truth);

struct SimSpec {
  SimModel model = SimModel::M41;
  std::size_t n = 200;
  double delta = 1.5;
  std::size_t replications = 100;
  std::uint64_t seed = 20260101;
  std::size_t test_size = 300;
  std::size_t grid_size = 101;
  std::optional<double> sigma;
  OptimizerConfig estimator;
  unsigned jobs = 1;

  void validate() const;
};

struct ReplicationRecord {
  std::size_t replication = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;
  Eigen::VectorXd alpha_linear;
  Eigen::VectorXd beta_linear;
  double mise_g = 0.0;
  double mise_a = 0.0;
  double mae = 0.0;
  int m_tilde = 0;
  int k_star = 0;
  int iterations = 0;
  bool converged = false;
  double runtime_seconds = 0.0;
};

struct ParameterSummary {
  std::string name;
  double truth = 0.0;
  double mean = 0.0;
  double bias = 0.0;
  double sd = 0.0;
};

struct Quantiles {
  double min = 0.0, q25 = 0.0, median = 0.0, q75 = 0.0, max = 0.0;
};

struct McReport {
  SimSpec spec;
  std::vector<ReplicationRecord> records;
  std::size_t failures = 0;
  std::size_t converged = 0;
  std::vector<ParameterSummary> parameters;         // profile estimator
  std::vector<ParameterSummary> linear_parameters;  // identity-link baseline
  double mise_g_mean = 0.0, mise_g_median = 0.0;
  double mise_a_mean = 0.0, mise_a_median = 0.0;
  double mae_mean = 0.0;
  Quantiles mae;
};

/// Fits a single simulated replication and scores it.
ReplicationRecord run_replication(const SimSpec& spec, std::size_t replication);

/// Aggregates depend only on the records, folded in replication order.
void aggregate(McReport& report);

McReport monte_carlo(const SimSpec& spec);

Quantiles quantiles(std::vector<double> values);

}  // namespace pflsim
