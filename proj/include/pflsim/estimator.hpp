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
#include "pflsim/fpca.hpp"
#include "pflsim/splines.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace pflsim {

/// Responses, scalar covariates W (n x q, q may be 0), index covariates Z
/// (n x d, d >= 2) and the principal-component view of the centered curves.
struct RegressionData {
  Eigen::VectorXd y;
  Eigen::MatrixXd w;
  Eigen::MatrixXd z;
  FunctionalSample sample;  // centered
  ScoreMatrix scores;

  Eigen::Index n() const { return y.size(); }
  Eigen::Index q() const { return w.cols(); }
  Eigen::Index d() const { return z.cols(); }
  const Eigen::VectorXd& eigenvalues() const { return scores.eigen.eigenvalues; }

  /// Centers the curves if needed, runs the FPCA and checks dimensions.
  /// `max_components` <= 0 selects min(n - 1, G, 50).
  static RegressionData build(FunctionalSample curves, Eigen::VectorXd y, Eigen::MatrixXd w,
                              Eigen::MatrixXd z, Eigen::Index max_components = 0);
};

/// xi_il = sum_{j<=m} xi_ij xi_lj / lambda_j.
struct SmootherMatrix {
  Eigen::MatrixXd matrix;
  int m = 0;

  /// v - (1/n) * matrix * v, columnwise.
  Eigen::MatrixXd residualize(const Eigen::Ref<const Eigen::MatrixXd>& v) const;
};

SmootherMatrix smoother_matrix(const ScoreMatrix& scores,
                               const Eigen::Ref<const Eigen::VectorXd>& eigenvalues, int m);

struct TildeData {
  Eigen::VectorXd y;
  Eigen::MatrixXd w;
  Eigen::MatrixXd basis;      // transformed index design
  Eigen::MatrixXd raw_basis;  // untransformed index design
};

TildeData tilde_transform(const RegressionData& data, const Eigen::MatrixXd& basis_design,
                          const SmootherMatrix& smoother);

struct InnerSolution {
  Eigen::VectorXd coeffs;
  double ridge = 0.0;
  double normal_residual = 0.0;  // max |A'(r - A b)| relative to max |A'r|
};

/// Ridge-floored normal equations (A'A + ridge I) b = A' r with
/// ridge = max(floor, 1e-12 * trace(A'A) / K).
InnerSolution solve_normal_equations(const Eigen::MatrixXd& design,
                                     const Eigen::Ref<const Eigen::VectorXd>& target,
                                     double ridge_floor);

/// Spline coefficients minimizing |Y~ - W~ alpha - B~ b|^2.
Eigen::VectorXd profile_coeffs(const TildeData& tilde,
                               const Eigen::Ref<const Eigen::VectorXd>& alpha,
                               double ridge_floor = 1e-10);

struct OptimizerConfig {
  double rho0 = 0.01;
  double tol_obj = 1e-10;
  double tol_step = 1e-8;
  int max_iter = 200;
  double ridge = 1e-10;

  int m = 5;        // score cut-off used while profiling
  int degree = 3;
  double c0 = 1.0;  // h0 = c0 * n^(-1/5) unless h0 or subintervals is given
  std::optional<double> h0;
  std::optional<int> subintervals;

  std::vector<int> m_tilde_grid;  // empty: {1, ..., min(20, n/4)}
  std::vector<int> k_star_grid;   // empty: {degree+1, ..., min(20, n/4)}

  // Seeded directions scanned before the quasi-Newton search; the best
  // `refine` of them are optimized alongside the identity-link start.
  int restarts = 64;
  int refine = 2;
  std::uint64_t seed = 0x5eed;

  void validate() const;
};

/// Full index direction from its first d-1 coordinates, beta_d >= 0.
Eigen::VectorXd complete_direction(const Eigen::Ref<const Eigen::VectorXd>& head);

/// Profiled least-squares criterion G_n(alpha, beta) for one data set with a
/// fixed number of index subintervals. The basis endpoints follow the index
/// range of each trial direction.
class ProfileObjective {
 public:
  ProfileObjective(const RegressionData& data, const OptimizerConfig& config,
                   int subintervals);

  struct Evaluation {
    double value = 0.0;
    Eigen::VectorXd gradient;  // w.r.t. (alpha, beta_{-d})
    Eigen::VectorXd coeffs;
    BSplineBasis basis;
    double normal_residual = 0.0;
  };

  double value(const Eigen::Ref<const Eigen::VectorXd>& alpha,
               const Eigen::Ref<const Eigen::VectorXd>& beta) const;

  /// theta = (alpha, beta_{-d}); beta_d = sqrt(1 - |beta_{-d}|^2).
  Evaluation evaluate(const Eigen::Ref<const Eigen::VectorXd>& theta, bool gradient) const;
  Evaluation evaluate_full(const Eigen::Ref<const Eigen::VectorXd>& alpha,
                           const Eigen::Ref<const Eigen::VectorXd>& beta,
                           bool gradient) const;

  /// Minimum over (alpha, b) jointly for a fixed direction; returns the
  /// objective value and writes the minimizing alpha.
  double value_at_best_alpha(const Eigen::Ref<const Eigen::VectorXd>& beta,
                             Eigen::VectorXd& alpha) const;

  bool feasible(const Eigen::Ref<const Eigen::VectorXd>& theta) const;
  Eigen::VectorXd pack(const Eigen::Ref<const Eigen::VectorXd>& alpha,
                       const Eigen::Ref<const Eigen::VectorXd>& beta) const;
  Eigen::VectorXd alpha_of(const Eigen::Ref<const Eigen::VectorXd>& theta) const;
  Eigen::VectorXd beta_of(const Eigen::Ref<const Eigen::VectorXd>& theta) const;

  int subintervals() const { return subintervals_; }
  const SmootherMatrix& smoother() const { return smoother_; }
  const Eigen::VectorXd& y_tilde() const { return y_tilde_; }
  const Eigen::MatrixXd& w_tilde() const { return w_tilde_; }

 private:
  const RegressionData* data_;
  OptimizerConfig config_;
  int subintervals_;
  SmootherMatrix smoother_;
  Eigen::VectorXd y_tilde_;
  Eigen::MatrixXd w_tilde_;
};

/// Number of index subintervals implied by the configuration for a direction.
int index_subintervals(const RegressionData& data, const OptimizerConfig& config,
                       const Eigen::Ref<const Eigen::VectorXd>& beta);

double objective(const RegressionData& data, const OptimizerConfig& config,
                 const Eigen::Ref<const Eigen::VectorXd>& alpha,
                 const Eigen::Ref<const Eigen::VectorXd>& beta);

/// Least squares of Y~ on (1, W~, Z~): the partial functional linear fit with
/// an identity link.
struct LinearInit {
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;      // unit norm, last entry positive
  Eigen::VectorXd raw_beta;  // unnormalized Z coefficients
  double intercept = 0.0;
};

LinearInit init_linear_fit(const RegressionData& data, const OptimizerConfig& config);

struct OptimizerResult {
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;
  double initial_value = 0.0;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  bool used_fallback = false;
  std::vector<double> trace;
};

OptimizerResult minimize_profile(const ProfileObjective& objective,
                                 const Eigen::Ref<const Eigen::VectorXd>& alpha0,
                                 const Eigen::Ref<const Eigen::VectorXd>& beta0,
                                 const OptimizerConfig& config);

/// log(mse) + log(n) * count / n.
double bic(double mean_squared_residual, Eigen::Index n, int count);

struct Selection {
  int value = 0;
  std::vector<int> candidates;
  std::vector<double> criteria;
};

/// Picks the candidate with the smallest criterion; ties go to the smaller one.
Selection select_min_bic(const std::vector<int>& candidates,
                         const std::vector<double>& criteria);

struct SlopeEstimate {
  Eigen::VectorXd coeffs;  // a_j, j = 1..m_tilde
  Eigen::VectorXd curve;   // a(t) on the grid
};

/// a_j = (1/(n lambda_j)) sum_i residual_i xi_ij, residual = Y - W alpha - g~.
SlopeEstimate slope_estimate(const RegressionData& data,
                             const Eigen::Ref<const Eigen::VectorXd>& residual, int m_tilde);

Selection select_m_tilde(const RegressionData& data,
                         const Eigen::Ref<const Eigen::VectorXd>& residual,
                         const std::vector<int>& grid);

struct LinkEstimate {
  BSplineBasis basis;
  Eigen::VectorXd coeffs;
  double mean_squared_residual = 0.0;
};

LinkEstimate second_stage_link(const RegressionData& data, const SmootherMatrix& smoother,
                               const Eigen::Ref<const Eigen::VectorXd>& alpha,
                               const Eigen::Ref<const Eigen::VectorXd>& beta, int k_star,
                               int degree, double ridge_floor = 1e-10);

Selection select_k_star(const RegressionData& data, const SmootherMatrix& smoother,
                        const Eigen::Ref<const Eigen::VectorXd>& alpha,
                        const Eigen::Ref<const Eigen::VectorXd>& beta,
                        const std::vector<int>& grid, int degree, double ridge_floor = 1e-10);

struct ProfileFit {
  Grid grid;
  Eigen::VectorXd mean_curve;

  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;

  BSplineBasis first_basis;
  Eigen::VectorXd b_first;
  Eigen::VectorXd a_coeffs;
  Eigen::VectorXd a_curve;
  BSplineBasis second_basis;
  Eigen::VectorXd b_second;
  // <a-hat, mean curve>: the spline fits absorb it because the curves are
  // centered, so link() subtracts it to target g under uncentered curves.
  double link_offset = 0.0;

  int m = 0;
  int m_tilde = 0;
  int k_star = 0;
  double objective_value = 0.0;
  double initial_objective = 0.0;
  int iterations = 0;
  bool converged = false;

  // Identity-link starting fit, kept for comparison.
  Eigen::VectorXd alpha_linear;
  Eigen::VectorXd beta_linear;

  Selection m_tilde_selection;
  Selection k_star_selection;

  double link(double u) const { return second_basis.evaluate(b_second, u) - link_offset; }
  // On the centered-curve scale, as used inside the profile objective.
  double first_stage_link(double u) const { return first_basis.evaluate(b_first, u); }
};

ProfileFit fit(const RegressionData& data, const OptimizerConfig& config);

/// <a-hat, x> + w'alpha + g-hat(z'beta) for one raw curve on the fit grid.
double predict(const ProfileFit& fit, const Eigen::Ref<const Eigen::VectorXd>& curve,
               const Eigen::Ref<const Eigen::VectorXd>& w,
               const Eigen::Ref<const Eigen::VectorXd>& z);

/// Row-wise prediction; curves on another grid are linearly interpolated
/// onto the fit grid.
Eigen::VectorXd predict(const ProfileFit& fit, const FunctionalSample& curves,
                        const Eigen::MatrixXd& w, const Eigen::MatrixXd& z);

}  // namespace pflsim
