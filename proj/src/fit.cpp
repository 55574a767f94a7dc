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

#include "pflsim/estimator.hpp"

#include "pflsim/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace pflsim {

double bic(double mean_squared_residual, Eigen::Index n, int count) {
  const auto nn = static_cast<double>(n);
  return std::log(mean_squared_residual) + std::log(nn) * count / nn;
}

Selection select_min_bic(const std::vector<int>& candidates,
                         const std::vector<double>& criteria) {
  if (candidates.empty()) fail(ErrorKind::Configuration, "empty selection grid");
  if (candidates.size() != criteria.size())
    fail(ErrorKind::Dimension, "candidate and criterion counts differ");
  Selection out;
  out.candidates = candidates;
  out.criteria = criteria;
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const bool better = criteria[i] < criteria[best] ||
                        (criteria[i] == criteria[best] && candidates[i] < candidates[best]);
    if (better) best = i;
  }
  out.value = candidates[best];
  return out;
}

namespace {

void require_positive_eigenvalues(const RegressionData& data, int count) {
  if (count > data.eigenvalues().size())
    fail(ErrorKind::Configuration, "slope cut-off " + std::to_string(count) +
                                       " exceeds the available components");
  const auto& lambda = data.eigenvalues();
  if (count > 0 && !(lambda(count - 1) > 1e-13 * lambda(0)))
    fail(ErrorKind::Rank, "eigenvalue " + std::to_string(count) + " is not positive");
}

int usable_components(const RegressionData& data) {
  const auto& lambda = data.eigenvalues();
  int j = 0;
  while (j < lambda.size() && lambda(j) > 1e-13 * lambda(0)) ++j;
  return j;
}

std::vector<int> default_m_tilde_grid(const RegressionData& data) {
  const int hi = std::min<int>({20, static_cast<int>(data.n() / 4), usable_components(data)});
  std::vector<int> grid;
  for (int m = 1; m <= std::max(hi, 1); ++m) grid.push_back(m);
  return grid;
}

std::vector<int> default_k_star_grid(const RegressionData& data, int degree) {
  const int hi = std::max(std::min(20, static_cast<int>(data.n() / 4)), degree + 1);
  std::vector<int> grid;
  for (int k = degree + 1; k <= hi; ++k) grid.push_back(k);
  return grid;
}

Eigen::VectorXd index_of(const RegressionData& data, const Eigen::Ref<const Eigen::VectorXd>& beta) {
  if (beta.size() != data.d()) fail(ErrorKind::Dimension, "beta has the wrong length");
  return data.z * beta;
}

}  // namespace

SlopeEstimate slope_estimate(const RegressionData& data,
                             const Eigen::Ref<const Eigen::VectorXd>& residual, int m_tilde) {
  if (residual.size() != data.n()) fail(ErrorKind::Dimension, "residual length mismatch");
  if (m_tilde < 0) fail(ErrorKind::Configuration, "slope cut-off must be non-negative");
  require_positive_eigenvalues(data, m_tilde);
  const auto n = static_cast<double>(data.n());
  SlopeEstimate out;
  const auto& xi = data.scores.scores;
  out.coeffs = (xi.leftCols(m_tilde).transpose() * residual).cwiseQuotient(
                   data.eigenvalues().head(m_tilde)) / n;
  out.curve = data.scores.eigen.eigenfunctions.topRows(m_tilde).transpose() * out.coeffs;
  return out;
}

Selection select_m_tilde(const RegressionData& data,
                         const Eigen::Ref<const Eigen::VectorXd>& residual,
                         const std::vector<int>& grid) {
  if (grid.empty()) fail(ErrorKind::Configuration, "empty m-tilde grid");
  const int top = *std::max_element(grid.begin(), grid.end());
  const SlopeEstimate full = slope_estimate(data, residual, top);
  std::vector<double> criteria;
  criteria.reserve(grid.size());
  for (int m : grid) {
    if (m < 0) fail(ErrorKind::Configuration, "negative m-tilde candidate");
    const Eigen::VectorXd r =
        residual - data.scores.scores.leftCols(m) * full.coeffs.head(m);
    criteria.push_back(bic(r.squaredNorm() / static_cast<double>(data.n()), data.n(), m));
  }
  return select_min_bic(grid, criteria);
}

LinkEstimate second_stage_link(const RegressionData& data, const SmootherMatrix& smoother,
                               const Eigen::Ref<const Eigen::VectorXd>& alpha,
                               const Eigen::Ref<const Eigen::VectorXd>& beta, int k_star,
                               int degree, double ridge_floor) {
  if (k_star < degree + 1)
    fail(ErrorKind::Configuration, "second-stage dimension must be at least degree + 1");
  if (alpha.size() != data.q()) fail(ErrorKind::Dimension, "alpha has the wrong length");
  const Eigen::VectorXd index = index_of(data, beta);
  const std::span<const double> u(index.data(), static_cast<std::size_t>(index.size()));
  LinkEstimate out;
  out.basis = build_index_knots(u, degree, KnotRule{{}, k_star - degree});
  const Eigen::MatrixXd design = smoother.residualize(out.basis.design(u));
  const Eigen::VectorXd target =
      smoother.residualize(data.y) - smoother.residualize(data.w) * alpha;
  out.coeffs = solve_normal_equations(design, target, ridge_floor).coeffs;
  out.mean_squared_residual =
      (target - design * out.coeffs).squaredNorm() / static_cast<double>(data.n());
  return out;
}

Selection select_k_star(const RegressionData& data, const SmootherMatrix& smoother,
                        const Eigen::Ref<const Eigen::VectorXd>& alpha,
                        const Eigen::Ref<const Eigen::VectorXd>& beta,
                        const std::vector<int>& grid, int degree, double ridge_floor) {
  if (grid.empty()) fail(ErrorKind::Configuration, "empty K* grid");
  std::vector<double> criteria;
  criteria.reserve(grid.size());
  for (int k : grid) {
    const auto link = second_stage_link(data, smoother, alpha, beta, k, degree, ridge_floor);
    criteria.push_back(bic(link.mean_squared_residual, data.n(), k));
  }
  return select_min_bic(grid, criteria);
}

ProfileFit fit(const RegressionData& data, const OptimizerConfig& config) {
  config.validate();
  const Eigen::Index d = data.d();
  const LinearInit init = init_linear_fit(data, config);
  const int k = index_subintervals(data, config, init.beta);
  const ProfileObjective objective(data, config, k);

  OptimizerResult best = minimize_profile(objective, init.alpha, init.beta, config);
  const double initial = best.initial_value;

  // The index search is not convex: scan seeded directions on the feasible
  // hemisphere and refine the most promising ones as well.
  struct Candidate {
    double value;
    Eigen::VectorXd alpha, beta;
  };
  std::vector<Candidate> scanned;
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal;
  for (int r = 0; r < config.restarts; ++r) {
    Eigen::VectorXd beta(d);
    for (Eigen::Index j = 0; j < d; ++j) beta(j) = normal(rng);
    beta(d - 1) = std::max(std::abs(beta(d - 1)), 1e-3);
    beta.normalize();
    if (beta(d - 1) < config.rho0) continue;
    Candidate c{0.0, {}, beta};
    try {
      c.value = objective.value_at_best_alpha(beta, c.alpha);
    } catch (const Error&) {
      continue;
    }
    scanned.push_back(std::move(c));
  }
  std::stable_sort(scanned.begin(), scanned.end(),
                   [](const Candidate& a, const Candidate& b) { return a.value < b.value; });
  const auto refined = std::min<std::size_t>(scanned.size(), static_cast<std::size_t>(config.refine));
  for (std::size_t r = 0; r < refined; ++r) {
    OptimizerResult candidate =
        minimize_profile(objective, scanned[r].alpha, scanned[r].beta, config);
    if (candidate.value < best.value) {
      candidate.iterations += best.iterations;
      best = std::move(candidate);
    } else {
      best.iterations += candidate.iterations;
    }
  }
  best.initial_value = initial;

  ProfileFit out;
  out.grid = data.sample.grid;
  out.mean_curve = data.sample.mean_curve;
  out.alpha = best.alpha;
  out.beta = best.beta;
  out.m = config.m;
  out.objective_value = best.value;
  out.initial_objective = initial;
  out.iterations = best.iterations;
  out.converged = best.converged;
  out.alpha_linear = init.alpha;
  out.beta_linear = init.beta;

  const auto first = objective.evaluate_full(out.alpha, out.beta, false);
  out.first_basis = first.basis;
  out.b_first = first.coeffs;

  const Eigen::VectorXd index = data.z * out.beta;
  const std::span<const double> u(index.data(), static_cast<std::size_t>(index.size()));
  const Eigen::VectorXd g_tilde = out.first_basis.design(u) * out.b_first;
  const Eigen::VectorXd residual = data.y - data.w * out.alpha - g_tilde;

  const auto m_grid = config.m_tilde_grid.empty() ? default_m_tilde_grid(data) : config.m_tilde_grid;
  out.m_tilde_selection = select_m_tilde(data, residual, m_grid);
  out.m_tilde = out.m_tilde_selection.value;
  const SlopeEstimate slope = slope_estimate(data, residual, out.m_tilde);
  out.a_coeffs = slope.coeffs;
  out.a_curve = slope.curve;
  out.link_offset = inner_product(out.a_curve, out.mean_curve, out.grid);

  const auto k_grid =
      config.k_star_grid.empty() ? default_k_star_grid(data, config.degree) : config.k_star_grid;
  out.k_star_selection = select_k_star(data, objective.smoother(), out.alpha, out.beta, k_grid,
                                       config.degree, config.ridge);
  out.k_star = out.k_star_selection.value;
  const LinkEstimate link = second_stage_link(data, objective.smoother(), out.alpha, out.beta,
                                              out.k_star, config.degree, config.ridge);
  out.second_basis = link.basis;
  out.b_second = link.coeffs;
  return out;
}

double predict(const ProfileFit& fit, const Eigen::Ref<const Eigen::VectorXd>& curve,
               const Eigen::Ref<const Eigen::VectorXd>& w,
               const Eigen::Ref<const Eigen::VectorXd>& z) {
  if (curve.size() != static_cast<Eigen::Index>(fit.grid.size()))
    fail(ErrorKind::Dimension, "curve length does not match the fit grid");
  if (w.size() != fit.alpha.size())
    fail(ErrorKind::Dimension, "expected " + std::to_string(fit.alpha.size()) +
                                   " scalar covariates, got " + std::to_string(w.size()));
  if (z.size() != fit.beta.size())
    fail(ErrorKind::Dimension, "expected " + std::to_string(fit.beta.size()) +
                                   " index covariates, got " + std::to_string(z.size()));
  const double functional = inner_product(fit.a_curve, curve, fit.grid);
  return functional + w.dot(fit.alpha) + fit.link(z.dot(fit.beta));
}

Eigen::VectorXd predict(const ProfileFit& fit, const FunctionalSample& curves,
                        const Eigen::MatrixXd& w, const Eigen::MatrixXd& z) {
  const Eigen::Index n = curves.rows();
  if (w.rows() != n || z.rows() != n)
    fail(ErrorKind::Dimension, "prediction blocks have different row counts");
  const FunctionalSample* on_grid = &curves;
  FunctionalSample resampled;
  if (!curves.grid.same_as(fit.grid)) {
    resampled = interpolate(curves, fit.grid, InterpolationMethod::Linear);
    on_grid = &resampled;
  }
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i)
    out(i) = predict(fit, on_grid->values.row(i).transpose(), w.row(i).transpose(),
                     z.row(i).transpose());
  return out;
}

}  // namespace pflsim
