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
#include <limits>
#include <string>

namespace pflsim {

RegressionData RegressionData::build(FunctionalSample curves, Eigen::VectorXd y,
                                     Eigen::MatrixXd w, Eigen::MatrixXd z,
                                     Eigen::Index max_components) {
  const Eigen::Index n = y.size();
  if (curves.rows() != n)
    fail(ErrorKind::Dimension, "curves have " + std::to_string(curves.rows()) +
                                   " rows but there are " + std::to_string(n) + " responses");
  if (w.rows() != n && !(w.cols() == 0))
    fail(ErrorKind::Dimension, "W block has " + std::to_string(w.rows()) + " rows, expected " +
                                   std::to_string(n));
  if (w.cols() == 0) w.resize(n, 0);
  if (z.rows() != n)
    fail(ErrorKind::Dimension, "Z block has " + std::to_string(z.rows()) + " rows, expected " +
                                   std::to_string(n));
  if (z.cols() < 2) fail(ErrorKind::Dimension, "the index needs at least 2 Z columns");
  if (n < 2) fail(ErrorKind::Dimension, "need at least 2 observations");
  if (!y.allFinite() || !w.allFinite() || !z.allFinite())
    fail(ErrorKind::Format, "responses and covariates must be finite");

  RegressionData data;
  data.sample = curves.mean_removed ? std::move(curves) : center(curves);
  const auto cov = empirical_covariance(data.sample);
  const Eigen::Index cap = max_components > 0
                               ? max_components
                               : default_component_cap(n, data.sample.cols());
  const auto eig = eigensystem(cov, data.sample.grid, cap);
  data.scores = pflsim::scores(data.sample, eig, eig.count());
  data.y = std::move(y);
  data.w = std::move(w);
  data.z = std::move(z);
  return data;
}

namespace {

// Eigenvalues this small relative to the leading one are numerically zero.
bool usable_eigenvalue(const Eigen::VectorXd& lambda, Eigen::Index j) {
  return lambda(j) > 1e-13 * std::max(lambda(0), std::numeric_limits<double>::min());
}

}  // namespace

Eigen::MatrixXd SmootherMatrix::residualize(const Eigen::Ref<const Eigen::MatrixXd>& v) const {
  const auto n = static_cast<double>(matrix.rows());
  if (v.rows() != matrix.rows())
    fail(ErrorKind::Dimension, "tilde transform: operand has " + std::to_string(v.rows()) +
                                   " rows, expected " + std::to_string(matrix.rows()));
  if (m == 0) return v;
  return v - (matrix * v) / n;
}

SmootherMatrix smoother_matrix(const ScoreMatrix& scores,
                               const Eigen::Ref<const Eigen::VectorXd>& eigenvalues, int m) {
  if (m < 0 || m > scores.scores.cols() || m > eigenvalues.size())
    fail(ErrorKind::Configuration, "cut-off m = " + std::to_string(m) + " exceeds the " +
                                       std::to_string(scores.scores.cols()) +
                                       " available components");
  const Eigen::Index n = scores.scores.rows();
  SmootherMatrix out;
  out.m = m;
  if (m == 0) {
    out.matrix = Eigen::MatrixXd::Zero(n, n);
    return out;
  }
  const Eigen::VectorXd lambda = eigenvalues.head(m);
  if (!usable_eigenvalue(eigenvalues, m - 1))
    fail(ErrorKind::Rank, "eigenvalue " + std::to_string(m) +
                              " is not positive; choose a smaller cut-off m");
  const Eigen::MatrixXd xi = scores.scores.leftCols(m);
  out.matrix = xi * lambda.cwiseInverse().asDiagonal() * xi.transpose();
  out.matrix = 0.5 * (out.matrix + out.matrix.transpose());
  return out;
}

TildeData tilde_transform(const RegressionData& data, const Eigen::MatrixXd& basis_design,
                          const SmootherMatrix& smoother) {
  if (basis_design.rows() != data.n())
    fail(ErrorKind::Dimension, "basis design rows do not match the sample size");
  TildeData out;
  out.y = smoother.residualize(data.y);
  out.w = smoother.residualize(data.w);
  out.basis = smoother.residualize(basis_design);
  out.raw_basis = basis_design;
  return out;
}

InnerSolution solve_normal_equations(const Eigen::MatrixXd& design,
                                     const Eigen::Ref<const Eigen::VectorXd>& target,
                                     double ridge_floor) {
  if (design.rows() != target.size())
    fail(ErrorKind::Dimension, "design and target lengths differ");
  const Eigen::Index K = design.cols();
  Eigen::MatrixXd gram = design.transpose() * design;
  const Eigen::VectorXd rhs = design.transpose() * target;
  InnerSolution out;
  out.ridge = std::max(ridge_floor, 1e-12 * gram.trace() / static_cast<double>(std::max<Eigen::Index>(K, 1)));
  gram.diagonal().array() += out.ridge;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
    const double cond = es.eigenvalues().maxCoeff() / std::abs(es.eigenvalues().minCoeff());
    fail(ErrorKind::Rank, "normal equations are singular after the ridge floor (condition ~" +
                              std::to_string(cond) + ")");
  }
  out.coeffs = llt.solve(rhs);
  const Eigen::VectorXd normal = design.transpose() * (target - design * out.coeffs);
  const double scale = std::max(rhs.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  out.normal_residual = K == 0 ? 0.0 : normal.cwiseAbs().maxCoeff() / scale;
  if (!out.coeffs.allFinite()) fail(ErrorKind::Rank, "inner solve produced non-finite values");
  return out;
}

Eigen::VectorXd profile_coeffs(const TildeData& tilde,
                               const Eigen::Ref<const Eigen::VectorXd>& alpha,
                               double ridge_floor) {
  if (alpha.size() != tilde.w.cols())
    fail(ErrorKind::Dimension, "alpha has the wrong length");
  const Eigen::VectorXd target = tilde.y - tilde.w * alpha;
  return solve_normal_equations(tilde.basis, target, ridge_floor).coeffs;
}

void OptimizerConfig::validate() const {
  if (!(rho0 > 0.0 && rho0 < 1.0)) fail(ErrorKind::Configuration, "rho0 must lie in (0, 1)");
  if (!(tol_obj > 0.0) || !(tol_step > 0.0))
    fail(ErrorKind::Configuration, "tolerances must be positive");
  if (max_iter < 1) fail(ErrorKind::Configuration, "max_iter must be at least 1");
  if (ridge < 0.0) fail(ErrorKind::Configuration, "ridge floor must be non-negative");
  if (m < 0) fail(ErrorKind::Configuration, "m must be non-negative");
  if (degree < 1) fail(ErrorKind::Configuration, "spline degree must be at least 1");
  if (!(c0 > 0.0)) fail(ErrorKind::Configuration, "c0 must be positive");
  if (h0 && !(*h0 > 0.0)) fail(ErrorKind::Configuration, "h0 must be positive");
  if (subintervals && *subintervals < 1)
    fail(ErrorKind::Configuration, "knot count must be at least 1");
  if (restarts < 0 || refine < 0)
    fail(ErrorKind::Configuration, "restart counts must be non-negative");
}

Eigen::VectorXd complete_direction(const Eigen::Ref<const Eigen::VectorXd>& head) {
  Eigen::VectorXd beta(head.size() + 1);
  beta.head(head.size()) = head;
  beta(head.size()) = std::sqrt(std::max(0.0, 1.0 - head.squaredNorm()));
  return beta;
}

ProfileObjective::ProfileObjective(const RegressionData& data, const OptimizerConfig& config,
                                   int subintervals)
    : data_(&data), config_(config), subintervals_(subintervals) {
  if (subintervals_ < 1) fail(ErrorKind::Configuration, "knot count must be at least 1");
  smoother_ = smoother_matrix(data.scores, data.eigenvalues(), config.m);
  y_tilde_ = smoother_.residualize(data.y);
  w_tilde_ = smoother_.residualize(data.w);
}

bool ProfileObjective::feasible(const Eigen::Ref<const Eigen::VectorXd>& theta) const {
  const Eigen::Index q = data_->q();
  const double head = theta.tail(theta.size() - q).squaredNorm();
  return head <= 1.0 - config_.rho0 * config_.rho0;
}

Eigen::VectorXd ProfileObjective::pack(const Eigen::Ref<const Eigen::VectorXd>& alpha,
                                       const Eigen::Ref<const Eigen::VectorXd>& beta) const {
  Eigen::VectorXd theta(alpha.size() + beta.size() - 1);
  theta.head(alpha.size()) = alpha;
  theta.tail(beta.size() - 1) = beta.head(beta.size() - 1);
  return theta;
}

Eigen::VectorXd ProfileObjective::alpha_of(const Eigen::Ref<const Eigen::VectorXd>& theta) const {
  return theta.head(data_->q());
}

Eigen::VectorXd ProfileObjective::beta_of(const Eigen::Ref<const Eigen::VectorXd>& theta) const {
  return complete_direction(theta.tail(theta.size() - data_->q()));
}

double ProfileObjective::value(const Eigen::Ref<const Eigen::VectorXd>& alpha,
                               const Eigen::Ref<const Eigen::VectorXd>& beta) const {
  return evaluate_full(alpha, beta, false).value;
}

double ProfileObjective::value_at_best_alpha(const Eigen::Ref<const Eigen::VectorXd>& beta,
                                             Eigen::VectorXd& alpha) const {
  const RegressionData& data = *data_;
  const Eigen::Index q = data.q();
  const Eigen::VectorXd index = data.z * beta;
  const std::span<const double> u(index.data(), static_cast<std::size_t>(index.size()));
  const BSplineBasis basis = build_index_knots(u, config_.degree, KnotRule{{}, subintervals_});
  const Eigen::MatrixXd design_tilde = smoother_.residualize(basis.design(u));
  Eigen::MatrixXd joint(data.n(), q + design_tilde.cols());
  joint << w_tilde_, design_tilde;
  const InnerSolution inner = solve_normal_equations(joint, y_tilde_, config_.ridge);
  alpha = inner.coeffs.head(q);
  return (y_tilde_ - joint * inner.coeffs).squaredNorm() / static_cast<double>(data.n());
}

ProfileObjective::Evaluation ProfileObjective::evaluate(
    const Eigen::Ref<const Eigen::VectorXd>& theta, bool gradient) const {
  return evaluate_full(alpha_of(theta), beta_of(theta), gradient);
}

ProfileObjective::Evaluation ProfileObjective::evaluate_full(
    const Eigen::Ref<const Eigen::VectorXd>& alpha, const Eigen::Ref<const Eigen::VectorXd>& beta,
    bool gradient) const {
  const RegressionData& data = *data_;
  const Eigen::Index n = data.n();
  const Eigen::Index q = data.q();
  const Eigen::Index d = data.d();
  if (alpha.size() != q || beta.size() != d)
    fail(ErrorKind::Dimension, "parameter lengths do not match the data");

  const Eigen::VectorXd index = data.z * beta;
  const std::span<const double> u(index.data(), static_cast<std::size_t>(n));
  Evaluation out;
  out.basis = build_index_knots(u, config_.degree, KnotRule{{}, subintervals_});
  const Eigen::MatrixXd design = out.basis.design(u);
  const Eigen::MatrixXd design_tilde = smoother_.residualize(design);
  const Eigen::VectorXd target = y_tilde_ - w_tilde_ * alpha;
  const InnerSolution inner = solve_normal_equations(design_tilde, target, config_.ridge);
  out.coeffs = inner.coeffs;
  out.normal_residual = inner.normal_residual;
  const Eigen::VectorXd resid = target - design_tilde * out.coeffs;
  out.value = resid.squaredNorm() / static_cast<double>(n);
  if (!gradient) return out;

  // Envelope property: at the profiled b the gradient is the partial
  // derivative with b held fixed.
  const auto nn = static_cast<double>(n);
  out.gradient.resize(q + d - 1);
  if (q > 0) out.gradient.head(q) = -(2.0 / nn) * (w_tilde_.transpose() * resid);

  Eigen::Index i_lo = 0, i_hi = 0;
  index.minCoeff(&i_lo);
  index.maxCoeff(&i_hi);
  const double lo = index(i_lo);
  const double width = index(i_hi) - lo;
  const double beta_d = beta(d - 1);
  // d u_i / d beta_r in the beta_d = sqrt(1 - |beta_{-d}|^2) parameterization.
  const Eigen::MatrixXd du =
      data.z.leftCols(d - 1) - data.z.col(d - 1) * (beta.head(d - 1).transpose() / beta_d);
  // B~' resid = B' (resid - S resid / n) because S is symmetric.
  const Eigen::VectorXd rho = smoother_.residualize(resid);
  const Eigen::VectorXd slope = out.basis.design(u, 1) * out.coeffs;  // g'(u_i) at fixed knots
  for (Eigen::Index r = 0; r < d - 1; ++r) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double x = (index(i) - lo) / width;
      const double dui = du(i, r) - (1.0 - x) * du(i_lo, r) - x * du(i_hi, r);
      acc += rho(i) * slope(i) * dui;
    }
    out.gradient(q + r) = -(2.0 / nn) * acc;
  }
  return out;
}

int index_subintervals(const RegressionData& data, const OptimizerConfig& config,
                       const Eigen::Ref<const Eigen::VectorXd>& beta) {
  if (config.subintervals) return *config.subintervals;
  const double h0 = config.h0 ? *config.h0
                              : config.c0 * std::pow(static_cast<double>(data.n()), -0.2);
  const Eigen::VectorXd index = data.z * beta;
  const std::span<const double> u(index.data(), static_cast<std::size_t>(index.size()));
  return build_index_knots(u, config.degree, KnotRule{h0, {}}).subintervals();
}

double objective(const RegressionData& data, const OptimizerConfig& config,
                 const Eigen::Ref<const Eigen::VectorXd>& alpha,
                 const Eigen::Ref<const Eigen::VectorXd>& beta) {
  if (std::abs(beta.norm() - 1.0) > 1e-10)
    fail(ErrorKind::Precondition, "beta must have unit norm");
  if (beta(beta.size() - 1) < config.rho0)
    fail(ErrorKind::Precondition, "last entry of beta is below rho0");
  const ProfileObjective obj(data, config, index_subintervals(data, config, beta));
  return obj.value(alpha, beta);
}

}  // namespace pflsim
