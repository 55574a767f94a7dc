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

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

namespace pflsim {
namespace {

using testing::random_curves;
using testing::random_matrix;
using testing::throws_kind;
using testing::uniform_matrix;
using testing::unit;

// y = w alpha + g(z beta) + sum_{j<=m} c_j xi_ij on random curves, no noise.
struct Exact {
  FunctionalSample curves;
  Eigen::MatrixXd w, z;
  Eigen::VectorXd alpha, beta;
};

Exact exact_inputs(std::uint64_t seed, Eigen::Index n, Eigen::Index q, Eigen::Index d) {
  std::mt19937_64 rng(seed);
  Exact e;
  e.curves = random_curves(rng, n, 41, 8);
  e.w = random_matrix(rng, n, q);
  e.z = uniform_matrix(rng, n, d);
  e.alpha = Eigen::VectorXd::LinSpaced(q, 0.3, -0.4);
  e.beta = Eigen::VectorXd::Ones(d).normalized();
  return e;
}

template <class G>
RegressionData exact_data(const Exact& e, G g, const Eigen::VectorXd& score_coef) {
  const auto probe = RegressionData::build(e.curves, Eigen::VectorXd::Zero(e.w.rows()), e.w, e.z);
  Eigen::VectorXd y = e.w * e.alpha;
  const Eigen::VectorXd u = e.z * e.beta;
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += g(u(i));
  if (score_coef.size() > 0) y += probe.scores.scores.leftCols(score_coef.size()) * score_coef;
  return RegressionData::build(e.curves, y, e.w, e.z);
}

double cubic(double u) { return 0.5 * u * u * u - u * u + 0.2; }

TEST(Smoother, ZeroCutoffGivesZero) {
  const auto data = testing::small_problem(1);
  const auto s = smoother_matrix(data.scores, data.eigenvalues(), 0);
  EXPECT_EQ(s.matrix, Eigen::MatrixXd::Zero(data.n(), data.n()));
  EXPECT_EQ(s.residualize(data.y), data.y);
}

TEST(Smoother, SingleScore) {
  ScoreMatrix s;
  s.scores = Eigen::MatrixXd::Constant(1, 1, 2.0);
  const Eigen::VectorXd lambda = Eigen::VectorXd::Constant(1, 4.0);
  EXPECT_DOUBLE_EQ(smoother_matrix(s, lambda, 1).matrix(0, 0), 1.0);
}

TEST(Smoother, SymmetricAndAnnihilatesLeadingScores) {
  const auto data = testing::small_problem(2);
  const auto s = smoother_matrix(data.scores, data.eigenvalues(), 4);
  EXPECT_LE((s.matrix - s.matrix.transpose()).cwiseAbs().maxCoeff(), 1e-10);
  const Eigen::MatrixXd r = s.residualize(data.scores.scores.leftCols(4));
  EXPECT_LE(r.cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Smoother, Errors) {
  const auto data = testing::small_problem(3);
  EXPECT_TRUE(throws_kind([&] { smoother_matrix(data.scores, data.eigenvalues(), 500); },
                          ErrorKind::Configuration));
  Eigen::VectorXd lambda = data.eigenvalues();
  lambda(2) = 0.0;
  EXPECT_TRUE(throws_kind([&] { smoother_matrix(data.scores, lambda, 3); }, ErrorKind::Rank,
                          "smaller cut-off"));
}

TEST(Tilde, HandExample) {
  SmootherMatrix s{Eigen::MatrixXd::Identity(2, 2), 1};
  const Eigen::Vector2d y(3.0, -5.0);
  EXPECT_EQ(s.residualize(y), Eigen::Vector2d(1.5, -2.5));
}

TEST(Tilde, IdentityAndLinearity) {
  const auto data = testing::small_problem(4);
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd basis = random_matrix(rng, data.n(), 5);
  const auto none = tilde_transform(data, basis, smoother_matrix(data.scores, data.eigenvalues(), 0));
  EXPECT_EQ(none.y, data.y);
  EXPECT_EQ(none.w, data.w);
  EXPECT_EQ(none.basis, basis);

  const auto s = smoother_matrix(data.scores, data.eigenvalues(), 3);
  const auto once = tilde_transform(data, basis, s);
  RegressionData doubled = data;
  doubled.y *= 2.0;
  const auto twice = tilde_transform(doubled, basis, s);
  EXPECT_LE((twice.y - 2.0 * once.y).cwiseAbs().maxCoeff(), 1e-12);
  const Eigen::MatrixXd expect = basis - s.matrix * basis / static_cast<double>(data.n());
  EXPECT_LE((once.basis - expect).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_EQ(once.raw_basis, basis);
}

TEST(ProfileCoeffs, ExactLinearModel) {
  std::mt19937_64 rng(5);
  TildeData t;
  t.basis = random_matrix(rng, 30, 6);
  t.w = random_matrix(rng, 30, 2);
  const Eigen::VectorXd b = random_matrix(rng, 6, 1);
  const Eigen::Vector2d alpha(0.4, -1.0);
  t.y = t.basis * b + t.w * alpha;
  EXPECT_LE((profile_coeffs(t, alpha) - b).cwiseAbs().maxCoeff(), 1e-8);
  t.y.setZero();
  EXPECT_LE(profile_coeffs(t, Eigen::Vector2d::Zero()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(ProfileCoeffs, RidgeSolveAgreesWithMinimumNormOnRankDeficientDesign) {
  std::mt19937_64 rng(6);
  Eigen::MatrixXd a = random_matrix(rng, 40, 5);
  a.col(4) = a.col(1) - 0.5 * a.col(2);
  const Eigen::VectorXd r = random_matrix(rng, 40, 1);
  const auto ridge = solve_normal_equations(a, r, 1e-10);
  const Eigen::VectorXd min_norm = a.completeOrthogonalDecomposition().solve(r);
  const double g_ridge = (r - a * ridge.coeffs).squaredNorm() / 40.0;
  const double g_min = (r - a * min_norm).squaredNorm() / 40.0;
  EXPECT_NEAR(g_ridge, g_min, 1e-8);
}

TEST(ProfileCoeffs, RidgeFloor) {
  std::mt19937_64 rng(7);
  const Eigen::MatrixXd a = random_matrix(rng, 20, 4);
  const auto sol = solve_normal_equations(a, random_matrix(rng, 20, 1), 1e-10);
  const double scaled = 1e-12 * (a.transpose() * a).trace() / 4.0;
  EXPECT_DOUBLE_EQ(sol.ridge, std::max(1e-10, scaled));
  EXPECT_LE(sol.normal_residual, 1e-8);
}

TEST(Objective, PerfectFitIsZero) {
  const Exact e = exact_inputs(8, 60, 1, 3);
  const auto data = exact_data(e, cubic, Eigen::Vector2d(0.4, -0.2));
  OptimizerConfig config;
  config.m = 3;
  EXPECT_NEAR(objective(data, config, e.alpha, e.beta), 0.0, 1e-14);
  EXPECT_GT(objective(data, config, e.alpha, unit({1, 2, 3})), 1e-6);
}

TEST(Objective, Preconditions) {
  const auto data = testing::small_problem(9);
  const OptimizerConfig config;
  const Eigen::VectorXd alpha = Eigen::VectorXd::Zero(1);
  EXPECT_TRUE(throws_kind([&] { objective(data, config, alpha, Eigen::Vector3d(1, 1, 1)); },
                          ErrorKind::Precondition, "unit norm"));
  EXPECT_TRUE(throws_kind([&] { objective(data, config, alpha, unit({1, 1, -1})); },
                          ErrorKind::Precondition, "rho0"));
  EXPECT_GE(objective(data, config, alpha, unit({1, 1, 1})), 0.0);
}

TEST(Config, Validation) {
  auto bad = [](auto edit) {
    OptimizerConfig c;
    edit(c);
    return throws_kind([&] { c.validate(); }, ErrorKind::Configuration);
  };
  EXPECT_TRUE(bad([](OptimizerConfig& c) { c.rho0 = 0.0; }));
  EXPECT_TRUE(bad([](OptimizerConfig& c) { c.rho0 = 1.0; }));
  EXPECT_TRUE(bad([](OptimizerConfig& c) { c.tol_obj = 0.0; }));
  EXPECT_TRUE(bad([](OptimizerConfig& c) { c.max_iter = 0; }));
  EXPECT_TRUE(bad([](OptimizerConfig& c) { c.c0 = -1.0; }));
  EXPECT_TRUE(bad([](OptimizerConfig& c) { c.subintervals = 0; }));
  EXPECT_NO_THROW(OptimizerConfig{}.validate());
}

TEST(LinearInit, RecoversExactLinearModel) {
  const Exact e = exact_inputs(10, 80, 1, 3);
  Exact lin = e;
  lin.alpha = Eigen::VectorXd::Constant(1, 0.3);
  const auto data = exact_data(lin, [](double u) { return u; }, Eigen::VectorXd());
  const auto init = init_linear_fit(data, OptimizerConfig{});
  EXPECT_NEAR(init.alpha(0), 0.3, 1e-6);
  EXPECT_LE((init.beta - unit({1, 1, 1})).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_NEAR(init.beta.norm(), 1.0, 1e-12);
}

TEST(LinearInit, FlipsNegativeLastEntry) {
  Exact e = exact_inputs(11, 80, 1, 3);
  e.beta = unit({1, 1, -1});
  const auto data = exact_data(e, [](double u) { return u; }, Eigen::VectorXd());
  const auto init = init_linear_fit(data, OptimizerConfig{});
  EXPECT_LT(init.raw_beta(2), 0.0);
  EXPECT_GT(init.beta(2), 0.0);
  EXPECT_LE((init.beta + e.beta).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Bic, FormulaValues) {
  EXPECT_NEAR(bic(1.0, 100, 2), 0.092103, 1e-6);
  EXPECT_NEAR(bic(1.0, 100, 6), 0.276310, 1e-6);
}

TEST(Bic, SelectionTiesGoToSmallerCandidate) {
  EXPECT_EQ(select_min_bic({3}, {1.0}).value, 3);
  EXPECT_EQ(select_min_bic({4, 2, 3}, {0.5, 0.5, 0.7}).value, 2);
  EXPECT_EQ(select_min_bic({1, 2, 3}, {0.9, 0.1, 0.5}).value, 2);
  EXPECT_TRUE(throws_kind([] { select_min_bic({}, {}); }, ErrorKind::Configuration));
}

TEST(Slope, SingleComponentExample) {
  const Exact e = exact_inputs(12, 60, 1, 3);
  const auto probe = RegressionData::build(e.curves, Eigen::VectorXd::Zero(60), e.w, e.z);
  const Eigen::VectorXd y = 0.3 * probe.scores.scores.col(0);
  const auto data = RegressionData::build(e.curves, y, e.w, e.z);
  const auto est = slope_estimate(data, y, 4);
  EXPECT_NEAR(est.coeffs(0), 0.3, 1e-6);
  for (int j = 1; j < 4; ++j) EXPECT_NEAR(est.coeffs(j), 0.0, 1e-6);
  const Eigen::VectorXd expect = 0.3 * data.scores.eigen.eigenfunctions.row(0).transpose();
  EXPECT_LE((est.curve - expect).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Slope, OrthogonalResidualGivesZero) {
  const auto data = testing::small_problem(13);
  const Eigen::MatrixXd xi = data.scores.scores.leftCols(3);
  Eigen::VectorXd r = data.y;
  r -= xi * xi.colPivHouseholderQr().solve(r);
  const auto est = slope_estimate(data, r, 3);
  EXPECT_LE(est.coeffs.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Slope, SingleCandidateGrid) {
  const auto data = testing::small_problem(14);
  EXPECT_EQ(select_m_tilde(data, data.y, {4}).value, 4);
}

TEST(SecondStage, ReproducesSplineLink) {
  const Exact e = exact_inputs(15, 80, 2, 3);
  const auto data = exact_data(e, cubic, Eigen::Vector3d(1.0, -0.5, 0.25));
  const auto s = smoother_matrix(data.scores, data.eigenvalues(), 3);
  const auto link = second_stage_link(data, s, e.alpha, e.beta, 6, 3);
  double worst = 0.0;
  for (int k = 0; k <= 200; ++k) {
    const double u = link.basis.lower() + (link.basis.upper() - link.basis.lower()) * k / 200.0;
    worst = std::max(worst, std::abs(link.basis.evaluate(link.coeffs, u) - cubic(u)));
  }
  EXPECT_LE(worst, 1e-6);
  EXPECT_TRUE(throws_kind([&] { second_stage_link(data, s, e.alpha, e.beta, 3, 3); },
                          ErrorKind::Configuration));
}

TEST(SecondStage, SingleCandidateGrid) {
  const auto data = testing::small_problem(16);
  const auto s = smoother_matrix(data.scores, data.eigenvalues(), 3);
  EXPECT_EQ(select_k_star(data, s, Eigen::VectorXd::Constant(1, 0.7), unit({1, 1, 1}), {7}, 3).value,
            7);
}

// Slope built from three eigen-directions with a strong signal.
RegressionData three_component_problem(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Eigen::Index n = 100;
  const auto curves = random_curves(rng, n, 41, 8, 1.0);
  const Eigen::MatrixXd w = random_matrix(rng, n, 1);
  const Eigen::MatrixXd z = uniform_matrix(rng, n, 3);
  const Eigen::MatrixXd phi = cosine_basis(curves.grid).topRows(3);
  const Eigen::VectorXd a = phi.transpose() * Eigen::Vector3d(2.0, -2.0, 2.0);
  std::normal_distribution<double> noise(0.0, 0.1);
  Eigen::VectorXd y(n);
  const Eigen::VectorXd beta = unit({1, 1, 1});
  for (Eigen::Index i = 0; i < n; ++i)
    y(i) = inner_product(a, curves.values.row(i).transpose(), curves.grid) + 0.5 * w(i, 0) +
           std::sin(std::numbers::pi * z.row(i).dot(beta)) + noise(rng);
  return RegressionData::build(curves, y, w, z);
}

TEST(Fit, SelectsEnoughSlopeComponents) {
  int hits = 0;
  for (std::uint64_t r = 0; r < 50; ++r) hits += fit(three_component_problem(100 + r), {}).m_tilde >= 3;
  EXPECT_GE(hits, 45);
}

RegressionData wavy_link_problem(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Eigen::Index n = 100;
  const auto curves = random_curves(rng, n, 41, 6);
  const Eigen::MatrixXd w = random_matrix(rng, n, 1);
  const Eigen::MatrixXd z = uniform_matrix(rng, n, 3);
  std::normal_distribution<double> noise(0.0, 0.1);
  Eigen::VectorXd y(n);
  const Eigen::VectorXd beta = unit({1, 1, 1});
  for (Eigen::Index i = 0; i < n; ++i)
    y(i) = 0.5 * w(i, 0) + std::sin(2.0 * std::numbers::pi * z.row(i).dot(beta)) + noise(rng);
  return RegressionData::build(curves, y, w, z);
}

TEST(Fit, SelectsMoreThanMinimalLinkDimension) {
  int hits = 0;
  for (std::uint64_t r = 0; r < 50; ++r) hits += fit(wavy_link_problem(200 + r), {}).k_star > 4;
  EXPECT_GE(hits, 45);
}

TEST(Fit, ContractHolds) {
  for (Eigen::Index q : {0, 1, 2}) {
    const auto data = testing::small_problem(17, 60, q, 3);
    const OptimizerConfig config;
    const auto f = fit(data, config);
    EXPECT_NEAR(f.beta.norm(), 1.0, 1e-10);
    EXPECT_GE(f.beta(2), config.rho0);
    EXPECT_GE(f.objective_value, 0.0);
    EXPECT_LE(f.objective_value, f.initial_objective);
    EXPECT_EQ(f.alpha.size(), q);
    EXPECT_EQ(f.b_second.size(), f.k_star);
  }
}

TEST(Fit, RecoversSmallProblem) {
  const auto data = testing::small_problem(18, 200, 1, 3, 0.05);
  const auto f = fit(data, {});
  EXPECT_LE((f.beta - unit({1, 1, 1})).norm(), 0.05);
  EXPECT_NEAR(f.alpha(0), 0.7, 0.05);
}

TEST(Predict, ConstantLinkExample) {
  std::mt19937_64 rng(19);
  ProfileFit f;
  f.grid = Grid::uniform(11);
  f.mean_curve = random_matrix(rng, 11, 1);
  f.a_curve = random_matrix(rng, 11, 1);
  f.alpha = Eigen::Vector2d(1.0, -2.0);
  f.beta = unit({1, 2});
  f.second_basis = BSplineBasis::clamped_uniform(0.0, 1.0, 3, 3);
  f.b_second = Eigen::VectorXd::Constant(f.second_basis.size(), 1.75);
  f.link_offset = inner_product(f.a_curve, f.mean_curve, f.grid);
  // The raw mean curve centers to zero.
  EXPECT_NEAR(predict(f, f.mean_curve, Eigen::Vector2d::Zero(), Eigen::Vector2d(0.2, 0.3)), 1.75,
              1e-12);
}

TEST(Predict, FunctionalTermIsLinearInSlope) {
  std::mt19937_64 rng(20);
  ProfileFit f;
  f.grid = Grid::uniform(21);
  f.mean_curve = Eigen::VectorXd::Zero(21);
  f.a_curve = random_matrix(rng, 21, 1);
  f.alpha = Eigen::VectorXd::Constant(1, 0.5);
  f.beta = unit({1, 1});
  f.second_basis = BSplineBasis::clamped_uniform(0.0, 2.0, 4, 3);
  f.b_second = random_matrix(rng, f.second_basis.size(), 1);
  const Eigen::VectorXd x = random_matrix(rng, 21, 1);
  const Eigen::VectorXd w = Eigen::VectorXd::Constant(1, 0.3);
  const Eigen::Vector2d z(0.4, 0.6);
  const double base = predict(f, Eigen::VectorXd::Zero(21), w, z);
  const double one = predict(f, x, w, z) - base;
  f.a_curve *= 2.0;
  EXPECT_NEAR(predict(f, x, w, z) - base, 2.0 * one, 1e-12);
  EXPECT_TRUE(throws_kind([&] { predict(f, x, w, Eigen::Vector3d(1, 2, 3)); },
                          ErrorKind::Dimension));
}

TEST(Predict, TrainingRowsMatchScoreSpaceFit) {
  const auto data = testing::small_problem(21, 80);
  const auto f = fit(data, {});
  const FunctionalSample raw(data.sample.grid,
                             data.sample.values.rowwise() + data.sample.mean_curve.transpose());
  const Eigen::VectorXd pred = predict(f, raw, data.w, data.z);
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const double fitted = data.scores.scores.row(i).head(f.m_tilde).dot(f.a_coeffs) +
                          data.w.row(i).dot(f.alpha) +
                          f.second_basis.evaluate(f.b_second, data.z.row(i).dot(f.beta));
    EXPECT_NEAR(pred(i), fitted, 1e-10);
    EXPECT_EQ(pred(i), predict(f, raw.values.row(i).transpose(), data.w.row(i).transpose(),
                               data.z.row(i).transpose()));
  }
}

TEST(Predict, LinkTargetsUncenteredScale) {
  // g(u) = sin(pi u) is recovered without the mean-curve offset.
  const auto data = testing::small_problem(22, 300, 1, 3, 0.02);
  const auto f = fit(data, {});
  for (double u : {0.5, 0.8, 1.1}) EXPECT_NEAR(f.link(u), std::sin(std::numbers::pi * u), 0.05);
}

}  // namespace
}  // namespace pflsim
