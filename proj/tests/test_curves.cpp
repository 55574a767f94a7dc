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


#include "pflsim/curves.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

namespace pflsim {
namespace {

using testing::TempDir;
using testing::throws_kind;

TEST(Grid, TrapezoidWeightsSumToRange) {
  const Grid g({0.0, 0.1, 0.35, 0.5, 1.2});
  double sum = 0.0;
  for (double w : g.weights()) {
    EXPECT_GT(w, 0.0);
    sum += w;
  }
  EXPECT_NEAR(sum, 1.2, 1.2e-12);
  EXPECT_DOUBLE_EQ(g.weights().front(), 0.05);
  EXPECT_DOUBLE_EQ(g.weights()[1], 0.175);
}

TEST(Grid, RejectsBadPoints) {
  EXPECT_TRUE(throws_kind([] { Grid({0.0}); }, ErrorKind::Dimension));
  EXPECT_TRUE(throws_kind([] { Grid({0.0, 0.5, 0.5}); }, ErrorKind::Format));
  EXPECT_TRUE(throws_kind([] { Grid({0.0, 1.0, 0.7}); }, ErrorKind::Format));
}

TEST(LoadCurves, NoHeaderUsesUnitGrid) {
  TempDir dir;
  const auto p = dir.write("c.csv", "2,1,3,4,5\n5,4,3,2,1\n2,2,2,2,2\n");
  const auto s = load_curves(p);
  EXPECT_EQ(s.rows(), 3);
  EXPECT_EQ(s.cols(), 5);
  const std::vector<double> expect{0.0, 0.25, 0.5, 0.75, 1.0};
  EXPECT_EQ(s.grid.points(), expect);
  EXPECT_FALSE(s.mean_removed);
  EXPECT_DOUBLE_EQ(s.values(1, 0), 5.0);
}

TEST(LoadCurves, IncreasingFirstRowNeedsAbsentMode) {
  TempDir dir;
  const auto p = dir.write("c.csv", "1,2,3,4,5\n5,4,3,2,1\n2,2,2,2,2\n");
  EXPECT_EQ(load_curves(p).rows(), 2);
  const auto s = load_curves(p, HeaderMode::Absent);
  EXPECT_EQ(s.rows(), 3);
  EXPECT_DOUBLE_EQ(s.grid.upper(), 1.0);
}

TEST(LoadCurves, HeaderRowBecomesGrid) {
  TempDir dir;
  const auto p = dir.write("c.csv", "0,0.25,0.5,0.75,1\n3,1,4,1,5\n9,2,6,5,3\n");
  const auto s = load_curves(p);
  EXPECT_EQ(s.rows(), 2);
  const std::vector<double> expect{0.0, 0.25, 0.5, 0.75, 1.0};
  EXPECT_EQ(s.grid.points(), expect);
}

TEST(LoadCurves, TabDelimitedWithExplicitHeader) {
  TempDir dir;
  const auto p = dir.write("c.tsv", "0\t2\t5\n1\t2\t3\n");
  const auto s = load_curves(p, HeaderMode::Present);
  EXPECT_EQ(s.rows(), 1);
  EXPECT_DOUBLE_EQ(s.grid.upper(), 5.0);
  const auto t = load_curves(p, HeaderMode::Absent);
  EXPECT_EQ(t.rows(), 2);
}

TEST(LoadCurves, RaggedRowIsNamed) {
  TempDir dir;
  const auto p = dir.write("c.csv", "1,2,3,4,5\n1,2,3,4\n");
  EXPECT_TRUE(throws_kind([&] { load_curves(p); }, ErrorKind::Format, "row 2"));
}

TEST(LoadCurves, NonNumericCellNamesRowAndColumn) {
  TempDir dir;
  const auto p = dir.write("c.csv", "1,2,3\n4,x,6\n");
  EXPECT_TRUE(throws_kind([&] { load_curves(p); }, ErrorKind::Parse, "row 2"));
  EXPECT_TRUE(throws_kind([&] { load_curves(p); }, ErrorKind::Parse, "column 2"));
}

TEST(LoadCurves, SingleColumnIsDimensionError) {
  TempDir dir;
  const auto p = dir.write("c.csv", "1\n2\n");
  EXPECT_TRUE(throws_kind([&] { load_curves(p); }, ErrorKind::Dimension));
}

TEST(LoadCurves, MissingFileIsIoError) {
  EXPECT_TRUE(throws_kind([] { load_curves("/nonexistent/curves.csv"); }, ErrorKind::Io));
}

TEST(Interpolate, SameGridIsIdentity) {
  std::mt19937_64 rng(3);
  const auto s = testing::random_curves(rng, 4, 17);
  const auto t = interpolate(s, s.grid, InterpolationMethod::CubicSpline);
  EXPECT_EQ(t.values, s.values);
  const auto u = interpolate(s, Grid(s.grid.points()), InterpolationMethod::Linear);
  EXPECT_EQ(u.values, s.values);
}

TEST(Interpolate, LinearHitsMidpoint) {
  FunctionalSample s(Grid({0.0, 0.5, 1.0}), Eigen::RowVector3d(0.0, 1.0, 2.0));
  const auto t = interpolate(s, Grid({0.0, 0.25, 1.0}), InterpolationMethod::Linear);
  EXPECT_DOUBLE_EQ(t.values(0, 1), 0.5);
}

TEST(Interpolate, CubicSplineTracksSine) {
  const Grid src = Grid::uniform(201);
  Eigen::MatrixXd v(1, 201);
  for (int g = 0; g < 201; ++g) v(0, g) = std::sin(2.0 * std::numbers::pi * src.points()[g]);
  const Grid dst = Grid::uniform(101);
  const auto t = interpolate(FunctionalSample(src, v), dst, InterpolationMethod::CubicSpline);
  double worst = 0.0;
  for (int g = 0; g < 101; ++g)
    worst = std::max(worst, std::abs(t.values(0, g) - std::sin(2.0 * std::numbers::pi * dst.points()[g])));
  EXPECT_LE(worst, 1e-4);
}

TEST(Interpolate, OutsideSourceRangeFails) {
  FunctionalSample s(Grid({0.0, 0.5, 1.0}), Eigen::RowVector3d(0.0, 1.0, 2.0));
  EXPECT_TRUE(throws_kind([&] { interpolate(s, Grid({0.0, 1.5}), InterpolationMethod::Linear); },
                          ErrorKind::Extrapolation));
}

TEST(Resample, IntersectionOfRanges) {
  std::vector<ObservedCurve> curves{{{0.0, 0.4, 1.0}, {0.0, 0.4, 1.0}},
                                    {{0.2, 0.7, 1.4}, {1.0, 1.0, 1.0}}};
  const auto s = resample_to_common_grid(curves, 11);
  EXPECT_DOUBLE_EQ(s.grid.lower(), 0.2);
  EXPECT_DOUBLE_EQ(s.grid.upper(), 1.0);
  for (int g = 0; g < 11; ++g) {
    EXPECT_NEAR(s.values(0, g), s.grid.points()[g], 1e-12);
    EXPECT_NEAR(s.values(1, g), 1.0, 1e-12);
  }
}

TEST(Center, SingleCurve) {
  FunctionalSample s(Grid::uniform(4), Eigen::RowVector4d(1.0, -2.0, 3.0, 0.5));
  const auto c = center(s);
  EXPECT_TRUE(c.mean_removed);
  EXPECT_TRUE(c.values.isZero(0.0));
  EXPECT_EQ(c.mean_curve, Eigen::Vector4d(1.0, -2.0, 3.0, 0.5));
}

TEST(Center, TwoConstantCurves) {
  Eigen::MatrixXd v(2, 3);
  v << 1, 1, 1, 3, 3, 3;
  const auto c = center(FunctionalSample(Grid::uniform(3), v));
  EXPECT_TRUE(c.values.row(0).isApprox(Eigen::RowVector3d::Constant(-1.0)));
  EXPECT_TRUE(c.values.row(1).isApprox(Eigen::RowVector3d::Constant(1.0)));
  EXPECT_TRUE(c.mean_curve.isApprox(Eigen::Vector3d::Constant(2.0)));
}

TEST(Center, Idempotent) {
  std::mt19937_64 rng(11);
  const auto once = center(testing::random_curves(rng, 20, 31));
  const auto twice = center(once);
  EXPECT_LE((twice.values - once.values).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((twice.mean_curve - once.mean_curve).cwiseAbs().maxCoeff(), 1e-12);
  const double scale = once.values.cwiseAbs().maxCoeff();
  EXPECT_LE(once.values.colwise().mean().cwiseAbs().maxCoeff(), 1e-10 * scale);
}

TEST(InnerProduct, Examples) {
  const Grid g = Grid::uniform(101);
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(101);
  EXPECT_NEAR(inner_product(one, one, g), 1.0, 1e-14);
  EXPECT_NEAR(inner_product(g.points_vec(), one, g), 0.5, 1e-15);
  Eigen::VectorXd c(101);
  for (int i = 0; i < 101; ++i) c(i) = std::sqrt(2.0) * std::cos(std::numbers::pi * g.points()[i]);
  EXPECT_NEAR(inner_product(c, c, g), 1.0, 1e-3);
}

TEST(InnerProduct, LengthMismatch) {
  const Grid g = Grid::uniform(5);
  EXPECT_TRUE(throws_kind([&] { inner_product(Eigen::VectorXd::Ones(4), Eigen::VectorXd::Ones(5), g); },
                          ErrorKind::Dimension));
}

TEST(InnerProduct, ExactOnPiecewiseLinear) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> pts{0.0};
    for (int k = 0; k < 20; ++k) pts.push_back(pts.back() + 0.01 + unif(rng));
    const Grid g(pts);
    Eigen::VectorXd f(21);
    for (int k = 0; k < 21; ++k) f(k) = unif(rng) - 0.5;
    // Exact integral of the piecewise-linear interpolant of f.
    double exact = 0.0;
    for (int k = 0; k < 20; ++k) exact += 0.5 * (f(k) + f(k + 1)) * (pts[k + 1] - pts[k]);
    EXPECT_NEAR(inner_product(f, Eigen::VectorXd::Ones(21), g), exact, 1e-12 * (1.0 + std::abs(exact)));
  }
}

TEST(InnerProduct, SymmetricBilinearPositive) {
  std::mt19937_64 rng(8);
  const Grid g = Grid::uniform(37, -1.0, 2.0);
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::VectorXd f = testing::random_matrix(rng, 37, 1);
    const Eigen::VectorXd h = testing::random_matrix(rng, 37, 1);
    const Eigen::VectorXd k = testing::random_matrix(rng, 37, 1);
    EXPECT_EQ(inner_product(f, h, g), inner_product(h, f, g));
    const double lhs = inner_product(2.5 * f - 0.75 * k, h, g);
    const double rhs = 2.5 * inner_product(f, h, g) - 0.75 * inner_product(k, h, g);
    EXPECT_NEAR(lhs, rhs, 1e-12 * (std::abs(lhs) + 1.0));
    EXPECT_GE(inner_product(f, f, g), 0.0);
  }
}

}  // namespace
}  // namespace pflsim
