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


#include "pflsim/io.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

namespace pflsim {
namespace {

using testing::read_file;
using testing::TempDir;
using testing::throws_kind;

TEST(Scalars, BlocksInAnyOrder) {
  TempDir dir;
  const auto p = dir.write("s.csv", "Z2,y,w1,z1\n0.5,1.0,3,0.25\n0.75,2.0,4,0.125\n");
  const auto t = load_scalars(p, true);
  ASSERT_TRUE(t.has_y);
  EXPECT_EQ(t.y, Eigen::Vector2d(1.0, 2.0));
  EXPECT_EQ(t.w.col(0), Eigen::Vector2d(3.0, 4.0));
  EXPECT_EQ(t.z.col(0), Eigen::Vector2d(0.25, 0.125));
  EXPECT_EQ(t.z.col(1), Eigen::Vector2d(0.5, 0.75));
}

TEST(Scalars, NoScalarCovariates) {
  TempDir dir;
  const auto t = load_scalars(dir.write("s.csv", "z1,z2\n1,2\n"), false);
  EXPECT_FALSE(t.has_y);
  EXPECT_EQ(t.w.cols(), 0);
  EXPECT_EQ(t.z.rows(), 1);
}

TEST(Scalars, HeaderErrors) {
  TempDir dir;
  auto err = [&](const std::string& text, bool require_y, const std::string& fragment) {
    const auto p = dir.write("bad.csv", text);
    return throws_kind([&] { load_scalars(p, require_y); }, ErrorKind::Format, fragment);
  };
  EXPECT_TRUE(err("y,x1,z1\n1,2,3\n", true, "unrecognized name 'x1'"));
  EXPECT_TRUE(err("y,z1,z1\n1,2,3\n", true, "duplicate column"));
  EXPECT_TRUE(err("y,w1,w3,z1,z2\n1,2,3,4,5\n", true, "w2 is missing"));
  EXPECT_TRUE(err("w1,z1,z2\n1,2,3\n", true, "missing response column y"));
  EXPECT_TRUE(err("y,w1\n1,2\n", true, "missing index covariate block"));
  EXPECT_TRUE(err("y,z1,z2\n1,2,3\n4,5\n", true, "ragged row 3"));
  EXPECT_TRUE(err("", true, "no rows"));
  const auto p = dir.write("cell.csv", "y,z1,z2\n1,abc,3\n");
  EXPECT_TRUE(throws_kind([&] { load_scalars(p, true); }, ErrorKind::Parse, "column 2"));
}

TEST(Scalars, EmptyFileGivesNoRows) {
  TempDir dir;
  EXPECT_EQ(load_scalars(dir.write("e.csv", ""), false).z.rows(), 0);
  EXPECT_EQ(load_scalars(dir.write("h.csv", "z1,z2\n"), false).z.rows(), 0);
}

TEST(RegressionFiles, RowCountsMustAgree) {
  TempDir dir;
  const auto c = dir.write("c.csv", "0,0.5,1\n1,2,3\n2,3,1\n");
  const auto s = dir.write("s.csv", "y,z1,z2\n1,0.1,0.2\n");
  EXPECT_TRUE(throws_kind([&] { load_regression_data(c, s); }, ErrorKind::Dimension, "2 curves"));
}

TEST(Export, RoundTripsSimulatedData) {
  TempDir dir;
  const auto sim = generate(SimModel::M42, 25, 1.5, {4, 1, 0});
  export_simulated(sim, dir.file("c.csv"), dir.file("s.csv"));
  const auto data = load_regression_data(dir.file("c.csv"), dir.file("s.csv"));
  EXPECT_EQ(data.y, sim.y);
  EXPECT_EQ(data.w, sim.w);
  EXPECT_EQ(data.z, sim.z);
  EXPECT_EQ(data.sample.grid.points(), sim.curves.grid.points());
  const Eigen::MatrixXd raw = data.sample.values.rowwise() + data.sample.mean_curve.transpose();
  EXPECT_LE((raw - sim.curves.values).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_TRUE(read_file(dir.file("s.csv")).starts_with("y,w1,w2,z1,z2,z3\n"));
}

TEST(FormatDouble, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.125, 0.0}) {
    const std::string s = format_double(v);
    EXPECT_EQ(std::stod(s), v) << s;
  }
  EXPECT_EQ(format_double(0.1), "0.1");
}

class ArtifactTest : public ::testing::Test {
 protected:
  void SetUp() override {
    data = testing::small_problem(31, 70, 2, 3);
    fitted = fit(data, {});
    raw = FunctionalSample(data.sample.grid,
                           data.sample.values.rowwise() + data.sample.mean_curve.transpose());
  }
  RegressionData data;
  ProfileFit fitted;
  FunctionalSample raw;
};

TEST_F(ArtifactTest, RoundTripGivesIdenticalPredictions) {
  TempDir dir;
  save_fit(fitted, dir.file("fit.json"));
  const ProfileFit loaded = load_fit(dir.file("fit.json"));
  EXPECT_EQ(predict(loaded, raw, data.w, data.z), predict(fitted, raw, data.w, data.z));
  EXPECT_EQ(fit_to_json(loaded), fit_to_json(fitted));
  EXPECT_EQ(loaded.m_tilde, fitted.m_tilde);
  EXPECT_EQ(loaded.k_star, fitted.k_star);
  EXPECT_EQ(loaded.beta_linear, fitted.beta_linear);
  EXPECT_EQ(loaded.link(0.7), fitted.link(0.7));
}

TEST_F(ArtifactTest, NonFiniteDiagnosticsSurvive) {
  ProfileFit f = fitted;
  f.objective_value = std::numeric_limits<double>::quiet_NaN();
  f.initial_objective = std::numeric_limits<double>::infinity();
  const ProfileFit back = fit_from_json(fit_to_json(f));
  EXPECT_TRUE(std::isnan(back.objective_value));
  EXPECT_EQ(back.initial_objective, std::numeric_limits<double>::infinity());
}

TEST_F(ArtifactTest, RejectsForeignDocuments) {
  EXPECT_TRUE(throws_kind([] { fit_from_json("{\"format\":\"other\"}", "x.json"); },
                          ErrorKind::Format, "x.json"));
  EXPECT_TRUE(throws_kind([] { fit_from_json("not json"); }, ErrorKind::Format));
  std::string text = fit_to_json(fitted);
  text.replace(text.find("\"version\": 1"), 12, "\"version\": 9");
  EXPECT_TRUE(throws_kind([&] { fit_from_json(text); }, ErrorKind::Format, "version"));
  EXPECT_TRUE(throws_kind([] { load_fit("/nonexistent/fit.json"); }, ErrorKind::Io));
}

TEST_F(ArtifactTest, PredictionFiles) {
  TempDir dir;
  std::string curves, scalars = "w1,w2,z1,z2,z3\n";
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (Eigen::Index g = 0; g < raw.cols(); ++g)
      curves += (g ? "," : "") + format_double(raw.values(i, g));
    curves += "\n";
    scalars += format_double(data.w(i, 0)) + "," + format_double(data.w(i, 1));
    for (int k = 0; k < 3; ++k) scalars += "," + format_double(data.z(i, k));
    scalars += "\n";
  }
  const auto in = load_prediction_inputs(dir.write("c.csv", curves), dir.write("s.csv", scalars),
                                         HeaderMode::Absent);
  ASSERT_EQ(in.rows(), 3);
  // A headerless file gets the unit grid, which is also the fit grid here.
  const Eigen::VectorXd got = predict(fitted, in);
  const Eigen::VectorXd want = predict(fitted, raw, data.w, data.z).head(3);
  EXPECT_LE((got - want).cwiseAbs().maxCoeff(), 1e-12);

  const auto empty = load_prediction_inputs(dir.write("e1.csv", ""), dir.write("e2.csv", ""));
  EXPECT_EQ(predict(fitted, empty).size(), 0);

  save_predictions(got, dir.file("p.csv"));
  const std::string text = read_file(dir.file("p.csv"));
  EXPECT_TRUE(text.starts_with("prediction\n"));
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);

  const auto wrong = dir.write("w.csv", "w1,z1,z2,z3\n1,2,3,4\n");
  const auto one = dir.write("one.csv", curves.substr(0, curves.find('\n') + 1));
  EXPECT_TRUE(throws_kind([&] { predict(fitted, load_prediction_inputs(one, wrong, HeaderMode::Absent)); },
                          ErrorKind::Dimension, "w columns"));
}

TEST_F(ArtifactTest, SummaryNamesTheEstimates) {
  const std::string s = format_fit_summary(fitted);
  for (const char* key : {"alpha", "beta", "m_tilde", "k_star", "objective", "converged"})
    EXPECT_NE(s.find(key), std::string::npos) << key;
}

SimSpec tiny_spec() {
  SimSpec spec;
  spec.n = 50;
  spec.replications = 3;
  spec.test_size = 40;
  spec.seed = 5;
  return spec;
}

TEST(Report, Deterministic) {
  const McReport a = monte_carlo(tiny_spec());
  const McReport b = monte_carlo(tiny_spec());
  EXPECT_EQ(report_to_json(a), report_to_json(b));
  EXPECT_EQ(report_to_table(a), report_to_table(b));
  EXPECT_EQ(report_to_json(a).find("runtime"), std::string::npos);
  EXPECT_NE(report_to_json(a, true).find("runtime"), std::string::npos);
}

TEST(Report, TableLayout) {
  const McReport r = monte_carlo(tiny_spec());
  const std::string t = report_to_table(r);
  EXPECT_TRUE(t.starts_with("replication,seed,ok,alpha1,beta1,beta2,beta3,"));
  EXPECT_EQ(std::count(t.begin(), t.end(), '\n'), 4);
  const std::string s = format_report_summary(r);
  EXPECT_NE(s.find("beta1"), std::string::npos);
  EXPECT_NE(s.find("MISE"), std::string::npos);
}

TEST(Report, AtomicSave) {
  TempDir dir;
  const McReport r = monte_carlo(tiny_spec());
  save_report(r, dir.file("r.json"), dir.file("r.csv"));
  EXPECT_EQ(read_file(dir.file("r.json")), report_to_json(r));
  EXPECT_EQ(read_file(dir.file("r.csv")), report_to_table(r));
  int files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.file(""))) ++files;
  EXPECT_EQ(files, 2);
  EXPECT_TRUE(throws_kind([&] { save_report(r, dir.file("no/r.json"), dir.file("no/r.csv")); },
                          ErrorKind::Io));
  EXPECT_FALSE(std::filesystem::exists(dir.file("no/r.json")));
}

}  // namespace
}  // namespace pflsim
