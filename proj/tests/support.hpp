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

// Shared helpers for the unit tests.

#include "pflsim/curves.hpp"
#include "pflsim/error.hpp"
#include "pflsim/estimator.hpp"
#include "pflsim/simgen.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <string>

namespace pflsim::testing {

/// Runs f and checks that it throws pflsim::Error of the given kind whose
/// message contains `fragment`.
template <class F>
::testing::AssertionResult throws_kind(F&& f, ErrorKind kind, const std::string& fragment = {}) {
  try {
    f();
  } catch (const Error& e) {
    if (e.kind() != kind)
      return ::testing::AssertionFailure() << "kind " << to_string(e.kind()) << ": " << e.what();
    if (std::string(e.what()).find(fragment) == std::string::npos)
      return ::testing::AssertionFailure() << "message lacks '" << fragment << "': " << e.what();
    return ::testing::AssertionSuccess();
  }
  return ::testing::AssertionFailure() << "no exception";
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                                     double sd = 1.0) {
  std::normal_distribution<double> normal(0.0, sd);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

inline Eigen::MatrixXd uniform_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = unif(rng);
  return m;
}

/// Curves sum_j s_j xi_ij phi_j(t) with cosine phi_j and s_j = j^(-decay/2).
inline FunctionalSample random_curves(std::mt19937_64& rng, Eigen::Index n, std::size_t grid_size,
                                      int terms = 8, double decay = 1.5) {
  const Grid grid = Grid::uniform(grid_size);
  const Eigen::MatrixXd basis = cosine_basis(grid).topRows(terms);
  Eigen::MatrixXd xi = random_matrix(rng, n, terms);
  for (int j = 0; j < terms; ++j) xi.col(j) *= std::pow(j + 1.0, -decay / 2.0);
  return FunctionalSample(grid, xi * basis);
}

inline Eigen::VectorXd unit(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v.normalized();
}

/// A small single-index data set with noise; g(u) = sin(pi u).
inline RegressionData small_problem(std::uint64_t seed, Eigen::Index n = 60, Eigen::Index q = 1,
                                    Eigen::Index d = 3, double sigma = 0.2) {
  std::mt19937_64 rng(seed);
  FunctionalSample curves = random_curves(rng, n, 41, 6);
  const Eigen::MatrixXd w = random_matrix(rng, n, q);
  const Eigen::MatrixXd z = uniform_matrix(rng, n, d);
  Eigen::VectorXd beta = Eigen::VectorXd::Ones(d).normalized();
  Eigen::VectorXd alpha = Eigen::VectorXd::LinSpaced(q, 0.5, -0.5);
  if (q == 1) alpha(0) = 0.7;
  const Eigen::VectorXd a = cosine_basis(curves.grid).row(1).transpose();
  Eigen::VectorXd y(n);
  std::normal_distribution<double> noise(0.0, sigma);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = z.row(i).dot(beta);
    y(i) = inner_product(a, curves.values.row(i).transpose(), curves.grid) +
           (q > 0 ? w.row(i).dot(alpha) : 0.0) + std::sin(std::numbers::pi * u) + noise(rng);
  }
  return RegressionData::build(std::move(curves), std::move(y), w, z);
}

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("pflsim-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path file(const std::string& name) const { return path_ / name; }

  std::filesystem::path write(const std::string& name, const std::string& content) const {
    const auto p = file(name);
    std::ofstream(p, std::ios::binary) << content;
    return p;
  }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace pflsim::testing
