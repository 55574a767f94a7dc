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

#include <Eigen/Dense>

#include <filesystem>
#include <span>
#include <vector>

namespace pflsim {

/// Ordered evaluation points of a curve domain together with trapezoidal
/// quadrature weights. Immutable once built.
class Grid {
 public:
  Grid() = default;
  explicit Grid(std::vector<double> points);

  static Grid uniform(std::size_t count, double lo = 0.0, double hi = 1.0);

  std::size_t size() const noexcept { return points_.size(); }
  double lower() const { return points_.front(); }
  double upper() const { return points_.back(); }
  const std::vector<double>& points() const noexcept { return points_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  Eigen::Map<const Eigen::VectorXd> points_vec() const {
    return {points_.data(), static_cast<Eigen::Index>(points_.size())};
  }
  Eigen::Map<const Eigen::VectorXd> weights_vec() const {
    return {weights_.data(), static_cast<Eigen::Index>(weights_.size())};
  }

  bool same_as(const Grid& other) const { return points_ == other.points_; }

 private:
  std::vector<double> points_;
  std::vector<double> weights_;
};

/// n curves evaluated on a shared grid (row i holds X_i(t_g)).
struct FunctionalSample {
  Grid grid;
  Eigen::MatrixXd values;
  bool mean_removed = false;
  Eigen::VectorXd mean_curve;  // zero unless mean_removed

  FunctionalSample() = default;
  FunctionalSample(Grid g, Eigen::MatrixXd v);

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
};

enum class InterpolationMethod { Linear, CubicSpline };

enum class HeaderMode {
  Auto,     // first row is a grid when it is strictly increasing
  Present,
  Absent,
};

/// One subject observed on its own grid.
struct ObservedCurve {
  std::vector<double> points;
  std::vector<double> values;
};

FunctionalSample load_curves(const std::filesystem::path& path,
                             HeaderMode header = HeaderMode::Auto);

FunctionalSample interpolate(const FunctionalSample& sample, const Grid& target,
                             InterpolationMethod method);

/// Interpolate subjects observed on individual grids onto a common grid of
/// `count` equispaced points spanning the intersection of their ranges.
FunctionalSample resample_to_common_grid(std::span<const ObservedCurve> curves,
                                         std::size_t count = 101,
                                         InterpolationMethod method =
                                             InterpolationMethod::Linear);

FunctionalSample center(const FunctionalSample& sample);

/// Trapezoidal L2 inner product of two functions tabulated on `grid`.
double inner_product(std::span<const double> f, std::span<const double> g,
                     const Grid& grid);
double inner_product(const Eigen::Ref<const Eigen::VectorXd>& f,
                     const Eigen::Ref<const Eigen::VectorXd>& g,
                     const Grid& grid);

}  // namespace pflsim
