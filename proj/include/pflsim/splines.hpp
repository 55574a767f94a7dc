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

#include <optional>
#include <span>
#include <vector>

namespace pflsim {

/// B-spline basis of a given degree over an arbitrary non-decreasing knot
/// vector. The usable domain is [knots[s], knots[K]]; evaluation outside it
/// clamps to the nearest endpoint.
class BSplineBasis {
 public:
  BSplineBasis() = default;
  BSplineBasis(std::vector<double> knots, int degree);

  /// Open (clamped) knot vector with `subintervals` equal pieces over
  /// [lo, hi] and boundary multiplicity degree + 1. Size = subintervals + degree.
  static BSplineBasis clamped_uniform(double lo, double hi, int subintervals, int degree);

  int degree() const noexcept { return degree_; }
  int size() const noexcept { return static_cast<int>(knots_.size()) - degree_ - 1; }
  int subintervals() const noexcept { return size() - degree_; }
  double lower() const { return knots_[static_cast<std::size_t>(degree_)]; }
  double upper() const { return knots_[static_cast<std::size_t>(size())]; }
  /// Largest distance between consecutive distinct knots.
  double max_spacing() const;
  double min_spacing() const;
  const std::vector<double>& knots() const noexcept { return knots_; }

  Eigen::VectorXd eval(double u) const;
  Eigen::VectorXd eval_deriv(double u, int order) const;

  /// Values (order 0) or derivatives of the degree + 1 functions that may be
  /// nonzero at u. Returns the index of the first one.
  int eval_local(double u, int order, std::span<double> out) const;

  Eigen::MatrixXd design(std::span<const double> u, int order = 0) const;

  double evaluate(const Eigen::Ref<const Eigen::VectorXd>& coeffs, double u) const;

 private:
  int find_span(double u) const;

  std::vector<double> knots_;
  int degree_ = 0;
};

/// Either a target spacing h0 or an explicit number of subintervals.
struct KnotRule {
  std::optional<double> spacing;
  std::optional<int> subintervals;
};

/// Index basis over [min u_i, max u_i] with equispaced interior knots. With a
/// spacing h0 the subinterval count is ceil(range / h0).
BSplineBasis build_index_knots(std::span<const double> index_values, int degree,
                               const KnotRule& rule);

}  // namespace pflsim
