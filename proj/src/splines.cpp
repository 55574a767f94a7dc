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

#include "pflsim/splines.hpp"

#include "pflsim/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace pflsim {

namespace {

constexpr int kMaxDegree = 10;

double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

}  // namespace

BSplineBasis::BSplineBasis(std::vector<double> knots, int degree)
    : knots_(std::move(knots)), degree_(degree) {
  if (degree_ < 0 || degree_ > kMaxDegree)
    fail(ErrorKind::Configuration, "spline degree must be in [0, " +
                                       std::to_string(kMaxDegree) + "]");
  if (knots_.size() < static_cast<std::size_t>(2 * degree_ + 2))
    fail(ErrorKind::Configuration, "knot vector too short for the degree");
  if (!std::is_sorted(knots_.begin(), knots_.end()))
    fail(ErrorKind::Configuration, "knots must be non-decreasing");
  if (!(upper() > lower()))
    fail(ErrorKind::DegenerateIndex, "spline domain has zero width");
}

BSplineBasis BSplineBasis::clamped_uniform(double lo, double hi, int subintervals,
                                           int degree) {
  if (subintervals < 1) fail(ErrorKind::Configuration, "need at least one subinterval");
  if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi))
    fail(ErrorKind::DegenerateIndex, "index range has zero width");
  std::vector<double> knots;
  knots.reserve(static_cast<std::size_t>(subintervals + 2 * degree + 1));
  knots.insert(knots.end(), static_cast<std::size_t>(degree + 1), lo);
  const double step = (hi - lo) / subintervals;
  for (int k = 1; k < subintervals; ++k) knots.push_back(lo + step * k);
  knots.insert(knots.end(), static_cast<std::size_t>(degree + 1), hi);
  return BSplineBasis(std::move(knots), degree);
}

double BSplineBasis::max_spacing() const {
  double h = 0.0;
  for (std::size_t k = 1; k < knots_.size(); ++k) h = std::max(h, knots_[k] - knots_[k - 1]);
  return h;
}

double BSplineBasis::min_spacing() const {
  double h = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < knots_.size(); ++k) {
    const double d = knots_[k] - knots_[k - 1];
    if (d > 0.0) h = std::min(h, d);
  }
  return h;
}

int BSplineBasis::find_span(double u) const {
  const int K = size();
  const auto first = knots_.begin() + degree_;
  const auto last = knots_.begin() + K + 1;
  const auto it = std::upper_bound(first, last, u);
  const int span = static_cast<int>(it - knots_.begin()) - 1;
  return std::clamp(span, degree_, K - 1);
}

// Cox-de Boor triangle with derivatives (The NURBS Book, algorithm A2.3).
int BSplineBasis::eval_local(double u, int order, std::span<double> out) const {
  const int p = degree_;
  if (order < 0 || order > p)
    fail(ErrorKind::Configuration, "derivative order " + std::to_string(order) +
                                       " exceeds spline degree " + std::to_string(p));
  if (out.size() < static_cast<std::size_t>(p + 1))
    fail(ErrorKind::Dimension, "output span too small for local basis values");
  u = std::clamp(u, lower(), upper());
  const int span = find_span(u);
  const auto& U = knots_;

  std::array<std::array<double, kMaxDegree + 1>, kMaxDegree + 1> ndu{};
  std::array<double, kMaxDegree + 1> left{}, right{};
  ndu[0][0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = u - U[static_cast<std::size_t>(span + 1 - j)];
    right[j] = U[static_cast<std::size_t>(span + j)] - u;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu[j][r] = right[r + 1] + left[j - r];
      const double temp = safe_div(ndu[r][j - 1], ndu[j][r]);
      ndu[r][j] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    ndu[j][j] = saved;
  }

  if (order == 0) {
    for (int j = 0; j <= p; ++j) out[static_cast<std::size_t>(j)] = ndu[j][p];
    return span - p;
  }

  std::array<std::array<double, kMaxDegree + 1>, 2> a{};
  for (int r = 0; r <= p; ++r) {
    int s1 = 0, s2 = 1;
    a[0][0] = 1.0;
    double d = 0.0;
    for (int k = 1; k <= order; ++k) {
      d = 0.0;
      const int rk = r - k;
      const int pk = p - k;
      if (r >= k) {
        a[s2][0] = safe_div(a[s1][0], ndu[pk + 1][rk]);
        d = a[s2][0] * ndu[rk][pk];
      }
      const int j1 = rk >= -1 ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a[s2][j] = safe_div(a[s1][j] - a[s1][j - 1], ndu[pk + 1][rk + j]);
        d += a[s2][j] * ndu[rk + j][pk];
      }
      if (r <= pk) {
        a[s2][k] = safe_div(-a[s1][k - 1], ndu[pk + 1][r]);
        d += a[s2][k] * ndu[r][pk];
      }
      std::swap(s1, s2);
    }
    out[static_cast<std::size_t>(r)] = d;
  }
  double factor = p;
  for (int k = 1; k < order; ++k) factor *= (p - k);
  for (int j = 0; j <= p; ++j) out[static_cast<std::size_t>(j)] *= factor;
  return span - p;
}

Eigen::VectorXd BSplineBasis::eval(double u) const { return eval_deriv(u, 0); }

Eigen::VectorXd BSplineBasis::eval_deriv(double u, int order) const {
  std::array<double, kMaxDegree + 1> local{};
  const int first = eval_local(u, order, local);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(size());
  for (int j = 0; j <= degree_; ++j) out(first + j) = local[static_cast<std::size_t>(j)];
  return out;
}

Eigen::MatrixXd BSplineBasis::design(std::span<const double> u, int order) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(u.size()), size());
  std::array<double, kMaxDegree + 1> local{};
  for (std::size_t i = 0; i < u.size(); ++i) {
    const int first = eval_local(u[i], order, local);
    for (int j = 0; j <= degree_; ++j)
      out(static_cast<Eigen::Index>(i), first + j) = local[static_cast<std::size_t>(j)];
  }
  return out;
}

double BSplineBasis::evaluate(const Eigen::Ref<const Eigen::VectorXd>& coeffs,
                              double u) const {
  if (coeffs.size() != size())
    fail(ErrorKind::Dimension, "coefficient count does not match the basis size");
  std::array<double, kMaxDegree + 1> local{};
  const int first = eval_local(u, 0, local);
  double v = 0.0;
  for (int j = 0; j <= degree_; ++j) v += coeffs(first + j) * local[static_cast<std::size_t>(j)];
  return v;
}

BSplineBasis build_index_knots(std::span<const double> index_values, int degree,
                               const KnotRule& rule) {
  if (rule.spacing.has_value() == rule.subintervals.has_value())
    fail(ErrorKind::Configuration, "give exactly one of knot spacing or subinterval count");
  if (index_values.size() < static_cast<std::size_t>(degree + 2))
    fail(ErrorKind::Dimension, "need at least degree + 2 index values");
  const auto [lo_it, hi_it] = std::minmax_element(index_values.begin(), index_values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) fail(ErrorKind::DegenerateIndex, "index values have zero range");

  int k = 0;
  if (rule.spacing) {
    if (!(*rule.spacing > 0.0)) fail(ErrorKind::Configuration, "knot spacing must be positive");
    // Absorb round-off so that an exact multiple does not gain a subinterval.
    k = static_cast<int>(std::ceil((hi - lo) / *rule.spacing * (1.0 - 1e-12)));
  } else {
    k = *rule.subintervals;
  }
  if (k < 1) fail(ErrorKind::Configuration, "subinterval count must be at least 1");
  return BSplineBasis::clamped_uniform(lo, hi, k, degree);
}

}  // namespace pflsim
