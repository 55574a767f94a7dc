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

#include "pflsim/error.hpp"
#include "table.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace pflsim {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Io: return "io";
    case ErrorKind::Format: return "format";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::Extrapolation: return "extrapolation";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::Rank: return "rank";
    case ErrorKind::DegenerateIndex: return "degenerate-index";
    case ErrorKind::Configuration: return "configuration";
    case ErrorKind::Harness: return "harness";
  }
  return "unknown";
}

Grid::Grid(std::vector<double> points) : points_(std::move(points)) {
  if (points_.size() < 2) fail(ErrorKind::Dimension, "grid needs at least 2 points");
  for (std::size_t g = 0; g < points_.size(); ++g) {
    if (!std::isfinite(points_[g]))
      fail(ErrorKind::Format, "grid point " + std::to_string(g) + " is not finite");
    if (g > 0 && !(points_[g] > points_[g - 1]))
      fail(ErrorKind::Format, "grid points must be strictly increasing");
  }
  weights_.assign(points_.size(), 0.0);
  for (std::size_t g = 0; g + 1 < points_.size(); ++g) {
    const double half = 0.5 * (points_[g + 1] - points_[g]);
    weights_[g] += half;
    weights_[g + 1] += half;
  }
}

Grid Grid::uniform(std::size_t count, double lo, double hi) {
  if (count < 2) fail(ErrorKind::Dimension, "grid needs at least 2 points");
  if (!(hi > lo)) fail(ErrorKind::Configuration, "grid range must have positive width");
  std::vector<double> pts(count);
  const double step = (hi - lo) / static_cast<double>(count - 1);
  for (std::size_t g = 0; g < count; ++g) pts[g] = lo + step * static_cast<double>(g);
  pts.back() = hi;
  return Grid(std::move(pts));
}

FunctionalSample::FunctionalSample(Grid g, Eigen::MatrixXd v)
    : grid(std::move(g)), values(std::move(v)),
      mean_curve(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()))) {
  if (values.cols() != static_cast<Eigen::Index>(grid.size()))
    fail(ErrorKind::Dimension, "curve length " + std::to_string(values.cols()) +
                                   " does not match grid length " +
                                   std::to_string(grid.size()));
  if (!values.allFinite()) fail(ErrorKind::Format, "curve values must be finite");
}

FunctionalSample load_curves(const std::filesystem::path& path, HeaderMode header) {
  const auto table = detail::read_text_table(path);
  if (table.rows.empty()) fail(ErrorKind::Format, path.string() + ": no rows");

  const std::size_t width = table.rows.front().size();
  for (std::size_t r = 1; r < table.rows.size(); ++r) {
    if (table.rows[r].size() != width) {
      fail(ErrorKind::Format,
           path.string() + ": ragged row " + std::to_string(table.line_numbers[r]) +
               ": expected " + std::to_string(width) + " columns, found " +
               std::to_string(table.rows[r].size()));
    }
  }
  if (width < 2)
    fail(ErrorKind::Dimension, path.string() + ": need at least 2 columns per row");

  std::vector<std::vector<double>> numeric(table.rows.size(), std::vector<double>(width));
  for (std::size_t r = 0; r < table.rows.size(); ++r)
    for (std::size_t c = 0; c < width; ++c)
      numeric[r][c] = detail::parse_cell(table.rows[r][c], path, table.line_numbers[r], c + 1);

  bool has_header = header == HeaderMode::Present;
  if (header == HeaderMode::Auto && numeric.size() >= 2) {
    const auto& first = numeric.front();
    has_header = std::adjacent_find(first.begin(), first.end(),
                                    [](double a, double b) { return !(b > a); }) ==
                 first.end();
  }
  if (has_header && numeric.size() < 2)
    fail(ErrorKind::Format, path.string() + ": header present but no curves");

  Grid grid = has_header ? Grid(numeric.front()) : Grid::uniform(width);
  const std::size_t first_row = has_header ? 1 : 0;
  Eigen::MatrixXd values(static_cast<Eigen::Index>(numeric.size() - first_row),
                         static_cast<Eigen::Index>(width));
  for (std::size_t r = first_row; r < numeric.size(); ++r)
    for (std::size_t c = 0; c < width; ++c)
      values(static_cast<Eigen::Index>(r - first_row), static_cast<Eigen::Index>(c)) =
          numeric[r][c];
  return FunctionalSample(std::move(grid), std::move(values));
}

namespace {

// Second derivatives of the natural cubic spline through (x, y).
Eigen::VectorXd natural_spline_moments(const std::vector<double>& x,
                                       const Eigen::Ref<const Eigen::VectorXd>& y) {
  const Eigen::Index n = y.size();
  Eigen::VectorXd moments = Eigen::VectorXd::Zero(n);
  if (n < 3) return moments;
  // Thomas algorithm on the interior equations.
  const Eigen::Index m = n - 2;
  Eigen::VectorXd diag(m), upper(m), rhs(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double h0 = x[i + 1] - x[i];
    const double h1 = x[i + 2] - x[i + 1];
    diag(i) = 2.0 * (h0 + h1);
    upper(i) = h1;
    rhs(i) = 6.0 * ((y(i + 2) - y(i + 1)) / h1 - (y(i + 1) - y(i)) / h0);
  }
  for (Eigen::Index i = 1; i < m; ++i) {
    const double lower = x[i + 1] - x[i];
    const double w = lower / diag(i - 1);
    diag(i) -= w * upper(i - 1);
    rhs(i) -= w * rhs(i - 1);
  }
  moments(m) = rhs(m - 1) / diag(m - 1);
  for (Eigen::Index i = m - 2; i >= 0; --i)
    moments(i + 1) = (rhs(i) - upper(i) * moments(i + 2)) / diag(i);
  return moments;
}

std::size_t segment_of(const std::vector<double>& x, double t) {
  auto it = std::upper_bound(x.begin(), x.end(), t);
  std::size_t k = it == x.begin() ? 0 : static_cast<std::size_t>(it - x.begin()) - 1;
  return std::min(k, x.size() - 2);
}

}  // namespace

FunctionalSample interpolate(const FunctionalSample& sample, const Grid& target,
                             InterpolationMethod method) {
  const auto& src = sample.grid.points();
  const double slack = 1e-12 * (sample.grid.upper() - sample.grid.lower());
  for (double t : target.points()) {
    if (t < sample.grid.lower() - slack || t > sample.grid.upper() + slack)
      fail(ErrorKind::Extrapolation,
           "target point " + std::to_string(t) + " outside source range [" +
               std::to_string(sample.grid.lower()) + ", " +
               std::to_string(sample.grid.upper()) + "]");
  }

  FunctionalSample out;
  out.grid = target;
  out.mean_removed = false;
  out.mean_curve = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(target.size()));
  if (sample.grid.same_as(target)) {
    out.values = sample.values;
    return out;
  }

  out.values.resize(sample.rows(), static_cast<Eigen::Index>(target.size()));
  const auto& dst = target.points();
  for (Eigen::Index i = 0; i < sample.rows(); ++i) {
    const Eigen::VectorXd y = sample.values.row(i).transpose();
    Eigen::VectorXd moments;
    if (method == InterpolationMethod::CubicSpline) moments = natural_spline_moments(src, y);
    for (std::size_t g = 0; g < dst.size(); ++g) {
      const double t = std::clamp(dst[g], src.front(), src.back());
      const std::size_t k = segment_of(src, t);
      const double h = src[k + 1] - src[k];
      const double a = t - src[k];
      const auto ki = static_cast<Eigen::Index>(k);
      double v = 0.0;
      if (method == InterpolationMethod::Linear) {
        v = y(ki) + (y(ki + 1) - y(ki)) * (a / h);
      } else {
        const double b = src[k + 1] - t;
        v = moments(ki) * b * b * b / (6.0 * h) + moments(ki + 1) * a * a * a / (6.0 * h) +
            (y(ki) / h - moments(ki) * h / 6.0) * b +
            (y(ki + 1) / h - moments(ki + 1) * h / 6.0) * a;
      }
      out.values(i, static_cast<Eigen::Index>(g)) = v;
    }
  }
  return out;
}

FunctionalSample resample_to_common_grid(std::span<const ObservedCurve> curves,
                                         std::size_t count, InterpolationMethod method) {
  if (curves.empty()) fail(ErrorKind::Dimension, "no curves to resample");
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (const auto& c : curves) {
    if (c.points.size() != c.values.size())
      fail(ErrorKind::Dimension, "observed curve has mismatched points and values");
    if (c.points.size() < 2) fail(ErrorKind::Dimension, "observed curve needs 2 points");
    lo = std::max(lo, c.points.front());
    hi = std::min(hi, c.points.back());
  }
  if (!(hi > lo)) fail(ErrorKind::Extrapolation, "subject ranges do not overlap");

  const Grid common = Grid::uniform(count, lo, hi);
  FunctionalSample out;
  out.grid = common;
  out.values.resize(static_cast<Eigen::Index>(curves.size()),
                    static_cast<Eigen::Index>(count));
  out.mean_curve = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(count));
  for (std::size_t i = 0; i < curves.size(); ++i) {
    FunctionalSample one(Grid(curves[i].points),
                         Eigen::Map<const Eigen::RowVectorXd>(
                             curves[i].values.data(),
                             static_cast<Eigen::Index>(curves[i].values.size())));
    out.values.row(static_cast<Eigen::Index>(i)) = interpolate(one, common, method).values.row(0);
  }
  return out;
}

FunctionalSample center(const FunctionalSample& sample) {
  if (sample.rows() < 1) fail(ErrorKind::Dimension, "cannot center an empty sample");
  FunctionalSample out = sample;
  const Eigen::VectorXd mean = sample.values.colwise().mean().transpose();
  out.values.rowwise() -= mean.transpose();
  out.mean_curve = sample.mean_removed ? Eigen::VectorXd(sample.mean_curve + mean) : mean;
  out.mean_removed = true;
  return out;
}

double inner_product(std::span<const double> f, std::span<const double> g,
                     const Grid& grid) {
  if (f.size() != grid.size() || g.size() != grid.size())
    fail(ErrorKind::Dimension, "inner product operands must match the grid length");
  const auto& w = grid.weights();
  double acc = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) acc += w[k] * (f[k] * g[k]);
  return acc;
}

double inner_product(const Eigen::Ref<const Eigen::VectorXd>& f,
                     const Eigen::Ref<const Eigen::VectorXd>& g, const Grid& grid) {
  return inner_product(std::span<const double>(f.data(), static_cast<std::size_t>(f.size())),
                       std::span<const double>(g.data(), static_cast<std::size_t>(g.size())),
                       grid);
}

}  // namespace pflsim
