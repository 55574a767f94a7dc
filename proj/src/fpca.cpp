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

#include "pflsim/fpca.hpp"

#include "pflsim/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pflsim {

Eigen::MatrixXd empirical_covariance(const FunctionalSample& sample) {
  if (!sample.mean_removed)
    fail(ErrorKind::Precondition,
         "empirical covariance requires a centered sample; call center() first");
  if (sample.rows() < 1) fail(ErrorKind::Dimension, "empty sample");
  const auto n = static_cast<double>(sample.rows());
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(sample.cols(), sample.cols());
  cov.selfadjointView<Eigen::Lower>().rankUpdate(sample.values.transpose(), 1.0 / n);
  cov.triangularView<Eigen::StrictlyUpper>() = cov.transpose();
  return cov;
}

Eigen::Index default_component_cap(Eigen::Index n, Eigen::Index grid_size) {
  return std::max<Eigen::Index>(1, std::min({n - 1, grid_size, Eigen::Index{50}}));
}

EigenSystem eigensystem(const Eigen::MatrixXd& cov, const Grid& grid,
                        Eigen::Index max_components) {
  const auto G = static_cast<Eigen::Index>(grid.size());
  if (cov.rows() != G || cov.cols() != G)
    fail(ErrorKind::Dimension, "covariance size does not match the grid");
  if (max_components < 1) fail(ErrorKind::Configuration, "need at least one component");
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    fail(ErrorKind::Precondition, "covariance matrix is not symmetric");

  const Eigen::VectorXd root_w = grid.weights_vec().cwiseSqrt();
  const Eigen::MatrixXd conj = root_w.asDiagonal() * cov * root_w.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      0.5 * (conj + conj.transpose()));
  if (solver.info() != Eigen::Success)
    fail(ErrorKind::Rank, "symmetric eigensolver did not converge");

  const Eigen::Index J = std::min(max_components, G);
  EigenSystem out;
  out.grid = grid;
  out.eigenvalues.resize(J);
  out.eigenfunctions.resize(J, G);
  const Eigen::VectorXd inv_root_w = root_w.cwiseInverse();
  // Eigen returns ascending eigenvalues.
  for (Eigen::Index j = 0; j < J; ++j) {
    const Eigen::Index src = G - 1 - j;
    out.eigenvalues(j) = std::max(0.0, solver.eigenvalues()(src));
    Eigen::VectorXd phi = inv_root_w.cwiseProduct(solver.eigenvectors().col(src));
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index g = 0; g < G; ++g) {
      if (std::abs(phi(g)) > best) {
        best = std::abs(phi(g));
        arg = g;
      }
    }
    if (phi(arg) < 0.0) phi = -phi;
    out.eigenfunctions.row(j) = phi.transpose();
  }
  return out;
}

ScoreMatrix scores(const FunctionalSample& sample, const EigenSystem& eig,
                   Eigen::Index count) {
  if (!sample.grid.same_as(eig.grid))
    fail(ErrorKind::Dimension, "sample grid does not match the eigensystem grid");
  if (count < 0 || count > eig.count())
    fail(ErrorKind::Configuration, "requested " + std::to_string(count) +
                                       " scores but only " +
                                       std::to_string(eig.count()) + " components exist");
  ScoreMatrix out;
  out.eigen.grid = eig.grid;
  out.eigen.eigenvalues = eig.eigenvalues.head(count);
  out.eigen.eigenfunctions = eig.eigenfunctions.topRows(count);
  out.scores = sample.values * eig.grid.weights_vec().asDiagonal() *
               out.eigen.eigenfunctions.transpose();
  return out;
}

}  // namespace pflsim
