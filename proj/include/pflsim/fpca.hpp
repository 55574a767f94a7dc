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

#include "pflsim/curves.hpp"

#include <Eigen/Dense>

namespace pflsim {

/// Leading eigenpairs of a covariance operator tabulated on a grid.
/// Row j of `eigenfunctions` is phi_j on the grid; the rows are orthonormal
/// under the grid's quadrature weights.
struct EigenSystem {
  Eigen::VectorXd eigenvalues;     // non-increasing, >= 0
  Eigen::MatrixXd eigenfunctions;  // J x G
  Grid grid;

  Eigen::Index count() const { return eigenvalues.size(); }
};

struct ScoreMatrix {
  Eigen::MatrixXd scores;  // n x J, xi_ij = <X_i, phi_j>
  EigenSystem eigen;
};

/// (1/n) sum_i X_i(s) X_i(t) on the grid. The sample must already be centered.
Eigen::MatrixXd empirical_covariance(const FunctionalSample& sample);

/// Weighted eigendecomposition: diagonalizes W^{1/2} K W^{1/2} and maps the
/// eigenvectors back so that sum_g w_g phi_j(t_g) phi_k(t_g) = delta_jk.
/// Each eigenfunction is signed so that its largest-magnitude grid value is
/// positive (earliest index wins ties).
EigenSystem eigensystem(const Eigen::MatrixXd& cov, const Grid& grid,
                        Eigen::Index max_components);

/// Default retained count: min(n - 1, G, 50), at least 1.
Eigen::Index default_component_cap(Eigen::Index n, Eigen::Index grid_size);

ScoreMatrix scores(const FunctionalSample& sample, const EigenSystem& eig,
                   Eigen::Index count);

}  // namespace pflsim
