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

#include "pflsim/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pflsim {

LinearInit init_linear_fit(const RegressionData& data, const OptimizerConfig& config) {
  config.validate();
  const Eigen::Index n = data.n();
  const Eigen::Index q = data.q();
  const Eigen::Index d = data.d();
  const SmootherMatrix smoother = smoother_matrix(data.scores, data.eigenvalues(), config.m);

  Eigen::MatrixXd design(n, 1 + q + d);
  design.col(0) = smoother.residualize(Eigen::VectorXd::Ones(n));
  if (q > 0) design.middleCols(1, q) = smoother.residualize(data.w);
  design.rightCols(d) = smoother.residualize(data.z);
  const Eigen::VectorXd target = smoother.residualize(data.y);

  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < design.cols())
    fail(ErrorKind::Rank, "identity-link initial fit is rank deficient (rank " +
                              std::to_string(qr.rank()) + " of " +
                              std::to_string(design.cols()) + ")");
  const Eigen::VectorXd coef = qr.solve(target);

  LinearInit out;
  out.intercept = coef(0);
  out.alpha = coef.segment(1, q);
  out.raw_beta = coef.tail(d);
  const double norm = out.raw_beta.norm();
  if (!(norm > 0.0)) fail(ErrorKind::Rank, "identity-link fit has a zero index direction");
  out.beta = out.raw_beta / norm;
  if (out.beta(d - 1) < 0.0) out.beta = -out.beta;
  if (out.beta(d - 1) == 0.0) {
    out.beta(d - 1) = config.rho0;
    out.beta.normalize();
  }
  return out;
}

namespace {

// Pull a direction into {beta_d >= rho0} keeping the head's orientation.
Eigen::VectorXd project_feasible(Eigen::VectorXd beta, double rho0) {
  const Eigen::Index d = beta.size();
  if (beta(d - 1) >= rho0) return beta;
  const double head = beta.head(d - 1).norm();
  const double target = std::sqrt(1.0 - rho0 * rho0);
  if (head > 0.0) beta.head(d - 1) *= target / head;
  beta(d - 1) = rho0;
  return beta;
}

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value;
  int iterations;
  bool converged;
};

template <typename F>
NelderMeadResult nelder_mead(F&& f, const Eigen::VectorXd& start, double start_value,
                             double tol_obj, double tol_step, int max_iter) {
  const Eigen::Index dim = start.size();
  std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(dim + 1), start);
  std::vector<double> vals(static_cast<std::size_t>(dim + 1), start_value);
  for (Eigen::Index k = 0; k < dim; ++k) {
    auto& p = pts[static_cast<std::size_t>(k + 1)];
    p(k) += std::max(0.05, 0.05 * std::abs(p(k)));
    vals[static_cast<std::size_t>(k + 1)] = f(p);
    if (!std::isfinite(vals[static_cast<std::size_t>(k + 1)])) {
      p(k) = start(k) - std::max(0.05, 0.05 * std::abs(start(k)));
      vals[static_cast<std::size_t>(k + 1)] = f(p);
    }
  }
  std::vector<std::size_t> order(pts.size());
  int iter = 0;
  bool converged = false;
  for (; iter < max_iter; ++iter) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front(), worst = order.back(),
                      second = order[order.size() - 2];
    double size = 0.0;
    for (const auto& p : pts) size = std::max(size, (p - pts[best]).cwiseAbs().maxCoeff());
    const double spread = vals[worst] - vals[best];
    if ((std::isfinite(spread) && spread <= tol_obj * std::max(std::abs(vals[best]), 1e-300)) ||
        size < tol_step) {
      converged = true;
      break;
    }
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (i != worst) centroid += pts[i];
    centroid /= static_cast<double>(dim);

    const Eigen::VectorXd reflect = centroid + (centroid - pts[worst]);
    const double fr = f(reflect);
    if (fr < vals[best]) {
      const Eigen::VectorXd expand = centroid + 2.0 * (centroid - pts[worst]);
      const double fe = f(expand);
      if (fe < fr) {
        pts[worst] = expand;
        vals[worst] = fe;
      } else {
        pts[worst] = reflect;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = reflect;
      vals[worst] = fr;
      continue;
    }
    const bool outside = fr < vals[worst];
    const Eigen::VectorXd contract = outside ? Eigen::VectorXd(centroid + 0.5 * (reflect - centroid))
                                             : Eigen::VectorXd(centroid + 0.5 * (pts[worst] - centroid));
    const double fc = f(contract);
    if (fc < std::min(fr, vals[worst])) {
      pts[worst] = contract;
      vals[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i == best) continue;
      pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
      vals[i] = f(pts[i]);
    }
  }
  const auto best = static_cast<std::size_t>(
      std::min_element(vals.begin(), vals.end()) - vals.begin());
  return {pts[best], vals[best], iter, converged};
}

// Newton steps on the gradient alone, with a Hessian from central
// differences of the analytic gradient. Near the minimum the objective value
// no longer resolves the parameters, the gradient still does.
void polish_newton(const ProfileObjective& objective, Eigen::VectorXd& theta,
                   ProfileObjective::Evaluation& current) {
  constexpr int kSteps = 3;
  constexpr double kStep = 1e-5;
  const Eigen::Index dim = theta.size();
  if (dim == 0) return;
  for (int k = 0; k < kSteps; ++k) {
    const double gnorm = current.gradient.norm();
    if (!(gnorm > 0.0)) return;
    Eigen::MatrixXd hessian(dim, dim);
    for (Eigen::Index j = 0; j < dim; ++j) {
      Eigen::VectorXd up = theta, down = theta;
      up(j) += kStep;
      down(j) -= kStep;
      if (!objective.feasible(up) || !objective.feasible(down)) return;
      hessian.col(j) = (objective.evaluate(up, true).gradient -
                        objective.evaluate(down, true).gradient) / (2.0 * kStep);
    }
    hessian = 0.5 * (hessian + hessian.transpose()).eval();
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(hessian);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return;
    const Eigen::VectorXd step = ldlt.solve(-current.gradient);
    if (!step.allFinite() || step.norm() > 1e-4) return;
    const Eigen::VectorXd next = theta + step;
    if (!objective.feasible(next)) return;
    auto trial = objective.evaluate(next, true);
    if (!(trial.gradient.norm() < gnorm)) return;
    theta = next;
    current = std::move(trial);
  }
}

}  // namespace

OptimizerResult minimize_profile(const ProfileObjective& objective,
                                 const Eigen::Ref<const Eigen::VectorXd>& alpha0,
                                 const Eigen::Ref<const Eigen::VectorXd>& beta0,
                                 const OptimizerConfig& config) {
  config.validate();
  constexpr double kArmijo = 1e-4;
  constexpr int kMaxBacktracks = 40;
  constexpr int kFailuresBeforeFallback = 3;

  Eigen::VectorXd beta_start = project_feasible(beta0.normalized(), config.rho0);
  Eigen::VectorXd theta = objective.pack(alpha0, beta_start);
  auto current = objective.evaluate(theta, true);

  OptimizerResult out;
  out.initial_value = current.value;
  out.trace.push_back(current.value);
  const Eigen::Index dim = theta.size();
  Eigen::MatrixXd inv_hessian = Eigen::MatrixXd::Identity(dim, dim);
  bool scaled = false;
  int failures = 0;

  const double floor = 1e-28 * std::max(objective.y_tilde().squaredNorm() /
                                            static_cast<double>(objective.y_tilde().size()),
                                        std::numeric_limits<double>::min());

  int iter = 0;
  for (; iter < config.max_iter; ++iter) {
    if (current.value <= floor || current.gradient.size() == 0) {
      out.converged = true;
      break;
    }
    Eigen::VectorXd dir = -inv_hessian * current.gradient;
    double slope = current.gradient.dot(dir);
    if (!(slope < 0.0)) {
      inv_hessian.setIdentity();
      scaled = false;
      dir = -current.gradient;
      slope = -current.gradient.squaredNorm();
    }
    double t = std::min(1.0, 1.0 / std::max(dir.norm(), 1e-300));
    while (!objective.feasible(theta + t * dir) && t > 1e-20) t *= 0.5;

    bool accepted = false;
    ProfileObjective::Evaluation trial;
    Eigen::VectorXd next;
    for (int k = 0; k < kMaxBacktracks; ++k, t *= 0.5) {
      next = theta + t * dir;
      if (!objective.feasible(next)) continue;
      trial = objective.evaluate(next, true);
      if (std::isfinite(trial.value) && trial.value <= current.value + kArmijo * t * slope) {
        accepted = true;
        break;
      }
    }

    if (!accepted) {
      // No representable decrease left along the steepest direction.
      if (std::abs(slope) <= 1e-14 * std::max(current.value, 1e-300) ||
          current.gradient.norm() == 0.0) {
        out.converged = true;
        break;
      }
      inv_hessian.setIdentity();
      scaled = false;
      if (++failures >= kFailuresBeforeFallback) {
        auto f = [&](const Eigen::VectorXd& x) {
          if (!objective.feasible(x)) return std::numeric_limits<double>::infinity();
          return objective.evaluate(x, false).value;
        };
        const auto nm = nelder_mead(f, theta, current.value, config.tol_obj, config.tol_step,
                                    config.max_iter * 5);
        out.used_fallback = true;
        if (nm.value < current.value) {
          theta = nm.x;
          current = objective.evaluate(theta, true);
          out.trace.push_back(current.value);
        }
        out.converged = nm.converged;
        ++iter;
        break;
      }
      continue;
    }
    failures = 0;

    const Eigen::VectorXd s = next - theta;
    const Eigen::VectorXd yk = trial.gradient - current.gradient;
    const double decrease = current.value - trial.value;
    const double rel = decrease / std::max(std::abs(current.value), 1e-300);
    theta = next;
    const double sy = s.dot(yk);
    if (sy > 1e-12 * s.norm() * yk.norm()) {
      if (!scaled) {
        inv_hessian = (sy / yk.squaredNorm()) * Eigen::MatrixXd::Identity(dim, dim);
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(dim, dim);
      inv_hessian = (I - rho * s * yk.transpose()) * inv_hessian * (I - rho * yk * s.transpose()) +
                    rho * s * s.transpose();
    }
    current = std::move(trial);
    out.trace.push_back(current.value);
    if (rel < config.tol_obj || s.norm() < config.tol_step) {
      out.converged = true;
      ++iter;
      break;
    }
  }

  if (out.converged && !out.used_fallback) polish_newton(objective, theta, current);

  out.iterations = iter;
  out.alpha = objective.alpha_of(theta);
  out.beta = objective.beta_of(theta);
  out.value = current.value;
  return out;
}

}  // namespace pflsim
