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

#include "pflsim/simgen.hpp"

#include "pflsim/error.hpp"
#include "pflsim/rng.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>
#include <thread>

namespace pflsim {

namespace {

constexpr std::uint32_t kScoreTag = 0;
constexpr std::uint32_t kIndexTag = 1;
constexpr std::uint32_t kNoiseTag = 2;
constexpr std::uint32_t kCovariateTag = 3;
constexpr std::uint32_t kTestSalt = 16;

std::uint32_t tag(const StreamKey& key, std::uint32_t stream) { return key.salt + stream; }

}  // namespace

const char* to_string(SimModel model) noexcept {
  return model == SimModel::M41 ? "m41" : "m42";
}

SimModel parse_model(const std::string& name) {
  if (name == "m41" || name == "M41" || name == "4.1") return SimModel::M41;
  if (name == "m42" || name == "M42" || name == "4.2") return SimModel::M42;
  fail(ErrorKind::Configuration, "unknown model '" + name + "' (expected m41 or m42)");
}

double default_sigma(SimModel model) noexcept { return model == SimModel::M41 ? 0.5 : 1.0; }

double TruthBundle::link(double u) const {
  if (model == SimModel::M42) return -2.0 * u + 5.0;
  const double e = std::sqrt(3.0) / 2.0 - 1.645 / std::sqrt(12.0);
  const double f = std::sqrt(3.0) / 2.0 + 1.645 / std::sqrt(12.0);
  return std::sin(std::numbers::pi * (u - e) / (f - e));
}

Eigen::VectorXd slope_coefficients() {
  Eigen::VectorXd a(kTruncation);
  a(0) = 0.3;
  for (int j = 2; j <= kTruncation; ++j)
    a(j - 1) = 4.0 * ((j % 2 == 0) ? -1.0 : 1.0) / (static_cast<double>(j) * j);
  return a;
}

Eigen::VectorXd model_eigenvalues(SimModel model, double delta) {
  Eigen::VectorXd lambda(kTruncation);
  for (int j = 1; j <= kTruncation; ++j) {
    double v = 0.0;
    if (model == SimModel::M41) {
      v = std::pow(static_cast<double>(j), -delta);
    } else if (j == 1) {
      v = 1.0;
    } else if (j <= 4) {
      const double f = 1.0 - 0.0001 * j;
      v = 0.22 * 0.22 * f * f;
    } else {
      const int block = j / 5;
      const int offset = j % 5;
      const double f = std::pow(5.0 * block, -delta / 2.0) - 0.0001 * offset;
      v = 0.22 * 0.22 * f * f;
    }
    lambda(j - 1) = v;
  }
  return lambda;
}

Eigen::MatrixXd cosine_basis(const Grid& grid) {
  const auto G = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd phi(kTruncation, G);
  for (Eigen::Index g = 0; g < G; ++g) {
    const double t = grid.points()[static_cast<std::size_t>(g)];
    phi(0, g) = 1.0;
    for (int j = 2; j <= kTruncation; ++j)
      phi(j - 1, g) = std::numbers::sqrt2 * std::cos((j - 1) * std::numbers::pi * t);
  }
  return phi;
}

SimulatedData generate(SimModel model, std::size_t n, double delta, const StreamKey& key,
                       const GeneratorOptions& options) {
  if (n < 1) fail(ErrorKind::Configuration, "sample size must be at least 1");
  if (!(delta > 1.0)) fail(ErrorKind::Configuration, "delta must exceed 1");
  const auto rows = static_cast<Eigen::Index>(n);
  const Grid grid = Grid::uniform(options.grid_size, 0.0, 1.0);

  SimulatedData out;
  TruthBundle& truth = out.truth;
  truth.model = model;
  truth.delta = delta;
  truth.eigenvalues = model_eigenvalues(model, delta);
  truth.a_coeffs = slope_coefficients();
  truth.eigenfunctions = cosine_basis(grid);
  truth.a_curve = truth.eigenfunctions.transpose() * truth.a_coeffs;
  truth.sigma = options.sigma.value_or(default_sigma(model));
  if (model == SimModel::M41) {
    truth.alpha = Eigen::VectorXd::Constant(1, 0.3);
    truth.beta = Eigen::VectorXd::Constant(3, 1.0 / std::sqrt(3.0));
  } else {
    truth.alpha = Eigen::Vector2d(-2.0, 1.5);
    truth.beta = Eigen::Vector3d(1.0, 2.0, 2.0) / 3.0;
  }

  std::normal_distribution<double> normal;
  CounterRng score_rng(key.seed, key.replication, tag(key, kScoreTag));
  out.true_scores.resize(rows, kTruncation);
  const Eigen::VectorXd sd = truth.eigenvalues.cwiseSqrt();
  for (Eigen::Index i = 0; i < rows; ++i)
    for (int j = 0; j < kTruncation; ++j) out.true_scores(i, j) = sd(j) * normal(score_rng);

  CounterRng index_rng(key.seed, key.replication, tag(key, kIndexTag));
  out.z.resize(rows, 3);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index c = 0; c < 3; ++c) out.z(i, c) = index_rng.uniform();

  if (model == SimModel::M41) {
    out.w.resize(rows, 1);
    for (Eigen::Index i = 0; i < rows; ++i)
      out.w(i, 0) = ((options.first_index + static_cast<std::size_t>(i)) % 2 == 0) ? 1.0 : 0.0;
  } else {
    CounterRng cov_rng(key.seed, key.replication, tag(key, kCovariateTag));
    Eigen::VectorXd loading(kTruncation);
    for (int j = 1; j <= kTruncation; ++j) loading(j - 1) = 1.0 / (static_cast<double>(j) * j);
    out.w.resize(rows, 2);
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double base = out.true_scores.row(i).dot(loading);
      out.w(i, 0) = base + (-1.0 + 2.0 * normal(cov_rng));
      out.w(i, 1) = 2.0 * base + (2.0 + 3.0 * normal(cov_rng));
    }
  }

  CounterRng noise_rng(key.seed, key.replication, tag(key, kNoiseTag));
  out.noise.resize(rows);
  for (Eigen::Index i = 0; i < rows; ++i) out.noise(i) = truth.sigma * normal(noise_rng);

  out.curves = FunctionalSample(grid, out.true_scores * truth.eigenfunctions);
  const Eigen::VectorXd index = out.z * truth.beta;
  out.regression = out.true_scores * truth.a_coeffs + out.w * truth.alpha;
  for (Eigen::Index i = 0; i < rows; ++i) out.regression(i) += truth.link(index(i));
  out.y = out.regression + out.noise;
  return out;
}

SimulatedData generate_model41(std::size_t n, double delta, std::uint64_t seed,
                               const GeneratorOptions& options) {
  return generate(SimModel::M41, n, delta, StreamKey{seed, 0, 0}, options);
}

SimulatedData generate_model42(std::size_t n, double delta, std::uint64_t seed,
                               const GeneratorOptions& options) {
  return generate(SimModel::M42, n, delta, StreamKey{seed, 0, 0}, options);
}

RegressionData to_regression_data(const SimulatedData& sim) {
  return RegressionData::build(sim.curves, sim.y, sim.w, sim.z);
}

double mise(const Eigen::Ref<const Eigen::VectorXd>& estimate,
            const Eigen::Ref<const Eigen::VectorXd>& truth, const Grid& grid) {
  if (estimate.size() != truth.size() || estimate.size() != static_cast<Eigen::Index>(grid.size()))
    fail(ErrorKind::Dimension, "MISE operands must match the grid");
  const Eigen::VectorXd diff = estimate - truth;
  return inner_product(diff, diff, grid);
}

double link_mise(const ProfileFit& fit, const TruthBundle& truth, std::size_t points) {
  const Grid grid = Grid::uniform(points, fit.second_basis.lower(), fit.second_basis.upper());
  Eigen::VectorXd est(static_cast<Eigen::Index>(points));
  Eigen::VectorXd ref(static_cast<Eigen::Index>(points));
  for (std::size_t g = 0; g < points; ++g) {
    const double u = grid.points()[g];
    est(static_cast<Eigen::Index>(g)) = fit.link(u);
    ref(static_cast<Eigen::Index>(g)) = truth.link(u);
  }
  return mise(est, ref, grid);
}

double mean_absolute_error(const Eigen::Ref<const Eigen::VectorXd>& predicted,
                           const Eigen::Ref<const Eigen::VectorXd>& truth) {
  if (predicted.size() != truth.size() || predicted.size() == 0)
    fail(ErrorKind::Dimension, "MAE needs equal, non-empty vectors");
  return (predicted - truth).cwiseAbs().mean();
}

double mae_prediction(const ProfileFit& fit, const SimulatedData& test) {
  const Eigen::VectorXd pred = predict(fit, test.curves, test.w, test.z);
  return mean_absolute_error(pred, test.regression);
}

void SimSpec::validate() const {
  if (n < 30) fail(ErrorKind::Configuration, "simulation sample size must be at least 30");
  if (!(delta > 1.0)) fail(ErrorKind::Configuration, "delta must exceed 1");
  if (replications < 1) fail(ErrorKind::Configuration, "need at least one replication");
  if (test_size < 1) fail(ErrorKind::Configuration, "test size must be at least 1");
  estimator.validate();
}

ReplicationRecord run_replication(const SimSpec& spec, std::size_t replication) {
  ReplicationRecord rec;
  rec.replication = replication;
  rec.seed = spec.seed;
  const auto start = std::chrono::steady_clock::now();
  try {
    const auto r = static_cast<std::uint32_t>(replication);
    GeneratorOptions train_opts{spec.grid_size, spec.sigma, 1};
    const SimulatedData train = generate(spec.model, spec.n, spec.delta, {spec.seed, r, 0}, train_opts);
    GeneratorOptions test_opts{spec.grid_size, spec.sigma, spec.n + 1};
    const SimulatedData test =
        generate(spec.model, spec.test_size, spec.delta, {spec.seed, r, kTestSalt}, test_opts);

    const RegressionData data = to_regression_data(train);
    const ProfileFit f = fit(data, spec.estimator);
    rec.alpha = f.alpha;
    rec.beta = f.beta;
    rec.alpha_linear = f.alpha_linear;
    rec.beta_linear = f.beta_linear;
    rec.mise_g = link_mise(f, train.truth);
    rec.mise_a = mise(f.a_curve, train.truth.a_curve, f.grid);
    rec.mae = mae_prediction(f, test);
    rec.m_tilde = f.m_tilde;
    rec.k_star = f.k_star;
    rec.iterations = f.iterations;
    rec.converged = f.converged;
    rec.ok = true;
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.error = e.what();
  }
  rec.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

Quantiles quantiles(std::vector<double> values) {
  Quantiles q;
  if (values.empty()) return q;
  std::sort(values.begin(), values.end());
  auto at = [&](double p) {
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  q.min = values.front();
  q.q25 = at(0.25);
  q.median = at(0.5);
  q.q75 = at(0.75);
  q.max = values.back();
  return q;
}

namespace {

std::vector<ParameterSummary> summarize(const std::vector<const ReplicationRecord*>& ok,
                                        const TruthBundle& truth, bool linear) {
  std::vector<ParameterSummary> out;
  auto add = [&](const std::string& name, double true_value, auto&& pick) {
    ParameterSummary s;
    s.name = name;
    s.truth = true_value;
    const auto R = static_cast<double>(ok.size());
    double sum = 0.0;
    for (const auto* rec : ok) sum += pick(*rec);
    s.mean = sum / R;
    double ss = 0.0;
    for (const auto* rec : ok) ss += (pick(*rec) - s.mean) * (pick(*rec) - s.mean);
    s.sd = ok.size() > 1 ? std::sqrt(ss / (R - 1.0)) : 0.0;
    s.bias = s.mean - s.truth;
    out.push_back(s);
  };
  for (Eigen::Index k = 0; k < truth.alpha.size(); ++k)
    add("alpha" + std::to_string(k + 1), truth.alpha(k), [&](const ReplicationRecord& r) {
      return linear ? r.alpha_linear(k) : r.alpha(k);
    });
  for (Eigen::Index k = 0; k < truth.beta.size(); ++k)
    add("beta" + std::to_string(k + 1), truth.beta(k), [&](const ReplicationRecord& r) {
      return linear ? r.beta_linear(k) : r.beta(k);
    });
  return out;
}

}  // namespace

void aggregate(McReport& report) {
  std::vector<const ReplicationRecord*> ok;
  for (const auto& rec : report.records)
    if (rec.ok) ok.push_back(&rec);
  report.failures = report.records.size() - ok.size();
  report.converged = static_cast<std::size_t>(
      std::count_if(ok.begin(), ok.end(), [](const auto* r) { return r->converged; }));
  report.parameters.clear();
  report.linear_parameters.clear();
  if (ok.empty()) return;

  GeneratorOptions opts{report.spec.grid_size, report.spec.sigma, 1};
  // Truth constants only; the draw itself is irrelevant.
  const TruthBundle truth = generate(report.spec.model, 1, report.spec.delta, {}, opts).truth;
  report.parameters = summarize(ok, truth, false);
  report.linear_parameters = summarize(ok, truth, true);

  std::vector<double> mg, ma, mae;
  for (const auto* r : ok) {
    mg.push_back(r->mise_g);
    ma.push_back(r->mise_a);
    mae.push_back(r->mae);
  }
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  report.mise_g_mean = mean(mg);
  report.mise_g_median = quantiles(mg).median;
  report.mise_a_mean = mean(ma);
  report.mise_a_median = quantiles(ma).median;
  report.mae_mean = mean(mae);
  report.mae = quantiles(mae);
}

McReport monte_carlo(const SimSpec& spec) {
  spec.validate();
  McReport report;
  report.spec = spec;
  report.records.resize(spec.replications);
  const unsigned workers = std::max(1u, std::min<unsigned>(spec.jobs, static_cast<unsigned>(spec.replications)));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t r = next++; r < spec.replications; r = next++)
      report.records[r] = run_replication(spec, r);
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  aggregate(report);
  if (static_cast<double>(report.failures) > 0.2 * static_cast<double>(spec.replications))
    fail(ErrorKind::Harness, std::to_string(report.failures) + " of " +
                                 std::to_string(spec.replications) +
                                 " replications failed (limit 20%)");
  return report;
}

}  // namespace pflsim
