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

#include "pflsim/error.hpp"
#include "table.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

namespace pflsim {

using json = nlohmann::ordered_json;

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\"");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\"");
  return s.substr(b, e - b + 1);
}

// Block index of a w/z header token, or 0 if it is not one.
int block_index(const std::string& token, char block) {
  if (token.size() < 2 || token[0] != block) return 0;
  int k = 0;
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data() + 1, end, k);
  if (ec != std::errc() || ptr != end || k < 1) return 0;
  return k;
}

std::vector<int> block_columns(const std::map<int, std::size_t>& found, char block,
                               const std::filesystem::path& path) {
  std::vector<int> cols;
  int expect = 1;
  for (const auto& [k, col] : found) {
    if (k != expect)
      fail(ErrorKind::Format, path.string() + ": " + std::string(1, block) + " columns must be " +
                                  block + "1.." + block + "k without gaps; " + block +
                                  std::to_string(expect) + " is missing");
    cols.push_back(static_cast<int>(col));
    ++expect;
  }
  return cols;
}

bool file_has_rows(const std::filesystem::path& path) {
  return !detail::read_text_table(path).rows.empty();
}

json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double to_number(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  fail(ErrorKind::Format, "expected a number, found " + j.dump());
}

json vec(const Eigen::Ref<const Eigen::VectorXd>& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v(i)));
  return out;
}

json vec(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(number(x));
  return out;
}

Eigen::VectorXd to_vec(const json& j) {
  if (!j.is_array()) fail(ErrorKind::Format, "expected an array, found " + j.dump());
  Eigen::VectorXd out(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) out(static_cast<Eigen::Index>(i)) = to_number(j[i]);
  return out;
}

std::vector<double> to_std(const json& j) {
  const Eigen::VectorXd v = to_vec(j);
  return {v.data(), v.data() + v.size()};
}

json basis_json(const BSplineBasis& basis, const Eigen::VectorXd& coeffs) {
  return json{{"degree", basis.degree()}, {"knots", vec(basis.knots())}, {"coeffs", vec(coeffs)}};
}

BSplineBasis basis_from(const json& j, Eigen::VectorXd& coeffs) {
  BSplineBasis basis(to_std(j.at("knots")), j.at("degree").get<int>());
  coeffs = to_vec(j.at("coeffs"));
  if (coeffs.size() != basis.size())
    fail(ErrorKind::Format, "spline has " + std::to_string(basis.size()) + " functions but " +
                                std::to_string(coeffs.size()) + " coefficients");
  return basis;
}

json selection_json(const Selection& s) {
  return json{{"value", s.value},
              {"candidates", s.candidates},
              {"criteria", vec(s.criteria)}};
}

Selection selection_from(const json& j) {
  Selection s;
  s.value = j.at("value").get<int>();
  s.candidates = j.at("candidates").get<std::vector<int>>();
  s.criteria = to_std(j.at("criteria"));
  return s;
}

std::string fixed(double v, int precision = 6) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

struct ModelShape {
  Eigen::Index q, d;
};

ModelShape shape_of(SimModel model) { return model == SimModel::M41 ? ModelShape{1, 3} : ModelShape{2, 3}; }

json parameter_json(const std::vector<ParameterSummary>& params) {
  json out = json::array();
  for (const auto& p : params)
    out.push_back(json{{"name", p.name},
                       {"truth", number(p.truth)},
                       {"mean", number(p.mean)},
                       {"bias", number(p.bias)},
                       {"sd", number(p.sd)}});
  return out;
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

ScalarTable load_scalars(const std::filesystem::path& path, bool require_y) {
  const auto table = detail::read_text_table(path);
  ScalarTable out;
  if (table.rows.empty()) {
    if (require_y) fail(ErrorKind::Format, path.string() + ": no rows");
    return out;
  }

  const auto& header = table.rows.front();
  std::optional<std::size_t> y_col;
  std::map<int, std::size_t> w_found, z_found;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string token = lower(trim(header[c]));
    const std::string where = path.string() + ": header column " + std::to_string(c + 1);
    bool duplicate = false;
    if (token == "y") {
      duplicate = y_col.has_value();
      y_col = c;
    } else if (int k = block_index(token, 'w')) {
      duplicate = !w_found.emplace(k, c).second;
    } else if (int k2 = block_index(token, 'z')) {
      duplicate = !z_found.emplace(k2, c).second;
    } else {
      fail(ErrorKind::Format, where + ": unrecognized name '" + header[c] +
                                  "' (expected y, w1..wq or z1..zd)");
    }
    if (duplicate) fail(ErrorKind::Format, where + ": duplicate column '" + header[c] + "'");
  }
  if (require_y && !y_col)
    fail(ErrorKind::Format, path.string() + ": missing response column y");
  if (z_found.empty())
    fail(ErrorKind::Format, path.string() + ": missing index covariate block z1..zd");
  const auto w_cols = block_columns(w_found, 'w', path);
  const auto z_cols = block_columns(z_found, 'z', path);

  const auto n = static_cast<Eigen::Index>(table.rows.size() - 1);
  out.has_y = y_col.has_value();
  if (out.has_y) out.y.resize(n);
  out.w.resize(n, static_cast<Eigen::Index>(w_cols.size()));
  out.z.resize(n, static_cast<Eigen::Index>(z_cols.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>(i) + 1;
    const auto& row = table.rows[r];
    const std::size_t line = table.line_numbers[r];
    if (row.size() != header.size())
      fail(ErrorKind::Format, path.string() + ": ragged row " + std::to_string(line) +
                                  ": expected " + std::to_string(header.size()) +
                                  " columns, found " + std::to_string(row.size()));
    auto cell = [&](std::size_t c) { return detail::parse_cell(row[c], path, line, c + 1); };
    if (y_col) out.y(i) = cell(*y_col);
    for (std::size_t k = 0; k < w_cols.size(); ++k)
      out.w(i, static_cast<Eigen::Index>(k)) = cell(static_cast<std::size_t>(w_cols[k]));
    for (std::size_t k = 0; k < z_cols.size(); ++k)
      out.z(i, static_cast<Eigen::Index>(k)) = cell(static_cast<std::size_t>(z_cols[k]));
  }
  return out;
}

RegressionData load_regression_data(const std::filesystem::path& curves,
                                    const std::filesystem::path& scalars, HeaderMode header) {
  FunctionalSample sample = load_curves(curves, header);
  ScalarTable table = load_scalars(scalars, true);
  if (sample.rows() != table.y.size())
    fail(ErrorKind::Dimension, curves.string() + " has " + std::to_string(sample.rows()) +
                                   " curves but " + scalars.string() + " has " +
                                   std::to_string(table.y.size()) + " rows");
  return RegressionData::build(std::move(sample), std::move(table.y), std::move(table.w),
                               std::move(table.z));
}

PredictionInputs load_prediction_inputs(const std::filesystem::path& curves,
                                        const std::filesystem::path& scalars,
                                        HeaderMode header) {
  PredictionInputs in;
  in.scalars = load_scalars(scalars, false);
  if (file_has_rows(curves)) in.curves = load_curves(curves, header);
  if (in.curves.rows() != in.scalars.z.rows())
    fail(ErrorKind::Dimension, curves.string() + " has " + std::to_string(in.curves.rows()) +
                                   " curves but " + scalars.string() + " has " +
                                   std::to_string(in.scalars.z.rows()) + " rows");
  return in;
}

Eigen::VectorXd predict(const ProfileFit& fit, const PredictionInputs& inputs) {
  if (inputs.rows() == 0) return {};
  const auto& s = inputs.scalars;
  if (s.w.cols() != fit.alpha.size())
    fail(ErrorKind::Dimension, "fit expects " + std::to_string(fit.alpha.size()) +
                                   " w columns, inputs have " + std::to_string(s.w.cols()));
  if (s.z.cols() != fit.beta.size())
    fail(ErrorKind::Dimension, "fit expects " + std::to_string(fit.beta.size()) +
                                   " z columns, inputs have " + std::to_string(s.z.cols()));
  return predict(fit, inputs.curves, s.w, s.z);
}

std::string fit_to_json(const ProfileFit& fit) {
  json j;
  j["format"] = "pflsim-fit";
  j["version"] = 1;
  j["grid"] = vec(fit.grid.points());
  j["mean_curve"] = vec(fit.mean_curve);
  j["alpha"] = vec(fit.alpha);
  j["beta"] = vec(fit.beta);
  j["slope"] = json{{"m_tilde", fit.m_tilde}, {"coeffs", vec(fit.a_coeffs)}, {"curve", vec(fit.a_curve)}};
  json link = basis_json(fit.second_basis, fit.b_second);
  link["k_star"] = fit.k_star;
  link["offset"] = number(fit.link_offset);
  j["link"] = link;
  j["first_stage"] = basis_json(fit.first_basis, fit.b_first);
  j["m"] = fit.m;
  j["objective"] = number(fit.objective_value);
  j["initial_objective"] = number(fit.initial_objective);
  j["iterations"] = fit.iterations;
  j["converged"] = fit.converged;
  j["linear"] = json{{"alpha", vec(fit.alpha_linear)}, {"beta", vec(fit.beta_linear)}};
  j["selection"] = json{{"m_tilde", selection_json(fit.m_tilde_selection)},
                        {"k_star", selection_json(fit.k_star_selection)}};
  return j.dump(1) + "\n";
}

ProfileFit fit_from_json(const std::string& text, const std::string& origin) {
  try {
    const json j = json::parse(text);
    if (!j.is_object() || j.value("format", "") != "pflsim-fit")
      fail(ErrorKind::Format, origin + ": not a pflsim fit artifact");
    if (j.at("version").get<int>() != 1)
      fail(ErrorKind::Format, origin + ": unsupported artifact version " + j.at("version").dump());
    ProfileFit fit;
    fit.grid = Grid(to_std(j.at("grid")));
    fit.mean_curve = to_vec(j.at("mean_curve"));
    fit.alpha = to_vec(j.at("alpha"));
    fit.beta = to_vec(j.at("beta"));
    const json& slope = j.at("slope");
    fit.m_tilde = slope.at("m_tilde").get<int>();
    fit.a_coeffs = to_vec(slope.at("coeffs"));
    fit.a_curve = to_vec(slope.at("curve"));
    const json& link = j.at("link");
    fit.second_basis = basis_from(link, fit.b_second);
    fit.k_star = link.at("k_star").get<int>();
    fit.link_offset = to_number(link.at("offset"));
    fit.first_basis = basis_from(j.at("first_stage"), fit.b_first);
    fit.m = j.at("m").get<int>();
    fit.objective_value = to_number(j.at("objective"));
    fit.initial_objective = to_number(j.at("initial_objective"));
    fit.iterations = j.at("iterations").get<int>();
    fit.converged = j.at("converged").get<bool>();
    fit.alpha_linear = to_vec(j.at("linear").at("alpha"));
    fit.beta_linear = to_vec(j.at("linear").at("beta"));
    fit.m_tilde_selection = selection_from(j.at("selection").at("m_tilde"));
    fit.k_star_selection = selection_from(j.at("selection").at("k_star"));

    const auto g = static_cast<Eigen::Index>(fit.grid.size());
    if (fit.mean_curve.size() != g || fit.a_curve.size() != g)
      fail(ErrorKind::Format, origin + ": curve lengths do not match the grid");
    if (fit.beta.size() < 2) fail(ErrorKind::Format, origin + ": index direction needs 2+ entries");
    return fit;
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, origin + ": " + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Format || e.kind() == ErrorKind::Io) throw;
    fail(ErrorKind::Format, origin + ": " + e.what());
  }
}

void save_fit(const ProfileFit& fit, const std::filesystem::path& path) {
  detail::write_file_atomic(path, fit_to_json(fit));
}

ProfileFit load_fit(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, path.string() + ": cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  return fit_from_json(buf.str(), path.string());
}

std::string format_fit_summary(const ProfileFit& fit) {
  std::ostringstream os;
  auto row = [&](const std::string& name, const Eigen::VectorXd& v) {
    os << std::left << std::setw(12) << name;
    for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? " " : "") << fixed(v(i));
    os << "\n";
  };
  row("alpha", fit.alpha);
  row("beta", fit.beta);
  os << std::left << std::setw(12) << "m" << fit.m << "\n";
  os << std::setw(12) << "m_tilde" << fit.m_tilde << "\n";
  os << std::setw(12) << "k_star" << fit.k_star << "\n";
  os << std::setw(12) << "objective" << fixed(fit.objective_value, 8) << " (start "
     << fixed(fit.initial_objective, 8) << ")\n";
  os << std::setw(12) << "iterations" << fit.iterations << "\n";
  os << std::setw(12) << "converged" << (fit.converged ? "yes" : "no") << "\n";
  return os.str();
}

std::string report_to_json(const McReport& report, bool timings) {
  const SimSpec& s = report.spec;
  const OptimizerConfig& e = s.estimator;
  json est{{"m", e.m},
           {"degree", e.degree},
           {"c0", e.c0},
           {"h0", e.h0 ? json(*e.h0) : json(nullptr)},
           {"subintervals", e.subintervals ? json(*e.subintervals) : json(nullptr)},
           {"rho0", e.rho0},
           {"tol_obj", e.tol_obj},
           {"tol_step", e.tol_step},
           {"max_iter", e.max_iter},
           {"ridge", e.ridge},
           {"restarts", e.restarts},
           {"refine", e.refine},
           {"seed", e.seed}};
  json spec{{"model", to_string(s.model)},
            {"n", s.n},
            {"delta", s.delta},
            {"replications", s.replications},
            {"seed", s.seed},
            {"test_size", s.test_size},
            {"grid_size", s.grid_size},
            {"sigma", s.sigma.value_or(default_sigma(s.model))},
            {"estimator", est}};
  json summary{{"failures", report.failures},
               {"converged", report.converged},
               {"parameters", parameter_json(report.parameters)},
               {"linear_parameters", parameter_json(report.linear_parameters)},
               {"mise_g", {{"mean", number(report.mise_g_mean)}, {"median", number(report.mise_g_median)}}},
               {"mise_a", {{"mean", number(report.mise_a_mean)}, {"median", number(report.mise_a_median)}}},
               {"mae",
                {{"mean", number(report.mae_mean)},
                 {"min", number(report.mae.min)},
                 {"q25", number(report.mae.q25)},
                 {"median", number(report.mae.median)},
                 {"q75", number(report.mae.q75)},
                 {"max", number(report.mae.max)}}}};
  json reps = json::array();
  for (const auto& r : report.records) {
    json rec{{"replication", r.replication}, {"seed", r.seed}, {"ok", r.ok}};
    if (r.ok) {
      rec["alpha"] = vec(r.alpha);
      rec["beta"] = vec(r.beta);
      rec["alpha_linear"] = vec(r.alpha_linear);
      rec["beta_linear"] = vec(r.beta_linear);
      rec["mise_g"] = number(r.mise_g);
      rec["mise_a"] = number(r.mise_a);
      rec["mae"] = number(r.mae);
      rec["m_tilde"] = r.m_tilde;
      rec["k_star"] = r.k_star;
      rec["iterations"] = r.iterations;
      rec["converged"] = r.converged;
    } else {
      rec["error"] = r.error;
    }
    if (timings) rec["runtime_seconds"] = r.runtime_seconds;
    reps.push_back(std::move(rec));
  }
  json j{{"format", "pflsim-report"}, {"version", 1}, {"spec", spec}, {"summary", summary},
         {"replications", reps}};
  return j.dump(1) + "\n";
}

std::string report_to_table(const McReport& report, bool timings) {
  const ModelShape shape = shape_of(report.spec.model);
  std::ostringstream os;
  os << "replication,seed,ok";
  for (const char* block : {"alpha", "beta", "alpha_linear", "beta_linear"}) {
    const Eigen::Index count = block[0] == 'a' ? shape.q : shape.d;
    for (Eigen::Index k = 1; k <= count; ++k) os << "," << block << k;
  }
  os << ",mise_g,mise_a,mae,m_tilde,k_star,iterations,converged";
  if (timings) os << ",runtime_seconds";
  os << ",error\n";
  for (const auto& r : report.records) {
    os << r.replication << "," << r.seed << "," << (r.ok ? 1 : 0);
    auto put = [&](const Eigen::VectorXd& v, Eigen::Index count) {
      for (Eigen::Index k = 0; k < count; ++k)
        os << "," << (r.ok && k < v.size() ? format_double(v(k)) : "");
    };
    put(r.alpha, shape.q);
    put(r.beta, shape.d);
    put(r.alpha_linear, shape.q);
    put(r.beta_linear, shape.d);
    if (r.ok) {
      os << "," << format_double(r.mise_g) << "," << format_double(r.mise_a) << ","
         << format_double(r.mae) << "," << r.m_tilde << "," << r.k_star << "," << r.iterations
         << "," << (r.converged ? 1 : 0);
    } else {
      os << ",,,,,,,";
    }
    if (timings) os << "," << format_double(r.runtime_seconds);
    os << "," << csv_quote(r.error) << "\n";
  }
  return os.str();
}

std::string format_report_summary(const McReport& report) {
  const SimSpec& s = report.spec;
  std::ostringstream os;
  os << "model " << to_string(s.model) << "  n " << s.n << "  delta " << s.delta
     << "  sigma " << s.sigma.value_or(default_sigma(s.model)) << "  replications "
     << s.replications << "  failures " << report.failures << "  converged "
     << report.converged << "\n";
  os << std::left << std::setw(10) << "parameter" << std::right << std::setw(10) << "truth"
     << std::setw(12) << "bias" << std::setw(11) << "sd" << std::setw(14) << "linear bias"
     << std::setw(11) << "linear sd" << "\n";
  for (std::size_t k = 0; k < report.parameters.size(); ++k) {
    const auto& p = report.parameters[k];
    os << std::left << std::setw(10) << p.name << std::right << std::setw(10) << fixed(p.truth, 4)
       << std::setw(12) << fixed(p.bias, 5) << std::setw(11) << fixed(p.sd, 5);
    if (k < report.linear_parameters.size()) {
      const auto& l = report.linear_parameters[k];
      os << std::setw(14) << fixed(l.bias, 5) << std::setw(11) << fixed(l.sd, 5);
    }
    os << "\n";
  }
  os << "MISE(g)   mean " << fixed(report.mise_g_mean) << "  median " << fixed(report.mise_g_median)
     << "\n";
  os << "MISE(a)   mean " << fixed(report.mise_a_mean) << "  median " << fixed(report.mise_a_median)
     << "\n";
  os << "MAE       mean " << fixed(report.mae_mean) << "  median " << fixed(report.mae.median)
     << "  q25 " << fixed(report.mae.q25) << "  q75 " << fixed(report.mae.q75) << "\n";
  return os.str();
}

void save_report(const McReport& report, const std::filesystem::path& json_path,
                 const std::filesystem::path& table_path, bool timings) {
  const std::string j = report_to_json(report, timings);
  const std::string t = report_to_table(report, timings);
  detail::write_file_atomic(json_path, j);
  detail::write_file_atomic(table_path, t);
}

void export_simulated(const SimulatedData& data, const std::filesystem::path& curves_path,
                      const std::filesystem::path& scalars_path) {
  std::ostringstream curves;
  const auto& points = data.curves.grid.points();
  for (std::size_t g = 0; g < points.size(); ++g) curves << (g ? "," : "") << format_double(points[g]);
  curves << "\n";
  for (Eigen::Index i = 0; i < data.curves.rows(); ++i) {
    for (Eigen::Index g = 0; g < data.curves.cols(); ++g)
      curves << (g ? "," : "") << format_double(data.curves.values(i, g));
    curves << "\n";
  }
  std::ostringstream scalars;
  scalars << "y";
  for (Eigen::Index k = 1; k <= data.w.cols(); ++k) scalars << ",w" << k;
  for (Eigen::Index k = 1; k <= data.z.cols(); ++k) scalars << ",z" << k;
  scalars << "\n";
  for (Eigen::Index i = 0; i < data.y.size(); ++i) {
    scalars << format_double(data.y(i));
    for (Eigen::Index k = 0; k < data.w.cols(); ++k) scalars << "," << format_double(data.w(i, k));
    for (Eigen::Index k = 0; k < data.z.cols(); ++k) scalars << "," << format_double(data.z(i, k));
    scalars << "\n";
  }
  detail::write_file_atomic(curves_path, curves.str());
  detail::write_file_atomic(scalars_path, scalars.str());
}

void save_predictions(const Eigen::Ref<const Eigen::VectorXd>& values,
                      const std::filesystem::path& path) {
  std::ostringstream os;
  os << "prediction\n";
  for (Eigen::Index i = 0; i < values.size(); ++i) os << format_double(values(i)) << "\n";
  detail::write_file_atomic(path, os.str());
}

}  // namespace pflsim
