// Copyright 2026 The covflow Authors
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

#include "covflow/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "covflow/dynamics.hpp"

namespace covflow {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(s);
  while (std::getline(ss, cell, sep)) out.push_back(trim(cell));
  return out;
}

std::optional<double> to_double(const std::string& s) {
  const std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

std::optional<long long> to_int(const std::string& s) {
  const std::string t = trim(s);
  long long v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

std::string format_config_error(const std::vector<ConfigIssue>& issues) {
  std::ostringstream os;
  os << "invalid configuration:";
  for (const auto& i : issues) {
    os << "\n  " << i.key << ": " << i.message;
    if (!i.suggestion.empty()) os << " (did you mean '" << i.suggestion << "'?)";
  }
  return os.str();
}

// Collects issues while reading typed values out of the key map.
class Reader {
 public:
  Reader(std::map<std::string, std::string> values, std::vector<ConfigIssue>& issues)
      : values_(std::move(values)), issues_(issues) {}

  const std::string* raw(const std::string& key) const {
    auto it = values_.find(key);
    return it == values_.end() ? nullptr : &it->second;
  }

  void number(const std::string& key, double& out, double lo, double hi, bool lo_open = false) {
    const std::string* v = raw(key);
    if (!v) return;
    auto d = to_double(*v);
    if (!d) return fail(key, "expected a number, got '" + *v + "'");
    if ((lo_open ? !(*d > lo) : !(*d >= lo)) || !(*d <= hi)) {
      return fail(key, "value " + *v + " out of range");
    }
    out = *d;
  }

  template <typename Int>
  void integer(const std::string& key, Int& out, long long lo, long long hi) {
    const std::string* v = raw(key);
    if (!v) return;
    auto i = to_int(*v);
    if (!i) return fail(key, "expected an integer, got '" + *v + "'");
    if (*i < lo || *i > hi) return fail(key, "value " + *v + " out of range");
    out = static_cast<Int>(*i);
  }

  void boolean(const std::string& key, bool& out) {
    const std::string* v = raw(key);
    if (!v) return;
    if (*v == "true" || *v == "1" || *v == "yes") {
      out = true;
    } else if (*v == "false" || *v == "0" || *v == "no") {
      out = false;
    } else {
      fail(key, "expected true or false, got '" + *v + "'");
    }
  }

  std::optional<std::vector<double>> numbers(const std::string& key) {
    const std::string* v = raw(key);
    if (!v) return std::nullopt;
    std::vector<double> out;
    for (const auto& cell : split(*v, ',')) {
      auto d = to_double(cell);
      if (!d) {
        fail(key, "expected a comma-separated list of numbers");
        return std::nullopt;
      }
      out.push_back(*d);
    }
    if (out.empty()) {
      fail(key, "empty list");
      return std::nullopt;
    }
    return out;
  }

  void fail(const std::string& key, const std::string& message) {
    issues_.push_back({key, message, ""});
  }

 private:
  std::map<std::string, std::string> values_;
  std::vector<ConfigIssue>& issues_;
};

}  // namespace

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : Error(format_config_error(issues)), issues_(std::move(issues)) {}

std::vector<std::string> known_config_keys() {
  return {"model",
          "method",
          "dt",
          "horizon",
          "s0",
          "reference.type",
          "reference.weights",
          "reference.means",
          "reference.covariances",
          "reference.csv",
          "stein.bandwidth",
          "stein.parallel_chunk",
          "sinkhorn.omega",
          "sinkhorn.max_iters",
          "sinkhorn.tol",
          "sinkhorn.target_samples",
          "lqr.q_weight",
          "lqr.r_weight",
          "optimizer.eta",
          "optimizer.max_iterations",
          "optimizer.tol",
          "optimizer.seed",
          "optimizer.init",
          "optimizer.init_scale",
          "optimizer.control_min",
          "optimizer.control_max",
          "optimizer.metric_every",
          "optimizer.metric_samples",
          "runtime.workers",
          "output.dir",
          "tsp.max_passes",
          "bench.method",
          "bench.horizons",
          "bench.repetitions",
          "bench.workers",
          "bench.horizon_seconds",
          "bench.allow_large_tsp",
          "bench.warmup"};
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

Points parse_point_list(const std::string& text) {
  std::vector<std::vector<double>> rows;
  for (const auto& row : split(text, ';')) {
    if (row.empty()) continue;
    std::vector<double> vals;
    for (const auto& cell : split(row, ',')) {
      auto d = to_double(cell);
      if (!d) throw InvalidArgument("malformed number '" + cell + "'");
      vals.push_back(*d);
    }
    if (!rows.empty() && vals.size() != rows.front().size()) {
      throw InvalidArgument("rows have different lengths");
    }
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw InvalidArgument("empty point list");
  Points p(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) p(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  }
  return p;
}

Points read_points_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("file not found: " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    std::vector<double> vals;
    bool numeric = true;
    for (const auto& cell : split(line, ',')) {
      auto d = to_double(cell);
      if (!d) {
        numeric = false;
        break;
      }
      vals.push_back(*d);
    }
    if (!numeric) {
      if (rows.empty() && line_no == 1) continue;  // header
      throw InvalidArgument(path.string() + ": malformed row " + std::to_string(line_no));
    }
    if (!rows.empty() && vals.size() != rows.front().size()) {
      throw InvalidArgument(path.string() + ": inconsistent column count at row " +
                            std::to_string(line_no));
    }
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw InvalidArgument(path.string() + ": no points");
  Points p(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) p(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  }
  return p;
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  std::vector<ConfigIssue> issues;
  std::map<std::string, std::string> values;
  const auto known = known_config_keys();

  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      issues.push_back({"line " + std::to_string(line_no), "expected 'key = value'", ""});
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      std::string best;
      std::size_t best_d = std::string::npos;
      for (const auto& k : known) {
        const std::size_t d = edit_distance(key, k);
        if (d < best_d) {
          best_d = d;
          best = k;
        }
      }
      issues.push_back({key, "unknown key", best_d <= 3 ? best : ""});
      continue;
    }
    if (values.count(key)) {
      issues.push_back({key, "duplicate key", ""});
      continue;
    }
    values[key] = value;
  }

  RunConfig cfg;
  Reader r(values, issues);

  if (const auto* v = r.raw("model")) {
    const auto names = model_names();
    if (std::find(names.begin(), names.end(), *v) == names.end()) {
      r.fail("model", "unknown model '" + *v + "'");
    } else {
      cfg.model = *v;
    }
  }
  if (const auto* v = r.raw("method")) {
    if (*v == "stein") {
      cfg.method = FlowMethod::kStein;
    } else if (*v == "sinkhorn") {
      cfg.method = FlowMethod::kSinkhorn;
    } else {
      r.fail("method", "expected 'stein' or 'sinkhorn'");
    }
  }
  r.number("dt", cfg.dt, 0.0, 10.0, true);
  r.integer("horizon", cfg.horizon, 1, 10'000'000);
  if (auto s0 = r.numbers("s0")) cfg.s0 = Eigen::Map<const Vec>(s0->data(), static_cast<Index>(s0->size()));

  PlanConfig& plan = cfg.plan;
  if (const auto* v = r.raw("stein.bandwidth")) {
    if (*v == "median") {
      plan.stein.bandwidth = Bandwidth::median();
    } else if (auto h = to_double(*v); h && *h > 0.0) {
      plan.stein.bandwidth = Bandwidth::fixed(*h);
    } else {
      r.fail("stein.bandwidth", "expected 'median' or a positive number");
    }
  }
  r.integer("stein.parallel_chunk", plan.stein.parallel_chunk, 1, 1'000'000'000);
  if (const auto* v = r.raw("sinkhorn.omega")) {
    if (*v == "auto") {
      plan.sinkhorn.omega.reset();
    } else if (auto w = to_double(*v); w && *w > 0.0) {
      plan.sinkhorn.omega = *w;
    } else {
      r.fail("sinkhorn.omega", "expected 'auto' or a positive number");
    }
  }
  r.integer("sinkhorn.max_iters", plan.sinkhorn.max_iters, 1, 100'000'000);
  r.number("sinkhorn.tol", plan.sinkhorn.tol, 0.0, 1.0, true);
  r.integer("sinkhorn.target_samples", plan.target_samples, 0, 10'000'000);
  r.number("lqr.q_weight", plan.q_weight, 0.0, 1e12, true);
  r.number("lqr.r_weight", plan.r_weight, 0.0, 1e12, true);
  r.number("optimizer.eta", plan.step_size, 0.0, 1e6, true);
  r.integer("optimizer.max_iterations", plan.max_iterations, 1, 100'000'000);
  r.number("optimizer.tol", plan.convergence_tol, 0.0, 1e12);
  if (const auto* v = r.raw("optimizer.seed")) {
    std::uint64_t seed = 0;
    const auto res = std::from_chars(v->data(), v->data() + v->size(), seed);
    if (res.ec != std::errc() || res.ptr != v->data() + v->size()) {
      r.fail("optimizer.seed", "expected a non-negative integer");
    } else {
      plan.seed = RngSeed{seed};
    }
  }
  double init_scale = plan.initial_controls.scale;
  r.number("optimizer.init_scale", init_scale, 0.0, 1e6);
  if (const auto* v = r.raw("optimizer.init")) {
    if (*v == "zeros") {
      plan.initial_controls = InitialControls::zeros();
    } else if (*v != "random") {
      r.fail("optimizer.init", "expected 'zeros' or 'random'");
    }
  }
  if (plan.initial_controls.kind == InitialControls::Kind::kRandomSmall) {
    plan.initial_controls.scale = init_scale;
  }
  const auto cmin = r.numbers("optimizer.control_min");
  const auto cmax = r.numbers("optimizer.control_max");
  if (cmin.has_value() != cmax.has_value()) {
    r.fail(cmin ? "optimizer.control_max" : "optimizer.control_min",
           "control_min and control_max must be given together");
  } else if (cmin && cmax) {
    if (cmin->size() != cmax->size()) {
      r.fail("optimizer.control_max", "length differs from optimizer.control_min");
    } else {
      ControlClamp clamp{Eigen::Map<const Vec>(cmin->data(), static_cast<Index>(cmin->size())),
                         Eigen::Map<const Vec>(cmax->data(), static_cast<Index>(cmax->size()))};
      if ((clamp.lower.array() > clamp.upper.array()).any()) {
        r.fail("optimizer.control_min", "lower bound exceeds upper bound");
      } else {
        plan.control_clamp = clamp;
      }
    }
  }
  r.integer("optimizer.metric_every", plan.metric_every, 0, 100'000'000);
  r.integer("optimizer.metric_samples", plan.metric_samples, 1, 10'000'000);
  if (r.raw("runtime.workers")) {
    int w = 0;
    r.integer("runtime.workers", w, 0, 4096);
    cfg.workers = w;
  }
  if (const auto* v = r.raw("output.dir")) cfg.output_dir = *v;
  r.integer("tsp.max_passes", cfg.tsp_max_passes, 1, 100'000'000);

  if (const auto* v = r.raw("bench.method")) {
    try {
      cfg.bench_method = bench_method_from_string(*v);
    } catch (const InvalidArgument&) {
      r.fail("bench.method", "expected 'stein', 'sinkhorn' or 'tsp'");
    }
  }
  if (auto hs = r.numbers("bench.horizons")) {
    cfg.bench_horizons.clear();
    bool ok = true;
    for (double h : *hs) {
      if (h < 1 || h != std::floor(h)) ok = false;
      cfg.bench_horizons.push_back(static_cast<Index>(h));
    }
    for (std::size_t i = 1; i < cfg.bench_horizons.size(); ++i) {
      if (cfg.bench_horizons[i] <= cfg.bench_horizons[i - 1]) ok = false;
    }
    if (!ok) r.fail("bench.horizons", "expected strictly increasing positive integers");
  }
  r.integer("bench.repetitions", cfg.bench_repetitions, 1, 1'000'000);
  if (auto ws = r.numbers("bench.workers")) {
    cfg.bench_workers.clear();
    for (double w : *ws) {
      if (w < 0 || w != std::floor(w)) {
        r.fail("bench.workers", "expected non-negative integers");
        break;
      }
      cfg.bench_workers.push_back(static_cast<int>(w));
    }
  }
  r.number("bench.horizon_seconds", cfg.bench_horizon_seconds, 0.0, 1e6, true);
  r.boolean("bench.allow_large_tsp", cfg.bench_allow_large_tsp);
  r.boolean("bench.warmup", cfg.bench_warmup);

  // Model-dependent checks.
  std::optional<DynamicsModel> model;
  try {
    model = model_by_name(cfg.model);
  } catch (const InvalidArgument&) {
  }
  if (model && cfg.s0 && cfg.s0->size() != model->state_dim()) {
    r.fail("s0", "expected " + std::to_string(model->state_dim()) + " components for " + cfg.model);
  }
  if (model && cfg.plan.control_clamp && cfg.plan.control_clamp->lower.size() != model->control_dim()) {
    r.fail("optimizer.control_min", "expected " + std::to_string(model->control_dim()) + " components");
  }

  const std::string type = r.raw("reference.type") ? *r.raw("reference.type") : "fixture";
  const int wdim = model ? model->workspace_dim() : 2;
  try {
    if (type == "fixture") {
      if (model && wdim != 2 && wdim != 3) {
        r.fail("reference.type", "fixture exists only for 2D and 3D workspaces");
      } else {
        cfg.reference = ReferenceDistribution(coverage_fixture(wdim));
        cfg.reference_description = "fixture";
      }
    } else if (type == "mixture") {
      const auto weights = r.numbers("reference.weights");
      const std::string* means = r.raw("reference.means");
      const std::string* covs = r.raw("reference.covariances");
      if (!weights || !means || !covs) {
        r.fail("reference.type",
               "mixture needs reference.weights, reference.means and reference.covariances");
      } else {
        const Points mu = parse_point_list(*means);
        const Points cv = parse_point_list(*covs);
        const Index d = mu.cols();
        std::vector<Mat> sigmas;
        for (Index k = 0; k < cv.rows(); ++k) {
          if (cv.cols() == 1) {
            sigmas.push_back(cv(k, 0) * Mat::Identity(d, d));
          } else if (cv.cols() == d * d) {
            sigmas.push_back(Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                            Eigen::RowMajor>>(cv.row(k).data(), d, d));
          } else {
            throw InvalidArgument("each covariance needs 1 (isotropic) or d*d entries");
          }
        }
        cfg.reference = ReferenceDistribution(GaussianMixture(*weights, mu, sigmas));
        cfg.reference_description = "mixture";
      }
    } else if (type == "csv") {
      const std::string* path = r.raw("reference.csv");
      if (!path) {
        r.fail("reference.csv", "required when reference.type = csv");
      } else {
        std::filesystem::path p = *path;
        if (p.is_relative()) p = base_dir / p;
        if (!std::filesystem::exists(p)) {
          r.fail("reference.csv", "file not found: " + p.string());
        } else {
          cfg.reference = ReferenceDistribution(PointCloud(read_points_csv(p)));
          cfg.reference_description = "csv:" + p.string();
        }
      }
    } else {
      r.fail("reference.type", "expected 'fixture', 'mixture' or 'csv'");
    }
  } catch (const InvalidArgument& e) {
    r.fail("reference." + (type == "csv" ? std::string("csv") : std::string("means")), e.what());
  }
  if (model && cfg.reference && cfg.reference->dim() != wdim) {
    r.fail("reference.type", "reference dimension " + std::to_string(cfg.reference->dim()) +
                                 " does not match the " + cfg.model + " workspace (" +
                                 std::to_string(wdim) + ")");
  }
  if (cfg.method == FlowMethod::kStein && cfg.reference && !cfg.reference->is_score_based()) {
    r.fail("method", "stein needs a mixture or fixture reference, not a point cloud");
  }
  if (cfg.bench_method == BenchMethod::kSteinPlan && r.raw("bench.method") && cfg.reference &&
      !cfg.reference->is_score_based()) {
    r.fail("bench.method", "stein needs a mixture or fixture reference, not a point cloud");
  }

  if (!issues.empty()) throw ConfigError(std::move(issues));
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({{"--config", "file not found: " + path.string(), ""}});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path().empty() ? "." : path.parent_path());
}

}  // namespace covflow
