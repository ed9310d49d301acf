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

#include "covflow/bench.hpp"

#include <memory>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "covflow/dynamics.hpp"
#include "covflow/tsp_baseline.hpp"

namespace covflow {

const char* to_string(BenchMethod m) {
  switch (m) {
    case BenchMethod::kSteinPlan:
      return "stein";
    case BenchMethod::kSinkhornPlan:
      return "sinkhorn";
    case BenchMethod::kTspBaseline:
      return "tsp";
  }
  return "?";
}

BenchMethod bench_method_from_string(std::string_view name) {
  if (name == "stein") return BenchMethod::kSteinPlan;
  if (name == "sinkhorn") return BenchMethod::kSinkhornPlan;
  if (name == "tsp") return BenchMethod::kTspBaseline;
  throw InvalidArgument("unknown bench method '" + std::string(name) + "'");
}

void BenchSpec::validate() const {
  if (horizons.empty()) throw InvalidArgument("bench: horizon list is empty");
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    if (horizons[i] < 1) throw InvalidArgument("bench: horizons must be positive");
    if (i > 0 && horizons[i] <= horizons[i - 1]) {
      throw InvalidArgument("bench: horizons must be strictly increasing");
    }
  }
  if (repetitions < 1) throw InvalidArgument("bench: repetitions must be >= 1");
  if (workers.empty()) throw InvalidArgument("bench: worker list is empty");
  if (!(horizon_seconds > 0.0)) throw InvalidArgument("bench: horizon_seconds must be positive");
}

Vec default_initial_state(const DynamicsModel& model) {
  Vec s0 = Vec::Zero(model.state_dim());
  if (model.name() == "aircraft_3d") {
    s0 << 0.5, 0.5, 0.5, 0.0, 0.0, 0.2;
  } else {
    s0.head(model.workspace_dim()).setConstant(0.5);
  }
  return s0;
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string error_tag(const std::exception& e) {
  if (dynamic_cast<const PlanError*>(&e)) return "error:plan";
  if (dynamic_cast<const RolloutDivergence*>(&e)) return "error:rollout";
  if (dynamic_cast<const NumericalInstability*>(&e)) return "error:lqr";
  if (dynamic_cast<const FlowError*>(&e)) return "error:flow";
  if (dynamic_cast<const InvalidArgument*>(&e)) return "error:input";
  return "error:other";
}

}  // namespace

void write_bench_header(std::ostream& os) { os << kBenchCsvHeader << '\n'; }

void write_bench_row(std::ostream& os, const BenchRecord& r) {
  os << r.method << ',' << r.model << ',' << r.horizon << ',' << r.rep << ',' << r.workers << ','
     << r.seed << ',' << fmt_double(r.t_total_s) << ',' << fmt_double(r.t_flow_s) << ','
     << fmt_double(r.t_lqr_s) << ',' << fmt_double(r.t_rollout_s) << ','
     << fmt_double(r.coverage) << ',' << r.status << '\n';
  os.flush();
}

std::vector<BenchRecord> read_bench_csv(std::istream& is) {
  std::vector<BenchRecord> out;
  std::string line;
  if (!std::getline(is, line) || line != kBenchCsvHeader) {
    throw InvalidArgument("bench CSV: missing or unexpected header");
  }
  int row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 12) {
      throw InvalidArgument("bench CSV: row " + std::to_string(row) + " has " +
                           std::to_string(cells.size()) + " columns");
    }
    try {
      BenchRecord r;
      r.method = cells[0];
      r.model = cells[1];
      r.horizon = std::stoll(cells[2]);
      r.rep = std::stoi(cells[3]);
      r.workers = std::stoi(cells[4]);
      r.seed = std::stoull(cells[5]);
      r.t_total_s = std::stod(cells[6]);
      r.t_flow_s = std::stod(cells[7]);
      r.t_lqr_s = std::stod(cells[8]);
      r.t_rollout_s = std::stod(cells[9]);
      r.coverage = std::stod(cells[10]);
      r.status = cells[11];
      out.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw InvalidArgument("bench CSV: malformed value in row " + std::to_string(row));
    }
  }
  return out;
}

std::vector<BenchRecord> run_bench(const BenchSpec& spec, const RecordSink& sink) {
  spec.validate();
  const DynamicsModel model = model_by_name(spec.model);
  const ReferenceDistribution q =
      spec.reference ? *spec.reference : ReferenceDistribution(coverage_fixture(model.workspace_dim()));
  const Vec s0 = spec.s0 ? *spec.s0 : default_initial_state(model);

  // One target sample set scores every run.
  std::shared_ptr<const CoverageScorer> scorer = spec.plan.scorer;
  if (!scorer) {
    scorer = std::make_shared<CoverageScorer>(
        metric_samples(q, spec.plan.metric_samples, spec.plan.seed), 0);
  }

  std::vector<BenchRecord> records;
  for (const Index horizon : spec.horizons) {
    if (spec.method == BenchMethod::kTspBaseline && horizon > spec.tsp_horizon_cap &&
        !spec.allow_large_tsp) {
      continue;
    }
    const double dt = spec.horizon_seconds / static_cast<double>(horizon);
    for (const int workers : spec.workers) {
      PlanConfig cfg = spec.plan;
      cfg.method = spec.method == BenchMethod::kSinkhornPlan ? FlowMethod::kSinkhorn : FlowMethod::kStein;
      cfg.workers = workers;
      cfg.metric_every = 0;
      cfg.scorer = scorer;

      auto run_once = [&](int rep) {
        BenchRecord r;
        r.method = to_string(spec.method);
        r.model = spec.model;
        r.horizon = horizon;
        r.rep = rep;
        r.workers = workers;
        r.seed = cfg.seed.value;
        try {
          if (spec.method == BenchMethod::kTspBaseline) {
            const BaselineResult res =
                run_tsp_baseline(model, q, horizon, dt, cfg.seed, spec.tsp_max_passes, workers);
            r.t_total_s = res.times.total;
            r.t_flow_s = res.times.flow;
            r.t_lqr_s = res.times.lqr;
            r.t_rollout_s = res.times.rollout;
            r.coverage = (*cfg.scorer)(res.trajectory.states, model);
          } else {
            const PlanResult res = plan(model, q, Discretization{dt, horizon, s0}, cfg);
            r.t_total_s = res.times.total;
            r.t_flow_s = res.times.flow;
            r.t_lqr_s = res.times.lqr;
            r.t_rollout_s = res.times.rollout;
            r.coverage = res.final_coverage;
          }
        } catch (const std::exception& e) {
          r.status = error_tag(e);
          r.t_total_s = r.t_flow_s = r.t_lqr_s = r.t_rollout_s = 0.0;
          r.coverage = std::nan("");
        }
        return r;
      };

      if (spec.warmup) (void)run_once(-1);
      for (int rep = 0; rep < spec.repetitions; ++rep) {
        BenchRecord r = run_once(rep);
        if (sink) sink(r);
        records.push_back(std::move(r));
      }
    }
  }
  return records;
}

ScalingFit fit_power_law(const std::vector<double>& sizes, const std::vector<double>& times) {
  if (sizes.size() != times.size()) throw InvalidArgument("fit: size/time length mismatch");
  std::vector<double> sorted = sizes;
  std::sort(sorted.begin(), sorted.end());
  if (std::unique(sorted.begin(), sorted.end()) - sorted.begin() < 4) {
    throw InvalidArgument("fit: need at least 4 distinct horizons");
  }
  const std::size_t k = sizes.size();
  std::vector<double> lx(k), ly(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (!(sizes[i] > 0.0) || !(times[i] > 0.0)) {
      throw InvalidArgument("fit: sizes and times must be positive");
    }
    lx[i] = std::log(sizes[i]);
    ly[i] = std::log(times[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(k);
  my /= static_cast<double>(k);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx <= 0.0) throw InvalidArgument("fit: zero variance in log horizon");
  ScalingFit fit;
  fit.points = static_cast<int>(k);
  fit.alpha = sxy / sxx;
  fit.intercept = my - fit.alpha * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double r = ly[i] - (fit.intercept + fit.alpha * lx[i]);
    sse += r * r;
  }
  const double dof = static_cast<double>(k) - 2.0;
  const double se = std::sqrt(sse / dof / sxx);
  const double tq = boost::math::quantile(boost::math::students_t(dof), 0.975);
  fit.ci_low = fit.alpha - tq * se;
  fit.ci_high = fit.alpha + tq * se;
  return fit;
}

namespace {

double phase_time(const BenchRecord& r, BenchPhase phase) {
  switch (phase) {
    case BenchPhase::kTotal:
      return r.t_total_s;
    case BenchPhase::kFlow:
      return r.t_flow_s;
    case BenchPhase::kLqr:
      return r.t_lqr_s;
    case BenchPhase::kRollout:
      return r.t_rollout_s;
  }
  return 0.0;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

ScalingFit fit_scaling(const std::vector<BenchRecord>& records, std::string_view method,
                       BenchPhase phase, int workers) {
  std::map<Index, std::vector<double>> by_horizon;
  for (const auto& r : records) {
    if (r.method != method || r.status != "ok") continue;
    if (workers >= 0 && r.workers != workers) continue;
    by_horizon[r.horizon].push_back(phase_time(r, phase));
  }
  std::vector<double> sizes, times;
  for (const auto& [h, ts] : by_horizon) {
    sizes.push_back(static_cast<double>(h));
    times.push_back(median(ts));
  }
  return fit_power_law(sizes, times);
}

std::string render_svg(const std::vector<BenchRecord>& records) {
  std::map<std::string, std::map<Index, std::vector<double>>> series;
  for (const auto& r : records) {
    if (r.status != "ok" || !(r.t_total_s > 0.0)) continue;
    series[r.method + " (workers=" + std::to_string(r.workers) + ")"][r.horizon].push_back(r.t_total_s);
  }
  constexpr double kW = 640, kH = 420, kPad = 60;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  std::map<std::string, std::vector<std::pair<double, double>>> pts;
  for (const auto& [name, hs] : series) {
    for (const auto& [h, ts] : hs) {
      const double x = std::log10(static_cast<double>(h));
      const double y = std::log10(median(ts));
      pts[name].emplace_back(x, y);
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  if (xmax <= xmin) xmax = xmin + 1.0;
  if (ymax <= ymin) ymax = ymin + 1.0;
  auto sx = [&](double x) { return kPad + (x - xmin) / (xmax - xmin) * (kW - 2 * kPad); };
  auto sy = [&](double y) { return kH - kPad - (y - ymin) / (ymax - ymin) * (kH - 2 * kPad); };

  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << kPad << "\" y1=\"" << kH - kPad << "\" x2=\"" << kW - kPad << "\" y2=\""
      << kH - kPad << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << kPad << "\" y1=\"" << kPad << "\" x2=\"" << kPad << "\" y2=\"" << kH - kPad
      << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 15
      << "\" text-anchor=\"middle\">log10 horizon (time steps)</text>\n";
  svg << "<text x=\"15\" y=\"" << kH / 2 << "\" transform=\"rotate(-90 15 " << kH / 2
      << ")\" text-anchor=\"middle\">log10 median total time (s)</text>\n";
  int idx = 0;
  for (const auto& [name, p] : pts) {
    const char* color = kColors[idx % 6];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& [x, y] : p) svg << sx(x) << ',' << sy(y) << ' ';
    svg << "\"/>\n";
    for (const auto& [x, y] : p) {
      svg << "<circle cx=\"" << sx(x) << "\" cy=\"" << sy(y) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    svg << "<text x=\"" << kPad + 10 << "\" y=\"" << kPad + 16 * idx << "\" fill=\"" << color << "\">"
        << name << "</text>\n";
    ++idx;
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace covflow
