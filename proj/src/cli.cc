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

#include "covflow/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "covflow/bench.hpp"
#include "covflow/config.hpp"
#include "covflow/tsp_baseline.hpp"

namespace covflow {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::vector<std::string> state_labels(const DynamicsModel& model) {
  if (model.name() == "diff_drive") return {"x", "y", "theta"};
  if (model.name() == "aircraft_3d") return {"x", "y", "z", "psi", "gamma", "speed"};
  if (model.name() == "single_integrator_2d") return {"x", "y"};
  std::vector<std::string> out;
  for (int i = 0; i < model.state_dim(); ++i) out.push_back("s" + std::to_string(i));
  return out;
}

std::vector<std::string> control_labels(const DynamicsModel& model) {
  if (model.name() == "diff_drive") return {"v", "omega"};
  if (model.name() == "aircraft_3d") return {"psi_rate", "gamma_rate", "accel"};
  if (model.name() == "single_integrator_2d") return {"ux", "uy"};
  std::vector<std::string> out;
  for (int i = 0; i < model.control_dim(); ++i) out.push_back("u" + std::to_string(i));
  return out;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string header_line(const DynamicsModel& model) {
  std::string h = "t";
  for (const auto& s : state_labels(model)) h += "," + s;
  for (const auto& c : control_labels(model)) h += "," + c;
  return h;
}

}  // namespace

void write_trajectory_csv(std::ostream& os, const DynamicsModel& model, const Trajectory& traj) {
  os << header_line(model) << '\n';
  for (Index k = 0; k < traj.states.rows(); ++k) {
    os << fmt(traj.dt * static_cast<double>(k));
    for (Index c = 0; c < traj.states.cols(); ++c) os << ',' << fmt(traj.states(k, c));
    for (Index c = 0; c < traj.controls.cols(); ++c) {
      os << ',';
      if (k < traj.controls.rows()) os << fmt(traj.controls(k, c));
    }
    os << '\n';
  }
}

Points read_trajectory_states(std::istream& is, const DynamicsModel& model) {
  std::string line;
  if (!std::getline(is, line)) throw InvalidArgument("trajectory CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header_line(model)) {
    throw InvalidArgument("trajectory CSV header does not match model " + model.name() +
                          " (expected '" + header_line(model) + "')");
  }
  const Index sd = model.state_dim();
  std::vector<Vec> rows;
  int row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (static_cast<Index>(cells.size()) < 1 + sd) {
      throw InvalidArgument("malformed trajectory CSV row " + std::to_string(row));
    }
    Vec s(sd);
    for (Index c = 0; c < sd; ++c) {
      try {
        std::size_t used = 0;
        s(c) = std::stod(cells[static_cast<std::size_t>(c + 1)], &used);
        if (used != cells[static_cast<std::size_t>(c + 1)].size()) throw std::invalid_argument("x");
      } catch (const std::logic_error&) {
        throw InvalidArgument("malformed trajectory CSV row " + std::to_string(row));
      }
    }
    rows.push_back(std::move(s));
  }
  if (rows.size() < 2) throw InvalidArgument("trajectory CSV needs at least two state rows");
  Points states(static_cast<Index>(rows.size()), sd);
  for (std::size_t i = 0; i < rows.size(); ++i) states.row(static_cast<Index>(i)) = rows[i].transpose();
  return states;
}

namespace {

struct CommonFlags {
  std::string config;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  bool plot = false;
  bool force = false;
  std::string trajectory;
};

void print_error(std::ostream& err, const std::string& kind, const std::string& message,
                 json extra = json::object()) {
  json j = {{"error", kind}, {"message", message}};
  j.update(extra);
  err << j.dump() << '\n';
}

json issues_json(const ConfigError& e) {
  json arr = json::array();
  for (const auto& i : e.issues()) {
    json item = {{"key", i.key}, {"message", i.message}};
    if (!i.suggestion.empty()) item["suggestion"] = i.suggestion;
    arr.push_back(item);
  }
  return {{"issues", arr}};
}

int resolve_cli_workers(const CommonFlags& flags, const RunConfig& cfg) {
  if (flags.workers) return *flags.workers;
  if (const char* env = std::getenv(kWorkersEnv)) {
    try {
      return std::stoi(env);
    } catch (const std::logic_error&) {
    }
  }
  return cfg.workers.value_or(0);
}

// Throws ConfigError if any target exists and --force was not given.
void guard_outputs(const fs::path& dir, const std::vector<std::string>& files, bool force) {
  fs::create_directories(dir);
  if (force) return;
  std::vector<ConfigIssue> issues;
  for (const auto& f : files) {
    if (fs::exists(dir / f)) {
      issues.push_back({"--out", "refusing to overwrite " + (dir / f).string() + " (use --force)", ""});
    }
  }
  if (!issues.empty()) throw ConfigError(issues);
}

json history_json(const PlanResult& res) {
  json arr = json::array();
  for (const auto& h : res.history) {
    json item = {{"iteration", h.iteration},     {"flow_norm", h.flow_norm},
                 {"lqr_cost", h.lqr_cost},       {"t_flow_s", h.t_flow},
                 {"t_lqr_s", h.t_lqr},           {"t_rollout_s", h.t_rollout},
                 {"flow_converged", h.flow_converged}};
    item["coverage"] = h.coverage ? json(*h.coverage) : json(nullptr);
    arr.push_back(item);
  }
  return arr;
}

json times_json(const PhaseTimes& t) {
  return {{"total_s", t.total}, {"flow_s", t.flow}, {"lqr_s", t.lqr}, {"rollout_s", t.rollout}};
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

int cmd_plan(const CommonFlags& flags, RunConfig cfg, std::ostream& out) {
  const DynamicsModel model = model_by_name(cfg.model);
  const fs::path dir = flags.out_dir.empty() ? cfg.output_dir : fs::path(flags.out_dir);
  guard_outputs(dir, {"trajectory.csv", "metrics.json"}, flags.force);
  PlanConfig pc = cfg.plan;
  pc.method = cfg.method;
  pc.workers = resolve_cli_workers(flags, cfg);
  if (flags.seed) pc.seed = RngSeed{*flags.seed};
  const Vec s0 = cfg.s0 ? *cfg.s0 : default_initial_state(model);
  const PlanResult res = plan(model, *cfg.reference, Discretization{cfg.dt, cfg.horizon, s0}, pc);

  std::ostringstream csv;
  write_trajectory_csv(csv, model, res.trajectory);
  write_file(dir / "trajectory.csv", csv.str());
  json metrics = {{"command", "plan"},
                  {"model", cfg.model},
                  {"method", to_string(pc.method)},
                  {"reference", cfg.reference_description},
                  {"horizon", cfg.horizon},
                  {"dt", cfg.dt},
                  {"seed", pc.seed.value},
                  {"workers", pc.workers},
                  {"iterations", res.iterations},
                  {"converged", res.converged},
                  {"final_coverage", res.final_coverage},
                  {"times", times_json(res.times)},
                  {"history", history_json(res)}};
  write_file(dir / "metrics.json", metrics.dump(2) + "\n");
  out << json{{"coverage", res.final_coverage}, {"iterations", res.iterations}}.dump() << '\n';
  return kExitOk;
}

int cmd_baseline(const CommonFlags& flags, RunConfig cfg, std::ostream& out) {
  const DynamicsModel model = model_by_name(cfg.model);
  const fs::path dir = flags.out_dir.empty() ? cfg.output_dir : fs::path(flags.out_dir);
  guard_outputs(dir, {"trajectory.csv", "metrics.json"}, flags.force);
  const int workers = resolve_cli_workers(flags, cfg);
  const RngSeed seed = flags.seed ? RngSeed{*flags.seed} : cfg.plan.seed;
  const BaselineResult res =
      run_tsp_baseline(model, *cfg.reference, cfg.horizon, cfg.dt, seed, cfg.tsp_max_passes, workers);
  const Points target = metric_samples(*cfg.reference, cfg.plan.metric_samples, seed);
  const double coverage =
      coverage_metric(res.trajectory.states, model, target, metric_config(target, workers));

  std::ostringstream csv;
  write_trajectory_csv(csv, model, res.trajectory);
  write_file(dir / "trajectory.csv", csv.str());
  json metrics = {{"command", "baseline-tsp"},
                  {"model", cfg.model},
                  {"method", "tsp"},
                  {"reference", cfg.reference_description},
                  {"horizon", cfg.horizon},
                  {"dt", cfg.dt},
                  {"seed", seed.value},
                  {"tour_length", res.tour.length},
                  {"tour_passes", res.tour.passes},
                  {"final_coverage", coverage},
                  {"times", times_json(res.times)}};
  write_file(dir / "metrics.json", metrics.dump(2) + "\n");
  out << json{{"coverage", coverage}, {"tour_length", res.tour.length}}.dump() << '\n';
  return kExitOk;
}

int cmd_bench(const CommonFlags& flags, RunConfig cfg, std::ostream& out) {
  const fs::path dir = flags.out_dir.empty() ? cfg.output_dir : fs::path(flags.out_dir);
  std::vector<std::string> targets = {"bench.csv"};
  if (flags.plot) targets.push_back("time_vs_horizon.svg");
  guard_outputs(dir, targets, flags.force);

  BenchSpec spec;
  spec.method = cfg.bench_method;
  spec.model = cfg.model;
  spec.horizons = cfg.bench_horizons;
  spec.repetitions = cfg.bench_repetitions;
  spec.plan = cfg.plan;
  if (flags.seed) spec.plan.seed = RngSeed{*flags.seed};
  spec.reference = cfg.reference;
  spec.horizon_seconds = cfg.bench_horizon_seconds;
  spec.s0 = cfg.s0;
  spec.workers = cfg.bench_workers;
  if (flags.workers || std::getenv(kWorkersEnv) || cfg.workers) {
    spec.workers = {resolve_cli_workers(flags, cfg)};
  }
  spec.warmup = cfg.bench_warmup;
  spec.allow_large_tsp = cfg.bench_allow_large_tsp;
  spec.tsp_max_passes = cfg.tsp_max_passes;

  std::ofstream csv(dir / "bench.csv");
  if (!csv) throw Error("cannot write " + (dir / "bench.csv").string());
  write_bench_header(csv);
  const auto records = run_bench(spec, [&](const BenchRecord& r) { write_bench_row(csv, r); });
  if (flags.plot) write_file(dir / "time_vs_horizon.svg", render_svg(records));
  int failed = 0;
  for (const auto& r : records) failed += r.status == "ok" ? 0 : 1;
  out << json{{"records", records.size()}, {"failed", failed}, {"csv", (dir / "bench.csv").string()}}.dump()
      << '\n';
  return kExitOk;
}

int cmd_metric(const CommonFlags& flags, RunConfig cfg, std::ostream& out) {
  const DynamicsModel model = model_by_name(cfg.model);
  std::ifstream in(flags.trajectory);
  if (!in) throw InvalidArgument("file not found: " + flags.trajectory);
  const Points states = read_trajectory_states(in, model);
  const RngSeed seed = flags.seed ? RngSeed{*flags.seed} : cfg.plan.seed;
  const int workers = resolve_cli_workers(flags, cfg);
  const Points target = cfg.reference->is_sample_based()
                            ? cfg.reference->cloud().points()
                            : metric_samples(*cfg.reference, cfg.plan.metric_samples, seed);
  const double value = coverage_metric(states, model, target, metric_config(target, workers));
  out << json{{"coverage", value}}.dump() << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Coverage trajectory synthesis by LQR flow matching"};
  app.require_subcommand(1);
  CommonFlags flags;
  std::uint64_t seed = 0;
  int workers = 0;

  auto add_common = [&](CLI::App* sub, bool outputs) {
    sub->add_option("--config", flags.config, "Config file (key = value)")->required();
    sub->add_option("--seed", seed, "Override optimizer.seed");
    sub->add_option("--workers", workers, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    if (outputs) {
      sub->add_option("--out", flags.out_dir, "Output directory (overrides output.dir)");
      sub->add_flag("--force", flags.force, "Overwrite existing outputs");
    }
  };
  CLI::App* plan_cmd = app.add_subcommand("plan", "Optimize a coverage trajectory");
  add_common(plan_cmd, true);
  CLI::App* base_cmd = app.add_subcommand("baseline-tsp", "TSP waypoint-tracking baseline");
  add_common(base_cmd, true);
  CLI::App* bench_cmd = app.add_subcommand("bench", "Horizon-scaling benchmark sweep");
  add_common(bench_cmd, true);
  bench_cmd->add_flag("--plot", flags.plot, "Also write time_vs_horizon.svg");
  CLI::App* metric_cmd = app.add_subcommand("metric", "Coverage metric of a trajectory CSV");
  add_common(metric_cmd, false);
  metric_cmd->add_option("--trajectory", flags.trajectory, "Trajectory CSV")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    print_error(err, "usage", e.what());
    return kExitUsage;
  }
  CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--seed")) flags.seed = seed;
  if (sub->count("--workers")) flags.workers = workers;

  try {
    RunConfig cfg = load_config(flags.config);
    if (sub == plan_cmd) return cmd_plan(flags, std::move(cfg), out);
    if (sub == base_cmd) return cmd_baseline(flags, std::move(cfg), out);
    if (sub == bench_cmd) return cmd_bench(flags, std::move(cfg), out);
    return cmd_metric(flags, std::move(cfg), out);
  } catch (const ConfigError& e) {
    print_error(err, "config", e.what(), issues_json(e));
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    print_error(err, "input", e.what());
    return kExitUsage;
  } catch (const PlanError& e) {
    print_error(err, "plan", e.what(), {{"iteration", e.iteration()}});
    return kExitFailure;
  } catch (const std::exception& e) {
    print_error(err, "runtime", e.what());
    return kExitFailure;
  }
}

}  // namespace covflow
