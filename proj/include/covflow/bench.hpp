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

#ifndef COVFLOW_BENCH_HPP_
#define COVFLOW_BENCH_HPP_

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "covflow/common.hpp"
#include "covflow/optimizer.hpp"
#include "covflow/reference.hpp"

namespace covflow {

enum class BenchMethod { kSteinPlan, kSinkhornPlan, kTspBaseline };

const char* to_string(BenchMethod m);
BenchMethod bench_method_from_string(std::string_view name);

struct BenchSpec {
  BenchMethod method = BenchMethod::kSteinPlan;
  std::string model = "diff_drive";
  std::vector<Index> horizons;  // strictly increasing
  int repetitions = 3;
  PlanConfig plan;  // method is overridden by `method`
  std::optional<ReferenceDistribution> reference;  // default: coverage_fixture
  double horizon_seconds = 10.0;                   // t_f; dt = t_f / T
  std::optional<Vec> s0;                           // default: default_initial_state
  std::vector<int> workers = {0};
  bool warmup = true;
  bool allow_large_tsp = false;
  Index tsp_horizon_cap = 1000;
  int tsp_max_passes = 1000;

  void validate() const;
};

struct BenchRecord {
  std::string method;
  std::string model;
  Index horizon = 0;
  int rep = 0;
  int workers = 0;
  std::uint64_t seed = 0;
  double t_total_s = 0.0;
  double t_flow_s = 0.0;
  double t_lqr_s = 0.0;
  double t_rollout_s = 0.0;
  double coverage = 0.0;
  std::string status = "ok";
};

inline constexpr std::string_view kBenchCsvHeader =
    "method,model,horizon,rep,workers,seed,t_total_s,t_flow_s,t_lqr_s,t_rollout_s,coverage,status";

void write_bench_header(std::ostream& os);
// Doubles are written with 17 significant digits so rows parse back exactly.
void write_bench_row(std::ostream& os, const BenchRecord& r);
std::vector<BenchRecord> read_bench_csv(std::istream& is);

// Start state used by benchmarks and the CLI when none is configured.
Vec default_initial_state(const DynamicsModel& model);

using RecordSink = std::function<void(const BenchRecord&)>;

// Runs configurations sequentially. Each (horizon, workers) pair gets one
// untimed warm-up run, then `repetitions` recorded runs with the same seed.
// Failures become rows with status "error:<kind>" and the sweep continues.
// TSP horizons above tsp_horizon_cap are skipped unless allow_large_tsp.
std::vector<BenchRecord> run_bench(const BenchSpec& spec, const RecordSink& sink = {});

enum class BenchPhase { kTotal, kFlow, kLqr, kRollout };

struct ScalingFit {
  double alpha = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double intercept = 0.0;
  int points = 0;
};

// Least-squares slope of log(time) against log(size) with a 95% Student-t
// interval. Rejects fewer than 4 distinct sizes, non-positive values and
// zero-variance inputs.
ScalingFit fit_power_law(const std::vector<double>& sizes, const std::vector<double>& times);

// fit_power_law over per-horizon medians of successful records.
ScalingFit fit_scaling(const std::vector<BenchRecord>& records, std::string_view method,
                       BenchPhase phase, int workers = -1);

// Log-log plot of median total time against horizon, one series per
// (method, workers).
std::string render_svg(const std::vector<BenchRecord>& records);

}  // namespace covflow

#endif  // COVFLOW_BENCH_HPP_
