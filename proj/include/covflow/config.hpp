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

#ifndef COVFLOW_CONFIG_HPP_
#define COVFLOW_CONFIG_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "covflow/bench.hpp"
#include "covflow/common.hpp"
#include "covflow/optimizer.hpp"
#include "covflow/reference.hpp"

namespace covflow {

struct ConfigIssue {
  std::string key;
  std::string message;
  std::string suggestion;  // closest known key for unknown keys
};

// All problems found in one config file.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<ConfigIssue> issues);
  const std::vector<ConfigIssue>& issues() const { return issues_; }

 private:
  std::vector<ConfigIssue> issues_;
};

// Fully validated run configuration.
struct RunConfig {
  std::string model = "diff_drive";
  FlowMethod method = FlowMethod::kStein;
  double dt = 0.01;
  Index horizon = 1000;
  std::optional<Vec> s0;
  std::optional<ReferenceDistribution> reference;  // set after parsing
  std::string reference_description = "fixture";
  PlanConfig plan;
  int tsp_max_passes = 1000;
  std::filesystem::path output_dir = "out";
  std::optional<int> workers;

  // bench.*
  BenchMethod bench_method = BenchMethod::kSteinPlan;
  std::vector<Index> bench_horizons = {100, 200, 300, 400, 500};
  int bench_repetitions = 3;
  std::vector<int> bench_workers = {0};
  double bench_horizon_seconds = 10.0;
  bool bench_allow_large_tsp = false;
  bool bench_warmup = true;
};

std::vector<std::string> known_config_keys();

// Damerau-free Levenshtein distance.
std::size_t edit_distance(const std::string& a, const std::string& b);

// Parses `key = value` lines; '#' starts a comment. Unknown keys, malformed
// values, out-of-range numbers and missing files are collected and thrown
// together as ConfigError. Relative paths resolve against `base_dir`.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".");
RunConfig load_config(const std::filesystem::path& path);

// Point list "x,y; x,y; ..." or a single "x,y".
Points parse_point_list(const std::string& text);

// One workspace point per row; a non-numeric first line is taken as a header.
Points read_points_csv(const std::filesystem::path& path);

}  // namespace covflow

#endif  // COVFLOW_CONFIG_HPP_
