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

#ifndef COVFLOW_STEIN_FLOW_HPP_
#define COVFLOW_STEIN_FLOW_HPP_

#include "covflow/common.hpp"
#include "covflow/dynamics.hpp"
#include "covflow/flow_field.hpp"
#include "covflow/reference.hpp"

namespace covflow {

// RBF bandwidth h in k(s, s') = exp(-|s - s'|^2 / h).
struct Bandwidth {
  enum class Kind { kMedian, kFixed };
  Kind kind = Kind::kMedian;
  double h = 0.0;

  static Bandwidth median() { return {Kind::kMedian, 0.0}; }
  static Bandwidth fixed(double h) { return {Kind::kFixed, h}; }
};

struct SteinConfig {
  Bandwidth bandwidth = Bandwidth::median();
  Index parallel_chunk = 64;
  int workers = 0;  // <= 0: all cores
};

inline constexpr double kMinBandwidth = 1e-12;

// Median heuristic h = med^2 / log(n + 1), med the median pairwise distance
// (mean of the two middle values for an even pair count). Returns 1 for a
// single point.
double median_bandwidth(const Points& points, int workers = 0, Index chunk = 64);

// Stein variational gradient at every point:
//   g(s_i) = 1/n sum_j [ k(s_j, s_i) score(s_j) + (2/h) (s_i - s_j) k(s_j, s_i) ].
// Each g(s_i) is accumulated over j in index order by a single task.
FlowField stein_flow(const Points& points, const ReferenceDistribution& q,
                     const SteinConfig& cfg);

// Evaluates the flow on the workspace projection of states[1..T]; the fixed
// initial state receives no flow.
FlowField stein_flow_on_trajectory(const Points& states, const DynamicsModel& model,
                                   const ReferenceDistribution& q, const SteinConfig& cfg);

}  // namespace covflow

#endif  // COVFLOW_STEIN_FLOW_HPP_
