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

#ifndef COVFLOW_TSP_BASELINE_HPP_
#define COVFLOW_TSP_BASELINE_HPP_

#include <optional>
#include <utility>
#include <vector>

#include "covflow/common.hpp"
#include "covflow/dynamics.hpp"
#include "covflow/optimizer.hpp"
#include "covflow/reference.hpp"
#include "covflow/rng.hpp"

namespace covflow {

// Open (non-returning) tour through a point set.
struct Tour {
  std::vector<Index> order;
  double length = 0.0;
  int passes = 0;  // 2-opt passes performed
};

double open_tour_length(const Points& points, const std::vector<Index>& order);

std::vector<Index> nearest_neighbor_order(const Points& points, Index start);

// Lexicographically first (i, j) whose segment reversal shortens the tour by
// more than 1e-10, scanning i from `from`.
std::optional<std::pair<Index, Index>> find_improving_move(const Points& points,
                                                           const std::vector<Index>& order,
                                                           Index from = 0, int workers = 1);

// Nearest neighbor from a seeded random start, then first-improvement 2-opt
// passes until a pass finds no improving move or max_passes is spent. After a
// move at (i, j) scanning resumes at i.
Tour build_tour(const Points& points, RngSeed seed, int max_passes = 1000, int workers = 1);

struct TrackingOptions {
  int iterations = 10;
  double position_weight = 1.0;
  double other_state_weight = 0.1;
  double control_weight = 1e-4;
};

// Arc-length resamples the waypoint polyline to T + 1 workspace points.
Points resample_polyline(const Points& waypoints, Index samples);

// Full reference states along resampled positions: heading along the path
// (diff drive), heading / flight-path angle / speed (aircraft).
Points lift_reference(const DynamicsModel& model, const Points& positions, double dt);

// Open-loop controls reproducing the lifted reference approximately.
Points feedforward_controls(const DynamicsModel& model, const Points& reference, double dt);

// Tracks the resampled waypoint path with iterated time-varying LQR starting
// from the first reference state.
// When `times` is given, LQR and rollout seconds are added to it.
Trajectory track_waypoints(const DynamicsModel& model, const Points& waypoints, Index steps,
                           double dt, const TrackingOptions& opts = {},
                           PhaseTimes* times = nullptr);

struct BaselineResult {
  Trajectory trajectory;
  Tour tour;
  Points waypoints;  // in tour order
  PhaseTimes times;  // flow = tour construction, lqr = tracking solves
};

// Samples T waypoints from q, orders them with build_tour and tracks them.
BaselineResult run_tsp_baseline(const DynamicsModel& model, const ReferenceDistribution& q,
                                Index steps, double dt, RngSeed seed, int max_passes = 1000,
                                int workers = 1, const TrackingOptions& opts = {});

}  // namespace covflow

#endif  // COVFLOW_TSP_BASELINE_HPP_
