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

#include "covflow/tsp_baseline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

#include "covflow/lqr.hpp"
#include "covflow/parallel.hpp"

namespace covflow {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

constexpr double kImproveEps = 1e-10;
constexpr std::uint64_t kWaypointStream = 11;
constexpr std::uint64_t kTourStream = 12;

inline double dist(const Points& p, Index a, Index b) { return (p.row(a) - p.row(b)).norm(); }

// Change in open-tour length from reversing order[i..j].
inline double reversal_delta(const Points& p, const std::vector<Index>& o, Index i, Index j) {
  const Index n = static_cast<Index>(o.size());
  double before = 0.0, after = 0.0;
  if (i > 0) {
    before += dist(p, o[i - 1], o[i]);
    after += dist(p, o[i - 1], o[j]);
  }
  if (j < n - 1) {
    before += dist(p, o[j], o[j + 1]);
    after += dist(p, o[i], o[j + 1]);
  }
  return after - before;
}

// First improving j for a fixed i, or -1.
Index first_improving_j(const Points& p, const std::vector<Index>& o, Index i) {
  const Index n = static_cast<Index>(o.size());
  for (Index j = i + 1; j < n; ++j) {
    if (i == 0 && j == n - 1) continue;  // whole-tour reversal, delta 0
    if (reversal_delta(p, o, i, j) < -kImproveEps) return j;
  }
  return -1;
}

double wrap_angle(double a) {
  return std::remainder(a, 2.0 * std::numbers::pi);
}

}  // namespace

double open_tour_length(const Points& points, const std::vector<Index>& order) {
  double len = 0.0;
  for (std::size_t k = 1; k < order.size(); ++k) len += dist(points, order[k - 1], order[k]);
  return len;
}

std::vector<Index> nearest_neighbor_order(const Points& points, Index start) {
  const Index n = points.rows();
  std::vector<Index> order;
  order.reserve(static_cast<std::size_t>(n));
  std::vector<char> visited(static_cast<std::size_t>(n), 0);
  Index cur = start;
  visited[static_cast<std::size_t>(cur)] = 1;
  order.push_back(cur);
  for (Index step = 1; step < n; ++step) {
    Index best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < n; ++j) {
      if (visited[static_cast<std::size_t>(j)]) continue;
      const double d = (points.row(cur) - points.row(j)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    visited[static_cast<std::size_t>(best)] = 1;
    order.push_back(best);
    cur = best;
  }
  return order;
}

std::optional<std::pair<Index, Index>> find_improving_move(const Points& points,
                                                           const std::vector<Index>& order,
                                                           Index from, int workers) {
  const Index n = static_cast<Index>(order.size());
  const int w = resolve_workers(workers);
  const Index block = w == 1 ? 1 : static_cast<Index>(w) * 16;
  std::vector<Index> found;
  for (Index start = from; start < n - 1; start += block) {
    const Index count = std::min(block, n - 1 - start);
    found.assign(static_cast<std::size_t>(count), -1);
    parallel_for(count, w, 1, [&](Index b) {
      found[static_cast<std::size_t>(b)] = first_improving_j(points, order, start + b);
    });
    for (Index b = 0; b < count; ++b) {
      if (found[static_cast<std::size_t>(b)] >= 0) {
        return std::make_pair(start + b, found[static_cast<std::size_t>(b)]);
      }
    }
  }
  return std::nullopt;
}

Tour build_tour(const Points& points, RngSeed seed, int max_passes, int workers) {
  const Index n = points.rows();
  if (n < 2) throw InvalidArgument("build_tour: need at least two points");
  Rng rng = Rng(seed).split(kTourStream);
  Tour tour;
  tour.order = nearest_neighbor_order(points, static_cast<Index>(rng.index(static_cast<std::size_t>(n))));
  for (int pass = 0; pass < max_passes; ++pass) {
    bool improved = false;
    Index cursor = 0;
    while (auto move = find_improving_move(points, tour.order, cursor, workers)) {
      const auto [i, j] = *move;
      std::reverse(tour.order.begin() + i, tour.order.begin() + j + 1);
      cursor = i;
      improved = true;
    }
    tour.passes = pass + 1;
    if (!improved) break;
  }
  tour.length = open_tour_length(points, tour.order);
  return tour;
}

Points resample_polyline(const Points& waypoints, Index samples) {
  if (waypoints.rows() < 2) throw InvalidArgument("resample_polyline: need at least two waypoints");
  if (samples < 2) throw InvalidArgument("resample_polyline: need at least two samples");
  const Index k = waypoints.rows();
  std::vector<double> cum(static_cast<std::size_t>(k), 0.0);
  for (Index i = 1; i < k; ++i) {
    cum[static_cast<std::size_t>(i)] =
        cum[static_cast<std::size_t>(i - 1)] + (waypoints.row(i) - waypoints.row(i - 1)).norm();
  }
  const double total = cum.back();
  Points out(samples, waypoints.cols());
  Index seg = 0;
  for (Index s = 0; s < samples; ++s) {
    const double target = total * static_cast<double>(s) / static_cast<double>(samples - 1);
    while (seg < k - 2 && cum[static_cast<std::size_t>(seg + 1)] < target) ++seg;
    const double a = cum[static_cast<std::size_t>(seg)];
    const double b = cum[static_cast<std::size_t>(seg + 1)];
    const double t = b > a ? std::clamp((target - a) / (b - a), 0.0, 1.0) : 0.0;
    out.row(s) = (1.0 - t) * waypoints.row(seg) + t * waypoints.row(seg + 1);
  }
  return out;
}

Points lift_reference(const DynamicsModel& model, const Points& positions, double dt) {
  const Index count = positions.rows();
  Points ref = positions * model.project_matrix();
  if (model.name() != "diff_drive" && model.name() != "aircraft_3d") return ref;

  // Direction of travel at sample k: forward difference, backward at the end.
  auto direction = [&](Index k) -> Eigen::RowVectorXd {
    if (count < 2) return Eigen::RowVectorXd::Zero(positions.cols());
    return k + 1 < count ? Eigen::RowVectorXd(positions.row(k + 1) - positions.row(k))
                         : Eigen::RowVectorXd(positions.row(k) - positions.row(k - 1));
  };
  double prev_heading = 0.0;
  double prev_gamma = 0.0;
  for (Index k = 0; k < count; ++k) {
    const Eigen::RowVectorXd d = direction(k);
    const double horiz = std::hypot(d(0), d(1));
    double heading = horiz > 1e-12 ? std::atan2(d(1), d(0)) : prev_heading;
    if (k > 0) heading = prev_heading + wrap_angle(heading - prev_heading);
    prev_heading = heading;
    if (model.name() == "diff_drive") {
      ref(k, 2) = heading;
      continue;
    }
    const double gamma = d.norm() > 1e-12 ? std::atan2(d(2), horiz) : prev_gamma;
    prev_gamma = gamma;
    ref(k, 3) = heading;
    ref(k, 4) = gamma;
    ref(k, 5) = d.norm() / dt;
  }
  return ref;
}

Points feedforward_controls(const DynamicsModel& model, const Points& reference, double dt) {
  const Index steps = reference.rows() - 1;
  Points u = Points::Zero(steps, model.control_dim());
  for (Index k = 0; k < steps; ++k) {
    const Eigen::RowVectorXd delta = reference.row(k + 1) - reference.row(k);
    if (model.name() == "single_integrator_2d") {
      u.row(k) = delta / dt;
    } else if (model.name() == "diff_drive") {
      const double th = reference(k, 2);
      u(k, 0) = (delta(0) * std::cos(th) + delta(1) * std::sin(th)) / dt;
      u(k, 1) = delta(2) / dt;
    } else if (model.name() == "aircraft_3d") {
      u(k, 0) = delta(3) / dt;
      u(k, 1) = delta(4) / dt;
      u(k, 2) = delta(5) / dt;
    }
  }
  return u;
}

Trajectory track_waypoints(const DynamicsModel& model, const Points& waypoints, Index steps,
                           double dt, const TrackingOptions& opts, PhaseTimes* times) {
  if (waypoints.rows() < 2) throw InvalidArgument("track_waypoints: need at least two waypoints");
  if (steps < 1 || !(dt > 0.0)) throw InvalidArgument("track_waypoints: need T >= 1 and dt > 0");
  const Points positions = resample_polyline(waypoints, steps + 1);
  const Points reference = lift_reference(model, positions, dt);
  const Vec s0 = reference.row(0).transpose();

  LqrWeights w;
  const Mat& p = model.project_matrix();
  w.q = opts.other_state_weight * Mat::Identity(model.state_dim(), model.state_dim()) +
        (opts.position_weight - opts.other_state_weight) * p.transpose() * p;
  w.r = opts.control_weight * Mat::Identity(model.control_dim(), model.control_dim());

  Trajectory traj;
  traj.dt = dt;
  traj.controls = feedforward_controls(model, reference, dt);
  for (int it = 0; it <= opts.iterations; ++it) {
    auto t0 = Clock::now();
    traj.states = rollout(model, s0, traj.controls, dt);
    if (times) times->rollout += seconds_since(t0);
    if (it == opts.iterations) break;
    t0 = Clock::now();
    const LtvSystem sys = linearize_along(model, traj.states, traj.controls, dt);
    const Points error = reference - traj.states;
    const LqrSolution sol = solve_flow_lqr(sys, error, w);
    traj.controls += sol.v_star;
    if (times) times->lqr += seconds_since(t0);
  }
  return traj;
}

BaselineResult run_tsp_baseline(const DynamicsModel& model, const ReferenceDistribution& q,
                                Index steps, double dt, RngSeed seed, int max_passes,
                                int workers, const TrackingOptions& opts) {
  const auto start = Clock::now();
  BaselineResult out;
  const Points samples = sample(q, std::max<Index>(steps, 2), Rng(seed).split(kWaypointStream).seed());
  auto t0 = Clock::now();
  out.tour = build_tour(samples, seed, max_passes, workers);
  out.times.flow = seconds_since(t0);
  out.waypoints.resize(samples.rows(), samples.cols());
  for (std::size_t k = 0; k < out.tour.order.size(); ++k) {
    out.waypoints.row(static_cast<Index>(k)) = samples.row(out.tour.order[k]);
  }
  out.trajectory = track_waypoints(model, out.waypoints, steps, dt, opts, &out.times);
  out.times.total = seconds_since(start);
  return out;
}

}  // namespace covflow
