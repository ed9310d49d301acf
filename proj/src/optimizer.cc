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

#include "covflow/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <utility>

#include "covflow/lqr.hpp"

namespace covflow {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Seed streams.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kTargetStream = 2;
constexpr std::uint64_t kMetricStream = 3;

void apply_clamp(Points& u, const std::optional<ControlClamp>& clamp) {
  if (!clamp) return;
  for (Index k = 0; k < u.rows(); ++k) {
    for (Index c = 0; c < u.cols(); ++c) {
      u(k, c) = std::clamp(u(k, c), clamp->lower(c), clamp->upper(c));
    }
  }
}

}  // namespace

const char* to_string(FlowMethod m) {
  return m == FlowMethod::kStein ? "stein" : "sinkhorn";
}

SinkhornConfig metric_config(const Points& q_samples, int workers) {
  SinkhornConfig cfg;
  cfg.omega = auto_omega(q_samples, q_samples);
  cfg.tol = 1e-7;
  cfg.max_iters = 5000;
  cfg.workers = workers;
  return cfg;
}

double coverage_metric(const Points& states, const DynamicsModel& model, const Points& q_samples,
                       const SinkhornConfig& cfg) {
  if (q_samples.rows() < 1) throw InvalidArgument("coverage_metric: need target samples");
  if (states.rows() < 2) throw InvalidArgument("coverage_metric: need at least two states");
  const Points projected = model.project_all(states.bottomRows(states.rows() - 1));
  return sinkhorn_divergence(projected, q_samples, cfg);
}

CoverageScorer::CoverageScorer(Points q_samples, int workers)
    : q_(std::move(q_samples)), cfg_(metric_config(q_, workers)) {
  if (q_.rows() < 1) throw InvalidArgument("coverage_metric: need target samples");
  yy_ = entropic_ot_self(q_, cfg_);
}

double CoverageScorer::operator()(const Points& states, const DynamicsModel& model) const {
  if (states.rows() < 2) throw InvalidArgument("coverage_metric: need at least two states");
  const Points projected = model.project_all(states.bottomRows(states.rows() - 1));
  return sinkhorn_divergence_parts(projected, q_, cfg_, &yy_).value;
}

Points metric_samples(const ReferenceDistribution& q, Index count, RngSeed seed) {
  return sample(q, count, Rng(seed).split(kMetricStream).seed());
}

Points initial_controls(const DynamicsModel& model, Index steps, const PlanConfig& cfg) {
  const auto& init = cfg.initial_controls;
  switch (init.kind) {
    case InitialControls::Kind::kZeros:
      return Points::Zero(steps, model.control_dim());
    case InitialControls::Kind::kProvided:
      if (init.provided.rows() != steps || init.provided.cols() != model.control_dim()) {
        throw InvalidArgument("provided initial controls have the wrong shape");
      }
      return init.provided;
    case InitialControls::Kind::kRandomSmall: {
      Rng rng = Rng(cfg.seed).split(kInitStream);
      Points u(steps, model.control_dim());
      for (Index k = 0; k < steps; ++k) {
        for (Index c = 0; c < u.cols(); ++c) u(k, c) = init.scale * rng.normal();
      }
      return u;
    }
  }
  return Points::Zero(steps, model.control_dim());
}

PlanResult plan(const DynamicsModel& model, const ReferenceDistribution& q,
                const Discretization& disc, const PlanConfig& cfg) {
  const auto plan_start = Clock::now();
  if (!(disc.dt > 0.0) || disc.steps < 1) throw InvalidArgument("plan: need dt > 0 and T >= 1");
  if (disc.s0.size() != model.state_dim()) throw InvalidArgument("plan: s0 has the wrong size");
  if (!(cfg.step_size > 0.0)) throw InvalidArgument("plan: step size must be positive");
  if (cfg.max_iterations < 1) throw InvalidArgument("plan: max_iterations must be >= 1");
  if (q.dim() != model.workspace_dim()) {
    throw InvalidArgument("plan: reference dimension does not match the model workspace");
  }
  if (cfg.method == FlowMethod::kStein && !q.is_score_based()) {
    throw InvalidArgument("plan: Stein flow needs a score-based (mixture) reference");
  }

  SteinConfig stein = cfg.stein;
  stein.workers = cfg.workers;
  SinkhornConfig sinkhorn = cfg.sinkhorn;
  sinkhorn.workers = cfg.workers;

  std::optional<ReferenceDistribution> target;
  if (cfg.method == FlowMethod::kSinkhorn) {
    if (q.is_sample_based()) {
      target = q;
    } else {
      const Index m = cfg.target_samples > 0 ? cfg.target_samples : disc.steps;
      target = to_sample_based(q, m, Rng(cfg.seed).split(kTargetStream).seed());
    }
  }

  std::shared_ptr<const CoverageScorer> scorer = cfg.scorer;
  auto score_now = [&](const Points& states) {
    if (!scorer) {
      scorer = std::make_shared<CoverageScorer>(metric_samples(q, cfg.metric_samples, cfg.seed),
                                                cfg.workers);
    }
    return (*scorer)(states, model);
  };

  const LqrWeights weights =
      LqrWeights::workspace(model.project_matrix(), model.control_dim(), cfg.q_weight, cfg.r_weight);
  const double flow_scale =
      cfg.method == FlowMethod::kSinkhorn ? static_cast<double>(disc.steps) : 1.0;

  PlanResult result;
  result.trajectory.dt = disc.dt;
  Points controls = initial_controls(model, disc.steps, cfg);
  apply_clamp(controls, cfg.control_clamp);
  Trajectory last_good;
  last_good.dt = disc.dt;
  SinkhornWarmStart warm;

  for (int it = 0; it < cfg.max_iterations; ++it) {
    IterationStats stats;
    stats.iteration = it;
    Points states;
    auto fail = [&](const std::exception& e, const char* phase) {
      return PlanError(it, last_good,
                       std::string("plan failed in ") + phase + " at iteration " +
                           std::to_string(it) + ": " + e.what());
    };

    auto t0 = Clock::now();
    try {
      states = rollout(model, disc.s0, controls, disc.dt);
    } catch (const Error& e) {
      throw fail(e, "rollout");
    }
    stats.t_rollout = seconds_since(t0);
    last_good.states = states;
    last_good.controls = controls;

    t0 = Clock::now();
    FlowField flow;
    try {
      if (cfg.method == FlowMethod::kStein) {
        flow = stein_flow_on_trajectory(states, model, q, stein);
      } else {
        const Points projected = model.project_all(states.bottomRows(disc.steps));
        flow = sinkhorn_flow(projected, *target, sinkhorn, &warm);
        flow.vectors *= flow_scale;
      }
    } catch (const Error& e) {
      throw fail(e, "flow evaluation");
    }
    stats.t_flow = seconds_since(t0);
    stats.flow_norm = flow.mean_norm();
    stats.flow_converged = flow.converged;

    if (cfg.metric_every > 0 && it % cfg.metric_every == 0) stats.coverage = score_now(states);

    if (stats.flow_norm < cfg.convergence_tol) {
      result.history.push_back(stats);
      result.converged = true;
      break;
    }

    t0 = Clock::now();
    try {
      const LtvSystem sys = linearize_along(model, states, controls, disc.dt);
      Points reference = Points::Zero(disc.steps + 1, model.state_dim());
      reference.bottomRows(disc.steps) = lift_flow(flow.vectors, model.project_matrix());
      const LqrSolution sol = solve_flow_lqr(sys, reference, weights);
      stats.lqr_cost = sol.cost;
      controls += cfg.step_size * sol.v_star;
      apply_clamp(controls, cfg.control_clamp);
    } catch (const Error& e) {
      throw fail(e, "LQR flow matching");
    }
    stats.t_lqr = seconds_since(t0);
    result.history.push_back(stats);
  }

  result.iterations = static_cast<int>(result.history.size());
  for (const auto& h : result.history) {
    result.times.flow += h.t_flow;
    result.times.lqr += h.t_lqr;
    result.times.rollout += h.t_rollout;
  }
  try {
    result.trajectory.states = rollout(model, disc.s0, controls, disc.dt);
  } catch (const Error& e) {
    throw PlanError(result.iterations, last_good, std::string("final rollout failed: ") + e.what());
  }
  result.trajectory.controls = std::move(controls);
  result.times.total = seconds_since(plan_start);
  result.final_coverage = score_now(result.trajectory.states);
  return result;
}

}  // namespace covflow
