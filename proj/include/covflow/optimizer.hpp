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

#ifndef COVFLOW_OPTIMIZER_HPP_
#define COVFLOW_OPTIMIZER_HPP_

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "covflow/common.hpp"
#include "covflow/dynamics.hpp"
#include "covflow/reference.hpp"
#include "covflow/rng.hpp"
#include "covflow/sinkhorn.hpp"
#include "covflow/stein_flow.hpp"

namespace covflow {

enum class FlowMethod { kStein, kSinkhorn };

const char* to_string(FlowMethod m);

struct ControlClamp {
  Vec lower;
  Vec upper;
};

struct InitialControls {
  enum class Kind { kZeros, kRandomSmall, kProvided };
  Kind kind = Kind::kRandomSmall;
  double scale = 1e-2;
  Points provided;

  static InitialControls zeros() { return {Kind::kZeros, 0.0, {}}; }
  static InitialControls random_small(double scale) { return {Kind::kRandomSmall, scale, {}}; }
  static InitialControls given(Points u) { return {Kind::kProvided, 0.0, std::move(u)}; }
};

struct Discretization {
  double dt = 0.01;
  Index steps = 100;
  Vec s0;
};

struct PlanConfig {
  FlowMethod method = FlowMethod::kStein;
  double step_size = 0.1;
  int max_iterations = 300;
  double convergence_tol = 1e-4;  // on mean flow magnitude
  std::optional<ControlClamp> control_clamp;
  RngSeed seed{0};
  InitialControls initial_controls;
  SteinConfig stein;
  SinkhornConfig sinkhorn;
  double q_weight = 1.0;
  double r_weight = 0.1;
  int metric_every = 10;  // 0 disables the in-loop coverage metric
  Index metric_samples = 2000;
  // Shared scorer; when null, plan draws metric_samples target points itself.
  std::shared_ptr<const class CoverageScorer> scorer;
  Index target_samples = 0;  // Sinkhorn target size for mixtures; 0 means T
  int workers = 0;           // passed to the flow evaluators
};

struct IterationStats {
  int iteration = 0;
  double flow_norm = 0.0;
  double lqr_cost = 0.0;
  std::optional<double> coverage;
  double t_flow = 0.0;
  double t_lqr = 0.0;
  double t_rollout = 0.0;
  bool flow_converged = true;
};

struct PhaseTimes {
  double flow = 0.0;
  double lqr = 0.0;
  double rollout = 0.0;
  double total = 0.0;
};

struct PlanResult {
  Trajectory trajectory;
  std::vector<IterationStats> history;
  PhaseTimes times;
  int iterations = 0;
  bool converged = false;
  double final_coverage = 0.0;
};

// Raised when a phase fails; carries the iteration and last good trajectory.
class PlanError : public Error {
 public:
  PlanError(int iteration, Trajectory last_good, const std::string& what)
      : Error(what), iteration_(iteration), last_good_(std::move(last_good)) {}
  int iteration() const { return iteration_; }
  const Trajectory& last_good() const { return last_good_; }

 private:
  int iteration_;
  Trajectory last_good_;
};

// Sinkhorn settings used to score trajectories against a target sample set:
// omega = 0.05 * mean pairwise squared distance of the target samples, so the
// metric scale does not depend on the trajectory being scored.
SinkhornConfig metric_config(const Points& q_samples, int workers = 0);

// Sinkhorn divergence between the projected states[1..T] and q_samples.
double coverage_metric(const Points& states, const DynamicsModel& model, const Points& q_samples,
                       const SinkhornConfig& cfg);

// Same metric for repeated scoring against one target set; OT(Y, Y) is solved
// once at construction.
class CoverageScorer {
 public:
  CoverageScorer(Points q_samples, int workers = 0);
  double operator()(const Points& states, const DynamicsModel& model) const;
  const Points& samples() const { return q_; }
  const SinkhornConfig& config() const { return cfg_; }

 private:
  Points q_;
  SinkhornConfig cfg_;
  SinkhornSolution yy_;
};

// Target samples used for scoring: fixed for a given seed.
Points metric_samples(const ReferenceDistribution& q, Index count, RngSeed seed);

// Initial control sequence per cfg.initial_controls.
Points initial_controls(const DynamicsModel& model, Index steps, const PlanConfig& cfg);

// Iterates rollout -> flow -> LQR flow matching -> U += eta v* until the mean
// flow magnitude drops below the tolerance or the budget is spent.
PlanResult plan(const DynamicsModel& model, const ReferenceDistribution& q,
                const Discretization& disc, const PlanConfig& cfg);

}  // namespace covflow

#endif  // COVFLOW_OPTIMIZER_HPP_
