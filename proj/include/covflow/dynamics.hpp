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

#ifndef COVFLOW_DYNAMICS_HPP_
#define COVFLOW_DYNAMICS_HPP_

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "covflow/common.hpp"

namespace covflow {

// Continuous-time system s' = f(s, u) with analytic Jacobians and a linear
// projection onto the workspace over which coverage is measured.
class DynamicsModel {
 public:
  using VectorField = std::function<Vec(const Vec&, const Vec&)>;
  using Jacobian = std::function<Mat(const Vec&, const Vec&)>;

  DynamicsModel(std::string name, int state_dim, int control_dim,
                Mat project_matrix, VectorField f, Jacobian jacobian_a,
                Jacobian jacobian_b);

  const std::string& name() const { return name_; }
  int state_dim() const { return state_dim_; }
  int control_dim() const { return control_dim_; }
  int workspace_dim() const { return static_cast<int>(project_matrix_.rows()); }

  Vec f(const Vec& s, const Vec& u) const { return f_(s, u); }
  Mat jacobian_a(const Vec& s, const Vec& u) const { return jacobian_a_(s, u); }
  Mat jacobian_b(const Vec& s, const Vec& u) const { return jacobian_b_(s, u); }

  Vec project(const Vec& s) const { return project_matrix_ * s; }
  const Mat& project_matrix() const { return project_matrix_; }

  // Projects each row of `states`.
  Points project_all(const Points& states) const;

 private:
  std::string name_;
  int state_dim_;
  int control_dim_;
  Mat project_matrix_;
  VectorField f_;
  Jacobian jacobian_a_;
  Jacobian jacobian_b_;
};

// s = (x, y), u = (vx, vy), f = u.
DynamicsModel single_integrator_2d();

// Unicycle: s = (x, y, theta), u = (v, omega).
DynamicsModel differential_drive();

// Kinematic fixed-wing: s = (x, y, z, heading, flight-path angle, speed),
// u = (heading rate, flight-path rate, acceleration).
DynamicsModel aircraft_3d();

// "single_integrator_2d", "diff_drive" or "aircraft_3d".
DynamicsModel model_by_name(std::string_view name);
std::vector<std::string> model_names();

// Discretized trajectory: states has one more row than controls.
struct Trajectory {
  double dt = 0.0;
  Points states;    // (T+1) x state_dim, states.row(0) == s0
  Points controls;  // T x control_dim

  Index steps() const { return controls.rows(); }
  double horizon() const { return dt * static_cast<double>(steps()); }
};

// One RK4 step with the control held constant over [t, t + dt].
Vec rk4_step(const DynamicsModel& model, const Vec& s, const Vec& u, double dt);

// Integrates from s0 under zero-order-hold controls. Throws RolloutDivergence
// naming the first step that produced a non-finite state.
Points rollout(const DynamicsModel& model, const Vec& s0, const Points& controls,
               double dt);

// Time-varying linearization z' = A(t) z + B(t) v.
struct LtvSystem {
  std::vector<Mat> a;
  std::vector<Mat> b;
  double dt = 0.0;

  Index steps() const { return static_cast<Index>(a.size()); }
  Index state_dim() const { return a.empty() ? 0 : a.front().rows(); }
  Index control_dim() const { return b.empty() ? 0 : b.front().cols(); }
};

LtvSystem linearize_along(const DynamicsModel& model, const Points& states,
                          const Points& controls, double dt);

}  // namespace covflow

#endif  // COVFLOW_DYNAMICS_HPP_
