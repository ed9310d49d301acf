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

#include "covflow/dynamics.hpp"

#include <cmath>
#include <sstream>

namespace covflow {

DynamicsModel::DynamicsModel(std::string name, int state_dim, int control_dim,
                             Mat project_matrix, VectorField f,
                             Jacobian jacobian_a, Jacobian jacobian_b)
    : name_(std::move(name)),
      state_dim_(state_dim),
      control_dim_(control_dim),
      project_matrix_(std::move(project_matrix)),
      f_(std::move(f)),
      jacobian_a_(std::move(jacobian_a)),
      jacobian_b_(std::move(jacobian_b)) {
  if (state_dim_ <= 0 || control_dim_ <= 0) {
    throw InvalidArgument("dynamics model dimensions must be positive");
  }
  if (project_matrix_.cols() != state_dim_ || project_matrix_.rows() < 1 ||
      project_matrix_.rows() > state_dim_) {
    throw InvalidArgument("projection matrix must be workspace_dim x state_dim");
  }
}

Points DynamicsModel::project_all(const Points& states) const {
  return states * project_matrix_.transpose();
}

namespace {

Mat selection(int rows, int cols) {
  Mat p = Mat::Zero(rows, cols);
  for (int i = 0; i < rows; ++i) p(i, i) = 1.0;
  return p;
}

}  // namespace

DynamicsModel single_integrator_2d() {
  return DynamicsModel(
      "single_integrator_2d", 2, 2, selection(2, 2),
      [](const Vec&, const Vec& u) { return Vec(u); },
      [](const Vec&, const Vec&) { return Mat(Mat::Zero(2, 2)); },
      [](const Vec&, const Vec&) { return Mat(Mat::Identity(2, 2)); });
}

DynamicsModel differential_drive() {
  auto f = [](const Vec& s, const Vec& u) {
    Vec ds(3);
    ds << u(0) * std::cos(s(2)), u(0) * std::sin(s(2)), u(1);
    return ds;
  };
  auto jac_a = [](const Vec& s, const Vec& u) {
    Mat a = Mat::Zero(3, 3);
    a(0, 2) = -u(0) * std::sin(s(2));
    a(1, 2) = u(0) * std::cos(s(2));
    return a;
  };
  auto jac_b = [](const Vec& s, const Vec&) {
    Mat b = Mat::Zero(3, 2);
    b(0, 0) = std::cos(s(2));
    b(1, 0) = std::sin(s(2));
    b(2, 1) = 1.0;
    return b;
  };
  return DynamicsModel("diff_drive", 3, 2, selection(2, 3), f, jac_a, jac_b);
}

DynamicsModel aircraft_3d() {
  // s = (x, y, z, psi, gamma, v)
  auto f = [](const Vec& s, const Vec& u) {
    const double cpsi = std::cos(s(3)), spsi = std::sin(s(3));
    const double cgam = std::cos(s(4)), sgam = std::sin(s(4));
    Vec ds(6);
    ds << s(5) * cgam * cpsi, s(5) * cgam * spsi, s(5) * sgam, u(0), u(1), u(2);
    return ds;
  };
  auto jac_a = [](const Vec& s, const Vec&) {
    const double cpsi = std::cos(s(3)), spsi = std::sin(s(3));
    const double cgam = std::cos(s(4)), sgam = std::sin(s(4));
    const double v = s(5);
    Mat a = Mat::Zero(6, 6);
    a(0, 3) = -v * cgam * spsi;
    a(0, 4) = -v * sgam * cpsi;
    a(0, 5) = cgam * cpsi;
    a(1, 3) = v * cgam * cpsi;
    a(1, 4) = -v * sgam * spsi;
    a(1, 5) = cgam * spsi;
    a(2, 4) = v * cgam;
    a(2, 5) = sgam;
    return a;
  };
  auto jac_b = [](const Vec&, const Vec&) {
    Mat b = Mat::Zero(6, 3);
    b(3, 0) = 1.0;
    b(4, 1) = 1.0;
    b(5, 2) = 1.0;
    return b;
  };
  return DynamicsModel("aircraft_3d", 6, 3, selection(3, 6), f, jac_a, jac_b);
}

std::vector<std::string> model_names() {
  return {"single_integrator_2d", "diff_drive", "aircraft_3d"};
}

DynamicsModel model_by_name(std::string_view name) {
  if (name == "single_integrator_2d") return single_integrator_2d();
  if (name == "diff_drive") return differential_drive();
  if (name == "aircraft_3d") return aircraft_3d();
  throw InvalidArgument("unknown dynamics model '" + std::string(name) + "'");
}

Vec rk4_step(const DynamicsModel& model, const Vec& s, const Vec& u, double dt) {
  const Vec k1 = model.f(s, u);
  const Vec k2 = model.f(s + 0.5 * dt * k1, u);
  const Vec k3 = model.f(s + 0.5 * dt * k2, u);
  const Vec k4 = model.f(s + dt * k3, u);
  return s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Points rollout(const DynamicsModel& model, const Vec& s0, const Points& controls,
               double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("rollout: dt must be positive");
  if (controls.rows() == 0) throw InvalidArgument("rollout: empty control sequence");
  if (s0.size() != model.state_dim() || controls.cols() != model.control_dim()) {
    throw InvalidArgument("rollout: state/control dimension mismatch");
  }
  const Index steps = controls.rows();
  Points states(steps + 1, model.state_dim());
  states.row(0) = s0.transpose();
  if (!s0.allFinite()) throw RolloutDivergence(0, "rollout: initial state is not finite");
  Vec s = s0;
  for (Index k = 0; k < steps; ++k) {
    s = rk4_step(model, s, controls.row(k).transpose(), dt);
    if (!s.allFinite()) {
      std::ostringstream msg;
      msg << "rollout diverged: non-finite state at step " << k + 1;
      throw RolloutDivergence(k + 1, msg.str());
    }
    states.row(k + 1) = s.transpose();
  }
  return states;
}

LtvSystem linearize_along(const DynamicsModel& model, const Points& states,
                          const Points& controls, double dt) {
  if (states.rows() != controls.rows() + 1) {
    throw InvalidArgument("linearize_along: expected |S| == |U| + 1");
  }
  LtvSystem sys;
  sys.dt = dt;
  const Index steps = controls.rows();
  sys.a.reserve(steps);
  sys.b.reserve(steps);
  for (Index k = 0; k < steps; ++k) {
    const Vec s = states.row(k).transpose();
    const Vec u = controls.row(k).transpose();
    sys.a.push_back(model.jacobian_a(s, u));
    sys.b.push_back(model.jacobian_b(s, u));
    if (!sys.a.back().allFinite() || !sys.b.back().allFinite()) {
      throw InvalidArgument("linearize_along: non-finite Jacobian at step " +
                            std::to_string(k));
    }
  }
  return sys;
}

}  // namespace covflow
