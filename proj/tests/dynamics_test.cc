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

#include <doctest.h>

#include <cmath>

#include "covflow/dynamics.hpp"
#include "covflow/rng.hpp"
#include "oracles/oracles.hpp"

using namespace covflow;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

double rel_err(const Mat& a, const Mat& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

Points constant_controls(Index steps, const Vec& u) {
  Points out(steps, u.size());
  for (Index k = 0; k < steps; ++k) out.row(k) = u.transpose();
  return out;
}

}  // namespace

TEST_CASE("single integrator") {
  const DynamicsModel m = single_integrator_2d();
  CHECK(m.state_dim() == 2);
  CHECK(m.control_dim() == 2);
  CHECK(m.workspace_dim() == 2);
  CHECK(m.f(vec({0, 0}), vec({1, 2})).isApprox(vec({1, 2})));
  CHECK(m.jacobian_a(vec({0.3, -1}), vec({1, 2})).isZero());
  CHECK(m.jacobian_b(vec({0.3, -1}), vec({1, 2})).isIdentity());
}

TEST_CASE("differential drive vector field") {
  const DynamicsModel m = differential_drive();
  CHECK(m.name() == "diff_drive");
  CHECK((m.f(vec({0, 0, 0}), vec({1, 0})) - vec({1, 0, 0})).norm() < 1e-15);
  CHECK((m.f(vec({0, 0, M_PI / 2}), vec({1, 0.5})) - vec({0, 1, 0.5})).norm() < 1e-15);
  const Mat a = m.jacobian_a(vec({0, 0, 0}), vec({1, 0}));
  Mat expected = Mat::Zero(3, 3);
  expected(1, 2) = 1.0;
  CHECK((a - expected).norm() < 1e-15);
  CHECK(rel_err(a, oracle::fd_jacobian([&](const Vec& s, const Vec& u) { return m.f(s, u); },
                                       vec({0, 0, 0}), vec({1, 0}), true)) < 1e-8);
}

TEST_CASE("aircraft vector field") {
  const DynamicsModel m = aircraft_3d();
  CHECK(m.state_dim() == 6);
  CHECK(m.control_dim() == 3);
  CHECK(m.workspace_dim() == 3);
  CHECK((m.f(vec({0, 0, 0, 0, 0, 1}), vec({0, 0, 0})) - vec({1, 0, 0, 0, 0, 0})).norm() < 1e-15);
  CHECK((m.f(vec({0, 0, 0, 0, M_PI / 2, 1}), vec({0, 0, 0})) - vec({0, 0, 1, 0, 0, 0})).norm() <
        1e-15);
}

TEST_CASE("analytic Jacobians agree with central differences") {
  Rng rng(RngSeed{11});
  for (const auto& name : model_names()) {
    const DynamicsModel m = model_by_name(name);
    auto f = [&](const Vec& s, const Vec& u) { return m.f(s, u); };
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      Vec s(m.state_dim()), u(m.control_dim());
      for (Index i = 0; i < s.size(); ++i) s(i) = 2.0 * rng.uniform() - 1.0;
      for (Index i = 0; i < u.size(); ++i) u(i) = 2.0 * rng.uniform() - 1.0;
      worst = std::max(worst, rel_err(m.jacobian_a(s, u), oracle::fd_jacobian(f, s, u, true)));
      worst = std::max(worst, rel_err(m.jacobian_b(s, u), oracle::fd_jacobian(f, s, u, false)));
    }
    INFO(name);
    CHECK(worst <= 1e-4);
  }
}

TEST_CASE("projection is the coordinate selection matrix") {
  Rng rng(RngSeed{12});
  for (const auto& name : model_names()) {
    const DynamicsModel m = model_by_name(name);
    const Mat& p = m.project_matrix();
    CHECK(p.rows() == m.workspace_dim());
    CHECK(p.leftCols(m.workspace_dim()).isIdentity());
    CHECK(p.rightCols(m.state_dim() - m.workspace_dim()).isZero());
    Vec s(m.state_dim());
    for (Index i = 0; i < s.size(); ++i) s(i) = rng.normal();
    CHECK((m.project(s) - p * s).norm() == 0.0);
  }
}

TEST_CASE("rollout examples") {
  const Points u1 = constant_controls(10, vec({1, 0}));
  const Points s = rollout(single_integrator_2d(), vec({0, 0}), u1, 0.1);
  CHECK(s.rows() == 11);
  CHECK(s.row(0).isZero());
  CHECK((s.row(10).transpose() - vec({1, 0})).norm() < 1e-12);

  const Points d = rollout(differential_drive(), vec({0, 0, 0}), u1, 0.1);
  CHECK((d.row(10).transpose() - vec({1, 0, 0})).norm() < 1e-12);
}

TEST_CASE("rollout follows the unicycle arc with fourth-order error") {
  const DynamicsModel m = differential_drive();
  auto error_at = [&](Index steps) {
    const double dt = M_PI / static_cast<double>(steps);
    const Points s = rollout(m, vec({0, 0, 0}), constant_controls(steps, vec({1, 1})), dt);
    return (s.row(steps).transpose() - oracle::unicycle_arc(1, 1, M_PI)).norm();
  };
  const double e1 = error_at(100);
  const double e2 = error_at(200);
  CHECK(e1 < 1e-6);
  const Points s = rollout(m, vec({0, 0, 0}), constant_controls(100, vec({1, 1})), M_PI / 100);
  CHECK(std::abs(s.row(100).head(2).norm() - 2.0) < 1e-6);  // diameter of the unit circle
  // Halving dt cuts the error by about 16; allow measurement noise.
  CHECK(e1 / e2 >= 8.0);
}

TEST_CASE("rollout is bit-reproducible and reports divergence") {
  const DynamicsModel m = aircraft_3d();
  Rng rng(RngSeed{3});
  Points u(50, 3);
  for (Index k = 0; k < u.rows(); ++k) {
    for (Index c = 0; c < 3; ++c) u(k, c) = 0.3 * rng.normal();
  }
  const Vec s0 = vec({0.5, 0.5, 0.5, 0, 0, 1});
  CHECK(rollout(m, s0, u, 0.05) == rollout(m, s0, u, 0.05));

  Points blow = constant_controls(5, vec({1, 0}));
  blow(2, 0) = std::numeric_limits<double>::infinity();
  try {
    rollout(differential_drive(), vec({0, 0, 0}), blow, 0.1);
    FAIL("expected RolloutDivergence");
  } catch (const RolloutDivergence& e) {
    CHECK(e.step() == 3);
  }
  CHECK_THROWS_AS(rollout(m, s0, u, 0.0), InvalidArgument);
  CHECK_THROWS_AS(rollout(m, s0, Points(0, 3), 0.1), InvalidArgument);
}

TEST_CASE("linearize_along") {
  SUBCASE("single integrator") {
    const Points u = constant_controls(4, vec({1, -1}));
    const Points s = rollout(single_integrator_2d(), vec({0, 0}), u, 0.1);
    const LtvSystem sys = linearize_along(single_integrator_2d(), s, u, 0.1);
    CHECK(sys.steps() == 4);
    for (Index k = 0; k < 4; ++k) {
      CHECK(sys.a[k].isZero());
      CHECK(sys.b[k].isIdentity());
    }
  }
  SUBCASE("differential drive matches finite differences") {
    const DynamicsModel m = differential_drive();
    Rng rng(RngSeed{5});
    Points u(30, 2);
    for (Index k = 0; k < 30; ++k) u.row(k) << 1.0 + 0.2 * rng.normal(), rng.normal();
    const Points s = rollout(m, vec({0, 0, 0.3}), u, 0.05);
    const LtvSystem sys = linearize_along(m, s, u, 0.05);
    auto f = [&](const Vec& x, const Vec& v) { return m.f(x, v); };
    for (Index k = 0; k < 30; ++k) {
      const Mat fd = oracle::fd_jacobian(f, s.row(k).transpose(), u.row(k).transpose(), true);
      CHECK(rel_err(sys.a[k], fd) <= 1e-5);
    }
  }
  SUBCASE("aircraft control matrix is the constant rate selection") {
    const DynamicsModel m = aircraft_3d();
    Points u = constant_controls(10, vec({0.1, 0.05, 0.2}));
    const Points s = rollout(m, vec({0, 0, 0, 0.2, 0.1, 1}), u, 0.1);
    const LtvSystem sys = linearize_along(m, s, u, 0.1);
    Mat sel = Mat::Zero(6, 3);
    sel.bottomRows(3).setIdentity();
    for (Index k = 0; k < 10; ++k) CHECK(sys.b[k] == sel);
  }
  CHECK_THROWS_AS(linearize_along(single_integrator_2d(), Points::Zero(3, 2), Points::Zero(3, 2), 0.1),
                  InvalidArgument);
}

TEST_CASE("unknown model names are rejected") {
  CHECK_THROWS_AS(model_by_name("quadrotor"), InvalidArgument);
  CHECK(model_names().size() == 3);
}
