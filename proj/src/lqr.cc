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

#include "covflow/lqr.hpp"

#include <sstream>

namespace covflow {

LqrWeights LqrWeights::workspace(const Mat& projection, int control_dim, double q_scale,
                                 double r_scale) {
  LqrWeights w;
  w.q = q_scale * projection.transpose() * projection;
  w.r = r_scale * Mat::Identity(control_dim, control_dim);
  w.validate();
  return w;
}

void LqrWeights::validate() const {
  if (q.rows() != q.cols() || r.rows() != r.cols()) {
    throw InvalidArgument("LQR weights must be square");
  }
  if (!q.isApprox(q.transpose(), 1e-12) && !(q - q.transpose()).isZero(1e-12)) {
    throw InvalidArgument("LQR Q must be symmetric");
  }
  if (!r.isApprox(r.transpose(), 1e-12)) throw InvalidArgument("LQR R must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> eig(q, Eigen::EigenvaluesOnly);
  if (q.size() > 0 && eig.eigenvalues().minCoeff() < -1e-10) {
    throw InvalidArgument("LQR Q must be positive semidefinite");
  }
  if (Eigen::LLT<Mat>(r).info() != Eigen::Success) {
    throw InvalidArgument("LQR R must be positive definite");
  }
}

Points lift_flow(const Points& workspace_flow, const Mat& projection) {
  return workspace_flow * projection;
}

namespace {

void check_shapes(const LtvSystem& sys, const Points& reference, const LqrWeights& w) {
  const Index steps = sys.steps();
  if (steps < 1 || sys.b.size() != sys.a.size()) {
    throw InvalidArgument("LQR: LTV system needs matching, nonempty A and B sequences");
  }
  if (!(sys.dt > 0.0)) throw InvalidArgument("LQR: dt must be positive");
  if (reference.rows() != steps && reference.rows() != steps + 1) {
    throw InvalidArgument("LQR: reference flow must have T or T+1 rows");
  }
  if (reference.cols() != sys.state_dim()) {
    throw InvalidArgument("LQR: reference flow must be lifted to state dimension");
  }
  if (w.q.rows() != sys.state_dim() || w.r.rows() != sys.control_dim()) {
    throw InvalidArgument("LQR: weight dimensions do not match the system");
  }
}

}  // namespace

Points propagate_flow(const LtvSystem& sys, const Points& v) {
  const Index steps = sys.steps();
  const Index n = sys.state_dim();
  Points z = Points::Zero(steps + 1, n);
  for (Index k = 0; k < steps; ++k) {
    const Vec zk = z.row(k).transpose();
    z.row(k + 1) =
        (zk + sys.dt * (sys.a[k] * zk + sys.b[k] * v.row(k).transpose())).transpose();
  }
  return z;
}

double flow_lqr_objective(const LtvSystem& sys, const Points& reference, const LqrWeights& w,
                          const Points& v) {
  check_shapes(sys, reference, w);
  const Points z = propagate_flow(sys, v);
  double cost = 0.0;
  for (Index k = 0; k < reference.rows(); ++k) {
    const Vec e = reference.row(k).transpose() - z.row(k).transpose();
    cost += sys.dt * e.dot(w.q * e);
  }
  for (Index k = 0; k < sys.steps(); ++k) {
    const Vec vk = v.row(k).transpose();
    cost += sys.dt * vk.dot(w.r * vk);
  }
  return cost;
}

LqrSolution solve_flow_lqr(const LtvSystem& sys, const Points& reference, const LqrWeights& w) {
  check_shapes(sys, reference, w);
  w.validate();
  const Index steps = sys.steps();
  const Index n = sys.state_dim();
  const Index m = sys.control_dim();
  const double dt = sys.dt;
  const bool terminal = reference.rows() == steps + 1;

  // Value function V_k(z) = z^T P z + 2 s^T z + const.
  Mat p = Mat::Zero(n, n);
  Vec s = Vec::Zero(n);
  if (terminal) {
    const Vec at = reference.row(steps).transpose();
    p = dt * w.q;
    s = -dt * (w.q * at);
  }

  LqrSolution sol;
  sol.gains.assign(static_cast<std::size_t>(steps), Mat());
  sol.feedforward.resize(steps, m);
  const Mat identity = Mat::Identity(n, n);
  for (Index k = steps - 1; k >= 0; --k) {
    const Mat ad = identity + dt * sys.a[k];
    const Mat bd = dt * sys.b[k];
    const Mat pb = p * bd;
    const Mat huu = dt * w.r + bd.transpose() * pb;
    const Mat hux = pb.transpose() * ad;
    const Vec hu = bd.transpose() * s;
    Eigen::LLT<Mat> llt(huu);
    if (llt.info() != Eigen::Success) {
      std::ostringstream msg;
      msg << "LQR Riccati sweep lost positive definiteness at time index " << k
          << "; try a smaller dt";
      throw NumericalInstability(k, msg.str());
    }
    const Mat gain = llt.solve(hux);
    const Vec ff = -llt.solve(hu);
    const Vec ak = reference.row(k).transpose();
    // Symmetrized to keep round-off from accumulating over long horizons.
    Mat p_next = dt * w.q + ad.transpose() * p * ad - hux.transpose() * gain;
    p = 0.5 * (p_next + p_next.transpose());
    s = -dt * (w.q * ak) + ad.transpose() * s + hux.transpose() * ff;
    if (!p.allFinite() || !s.allFinite()) {
      std::ostringstream msg;
      msg << "LQR Riccati sweep produced non-finite values at time index " << k
          << "; try a smaller dt";
      throw NumericalInstability(k, msg.str());
    }
    sol.gains[static_cast<std::size_t>(k)] = gain;
    sol.feedforward.row(k) = ff.transpose();
  }

  sol.v_star.resize(steps, m);
  sol.z = Points::Zero(steps + 1, n);
  for (Index k = 0; k < steps; ++k) {
    const Vec zk = sol.z.row(k).transpose();
    const Vec vk = -sol.gains[static_cast<std::size_t>(k)] * zk + sol.feedforward.row(k).transpose();
    sol.v_star.row(k) = vk.transpose();
    sol.z.row(k + 1) = (zk + dt * (sys.a[k] * zk + sys.b[k] * vk)).transpose();
  }
  sol.cost = flow_lqr_objective(sys, reference, w, sol.v_star);
  return sol;
}

}  // namespace covflow
