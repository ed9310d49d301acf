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

#ifndef COVFLOW_LQR_HPP_
#define COVFLOW_LQR_HPP_

#include <vector>

#include "covflow/common.hpp"
#include "covflow/dynamics.hpp"

namespace covflow {

struct LqrWeights {
  Mat q;  // state_dim x state_dim, symmetric PSD
  Mat r;  // control_dim x control_dim, symmetric PD

  // Q = P^T (q_scale I) P, R = r_scale I: only workspace mismatch is penalized.
  static LqrWeights workspace(const Mat& projection, int control_dim, double q_scale = 1.0,
                              double r_scale = 0.1);
  // Throws InvalidArgument unless Q is PSD (eigenvalues >= -1e-10) and R is PD.
  void validate() const;
};

struct LqrSolution {
  Points v_star;  // T x control_dim
  Points z;       // (T+1) x state_dim, z[0] = 0
  std::vector<Mat> gains;  // K[k], control_dim x state_dim
  Points feedforward;      // d[k]
  double cost = 0.0;
};

// Lifts workspace vectors into state space: row k becomes P^T a[k].
Points lift_flow(const Points& workspace_flow, const Mat& projection);

// Minimizes
//   sum_{k<T} dt (|a[k] - z[k]|^2_Q + |v[k]|^2_R)  [+ dt |a[T] - z[T]|^2_Q]
// subject to z[k+1] = (I + dt A[k]) z[k] + dt B[k] v[k], z[0] = 0.
// `reference` has T rows (no terminal term) or T+1 rows (terminal term on
// z[T]). One backward Riccati sweep carries the quadratic and affine value
// terms; the forward pass applies v[k] = -K[k] z[k] + d[k].
// Throws NumericalInstability with the failing time index.
LqrSolution solve_flow_lqr(const LtvSystem& sys, const Points& reference, const LqrWeights& w);

// Objective above for an arbitrary control-gradient sequence.
double flow_lqr_objective(const LtvSystem& sys, const Points& reference, const LqrWeights& w,
                          const Points& v);

// Feasible flow generated by v from z[0] = 0.
Points propagate_flow(const LtvSystem& sys, const Points& v);

}  // namespace covflow

#endif  // COVFLOW_LQR_HPP_
