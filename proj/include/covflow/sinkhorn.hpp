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

#ifndef COVFLOW_SINKHORN_HPP_
#define COVFLOW_SINKHORN_HPP_

#include <optional>

#include "covflow/common.hpp"
#include "covflow/flow_field.hpp"
#include "covflow/reference.hpp"

namespace covflow {

struct SinkhornConfig {
  std::optional<double> omega;  // entropic weight; nullopt selects auto_omega
  int max_iters = 1000;
  double tol = 1e-6;            // max marginal violation
  Index parallel_chunk = 64;
  int workers = 0;
  // Geometric omega schedule (halving from the largest cost) on cold starts.
  bool anneal = true;
};

// 0.05 * mean_{i,j} |x_i - y_j|^2, computed in closed form.
double auto_omega(const Points& x, const Points& y);

// Dual potentials of the uniform-marginal problem. The plan is
//   T_ij = (1/n)(1/m) exp((f_i + g_j - |x_i - y_j|^2) / omega).
struct SinkhornSolution {
  Vec f;
  Vec g;
  double omega = 0.0;
  // sum T_ij c_ij + omega sum T_ij log T_ij at the returned potentials.
  double cost = 0.0;
  int iters_used = 0;
  bool converged = false;
  double marginal_violation = 0.0;

  Mat plan(const Points& x, const Points& y) const;
};

struct Potentials {
  Vec f;
  Vec g;
};

// Log-domain Sinkhorn with squared Euclidean cost. Alternates g- and
// f-updates until the row marginal violation is <= tol (columns are exact
// after each g-update) or max_iters is reached; the converged flag reports
// which happened. `warm` seeds the potentials and disables annealing.
SinkhornSolution entropic_ot(const Points& x, const Points& y, const SinkhornConfig& cfg,
                             const Potentials* warm = nullptr);

// OT(X, X) by the averaged symmetric fixed point f <- (f + T(f)) / 2; g == f.
SinkhornSolution entropic_ot_self(const Points& x, const SinkhornConfig& cfg,
                                  const Vec* warm = nullptr);

struct DivergenceParts {
  double value = 0.0;
  double omega = 0.0;
  SinkhornSolution xy;
  SinkhornSolution xx;
  SinkhornSolution yy;
};

// S(X, Y) = OT(X, Y) - OT(X, X) / 2 - OT(Y, Y) / 2, one omega for all terms.
// A precomputed OT(Y, Y) at the same omega may be passed as `yy`.
DivergenceParts sinkhorn_divergence_parts(const Points& x, const Points& y,
                                          const SinkhornConfig& cfg,
                                          const SinkhornSolution* yy = nullptr);
double sinkhorn_divergence(const Points& x, const Points& y, const SinkhornConfig& cfg);

// grad_{x_i} S(X, Y) from converged plans (envelope theorem). omega is held
// fixed, including when it was chosen automatically.
Points sinkhorn_divergence_gradient(const Points& x, const Points& y,
                                    const SinkhornSolution& xy, const SinkhornSolution& xx,
                                    int workers = 0, Index chunk = 64);

// Potentials carried between successive flow evaluations on nearby samples.
struct SinkhornWarmStart {
  Potentials xy;
  Vec xx;
};

// -grad_{x_i} S(X, Y) against the target cloud. Throws FlowError if either
// solve ends with violation > 100 tol; violations in (tol, 100 tol] are
// returned with converged == false.
FlowField sinkhorn_flow(const Points& x, const ReferenceDistribution& q,
                        const SinkhornConfig& cfg, SinkhornWarmStart* warm = nullptr);

}  // namespace covflow

#endif  // COVFLOW_SINKHORN_HPP_
