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

#ifndef COVFLOW_FLOW_FIELD_HPP_
#define COVFLOW_FLOW_FIELD_HPP_

#include "covflow/common.hpp"

namespace covflow {

// Reference flow a(t): one workspace vector per trajectory sample, pointing
// in a descent direction of the discrepancy to the target.
struct FlowField {
  Points vectors;

  // Stein: kernel bandwidth used; true when it was clamped because all
  // points coincide.
  double bandwidth = 0.0;
  bool degenerate_bandwidth = false;

  // Sinkhorn: false when a solve stopped between tol and 100 * tol.
  bool converged = true;
  int sinkhorn_iterations = 0;

  Index size() const { return vectors.rows(); }
  // Mean Euclidean norm of the flow vectors.
  double mean_norm() const;
};

inline double FlowField::mean_norm() const {
  if (vectors.rows() == 0) return 0.0;
  return vectors.rowwise().norm().mean();
}

}  // namespace covflow

#endif  // COVFLOW_FLOW_FIELD_HPP_
