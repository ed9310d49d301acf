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

#ifndef COVFLOW_PARALLEL_HPP_
#define COVFLOW_PARALLEL_HPP_

#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <string>

#include "covflow/common.hpp"

namespace covflow {

// Resolves a requested worker count: values <= 0 mean "all available cores".
inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  return std::max(1, omp_get_num_procs());
}

// Runs body(i) for i in [0, n). Each index is handled by exactly one task, so
// results that depend only on i are identical for every worker count.
template <typename Body>
void parallel_for(Index n, int workers, Index chunk, Body&& body) {
  const int w = resolve_workers(workers);
  chunk = std::max<Index>(1, chunk);
  if (w == 1 || n <= chunk) {
    for (Index i = 0; i < n; ++i) body(i);
    return;
  }
#pragma omp parallel for num_threads(w) schedule(dynamic, chunk)
  for (Index i = 0; i < n; ++i) body(i);
}

}  // namespace covflow

#endif  // COVFLOW_PARALLEL_HPP_
