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

#include "covflow/stein_flow.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "covflow/parallel.hpp"

namespace covflow {

double median_bandwidth(const Points& points, int workers, Index chunk) {
  const Index n = points.rows();
  if (n < 2) return 1.0;
  const Index d = points.cols();
  const std::size_t pairs = static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2;
  std::vector<double> sq(pairs);
  const double* x = points.data();
  parallel_for(n - 1, workers, chunk, [&](Index i) {
    // Row i owns the slots of pairs (i, j > i).
    std::size_t slot = static_cast<std::size_t>(i) * static_cast<std::size_t>(2 * n - i - 1) / 2;
    const double* xi = x + i * d;
    for (Index j = i + 1; j < n; ++j) {
      const double* xj = x + j * d;
      double s = 0.0;
      for (Index c = 0; c < d; ++c) {
        const double diff = xi[c] - xj[c];
        s += diff * diff;
      }
      sq[slot++] = s;
    }
  });
  const std::size_t mid = pairs / 2;
  std::nth_element(sq.begin(), sq.begin() + static_cast<std::ptrdiff_t>(mid), sq.end());
  double med = std::sqrt(sq[mid]);
  if (pairs % 2 == 0) {
    const double lower = *std::max_element(sq.begin(), sq.begin() + static_cast<std::ptrdiff_t>(mid));
    med = 0.5 * (med + std::sqrt(lower));
  }
  return med * med / std::log(static_cast<double>(n) + 1.0);
}

FlowField stein_flow(const Points& points, const ReferenceDistribution& q,
                     const SteinConfig& cfg) {
  const Index n = points.rows();
  const Index d = points.cols();
  if (n < 1) throw InvalidArgument("stein_flow: need at least one point");
  if (d != q.dim()) throw InvalidArgument("stein_flow: point / reference dimension mismatch");
  if (!points.allFinite()) throw InvalidArgument("stein_flow: non-finite points");
  const GaussianMixture& mixture = q.mixture();

  FlowField out;
  double h = 0.0;
  if (cfg.bandwidth.kind == Bandwidth::Kind::kFixed) {
    if (!(cfg.bandwidth.h > 0.0)) throw InvalidArgument("stein_flow: fixed bandwidth must be positive");
    h = cfg.bandwidth.h;
  } else {
    h = median_bandwidth(points, cfg.workers, cfg.parallel_chunk);
  }
  if (h <= kMinBandwidth) {
    h = kMinBandwidth;
    out.degenerate_bandwidth = true;
  }
  out.bandwidth = h;

  Points scores(n, d);
  parallel_for(n, cfg.workers, cfg.parallel_chunk, [&](Index j) {
    scores.row(j) = mixture.score(points.row(j).transpose()).transpose();
  });

  out.vectors.resize(n, d);
  const double inv_h = 1.0 / h;
  const double inv_n = 1.0 / static_cast<double>(n);
  // Coordinate-major copies: each output is a few vectorized sweeps over j.
  const Mat xt = points.transpose();
  const Mat st = scores.transpose();
  parallel_for(n, cfg.workers, cfg.parallel_chunk, [&](Index i) {
    thread_local Eigen::ArrayXd k;
    k = Eigen::ArrayXd::Zero(n);
    for (Index c = 0; c < d; ++c) k += (xt.row(c).transpose().array() - points(i, c)).square();
    k = (-inv_h * k).exp();
    for (Index c = 0; c < d; ++c) {
      const double attract = (k * st.row(c).transpose().array()).sum();
      const double repel = (k * (points(i, c) - xt.row(c).transpose().array())).sum();
      out.vectors(i, c) = (attract + 2.0 * inv_h * repel) * inv_n;
    }
  });
  if (!out.vectors.allFinite()) throw FlowError("stein_flow: non-finite flow");
  return out;
}

FlowField stein_flow_on_trajectory(const Points& states, const DynamicsModel& model,
                                   const ReferenceDistribution& q, const SteinConfig& cfg) {
  if (states.rows() < 2) throw InvalidArgument("stein_flow_on_trajectory: need at least two states");
  const Points projected = model.project_all(states.bottomRows(states.rows() - 1));
  return stein_flow(projected, q, cfg);
}

}  // namespace covflow
