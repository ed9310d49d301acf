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

#include "covflow/sinkhorn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "covflow/parallel.hpp"

namespace covflow {

namespace {

inline double sq_dist(const double* a, const double* b, Index d) {
  double s = 0.0;
  for (Index c = 0; c < d; ++c) {
    const double diff = a[c] - b[c];
    s += diff * diff;
  }
  return s;
}

// out_i = -omega * log( sum_j (1/m) exp((pot_j - c(x_i, y_j)) / omega) ),
// two-pass log-sum-exp over a per-row buffer.
void soft_min_update(const Points& x, const Points& y, const Vec& pot, double omega,
                     int workers, Index chunk, Vec& out) {
  const Index n = x.rows();
  const Index m = y.rows();
  const Index d = x.cols();
  const double log_m = std::log(static_cast<double>(m));
  const double inv_omega = 1.0 / omega;
  out.resize(n);
  // One contiguous row per coordinate so the distance pass vectorizes.
  const Mat yt = y.transpose();
  parallel_for(n, workers, chunk, [&](Index i) {
    thread_local Eigen::ArrayXd v;
    v = pot.array();
    for (Index c = 0; c < d; ++c) v -= (yt.row(c).transpose().array() - x(i, c)).square();
    v *= inv_omega;
    const double top = v.maxCoeff();
    const double sum = (v - top).exp().sum();
    out(i) = -omega * (top + std::log(sum) - log_m);
  });
}

double row_violation(const Vec& f, const Vec& f_next, double omega) {
  const double a = 1.0 / static_cast<double>(f.size());
  double worst = 0.0;
  for (Index i = 0; i < f.size(); ++i) {
    worst = std::max(worst, std::abs(a * std::exp((f(i) - f_next(i)) / omega) - a));
  }
  return worst;
}

double max_cost(const Points& x, const Points& y) {
  // Bounding-box diagonal bound: cheap and only used for the annealing start.
  Eigen::RowVectorXd lo = x.colwise().minCoeff().cwiseMin(y.colwise().minCoeff());
  Eigen::RowVectorXd hi = x.colwise().maxCoeff().cwiseMax(y.colwise().maxCoeff());
  return (hi - lo).squaredNorm();
}

void check_inputs(const Points& x, const Points& y, const SinkhornConfig& cfg) {
  if (x.rows() < 1 || y.rows() < 1) throw InvalidArgument("sinkhorn: empty point set");
  if (x.cols() != y.cols()) throw InvalidArgument("sinkhorn: dimension mismatch");
  if (!x.allFinite() || !y.allFinite()) throw InvalidArgument("sinkhorn: non-finite points");
  if (!std::isfinite(max_cost(x, y))) throw InvalidArgument("sinkhorn: non-finite cost entries");
  if (!(cfg.tol > 0.0)) throw InvalidArgument("sinkhorn: tol must be positive");
  if (cfg.max_iters < 1) throw InvalidArgument("sinkhorn: max_iters must be positive");
  if (cfg.omega && !(*cfg.omega > 0.0)) throw InvalidArgument("sinkhorn: omega must be positive");
}

std::vector<double> anneal_schedule(double omega, double cmax) {
  std::vector<double> stages;
  double s = omega;
  while (2.0 * s < cmax) {
    s *= 2.0;
    stages.push_back(s);
  }
  std::reverse(stages.begin(), stages.end());
  return stages;
}

constexpr int kAnnealStageIters = 20;

struct Run {
  int iters = 0;
  double violation = 0.0;
  bool converged = false;
};

Run run_alternating(const Points& x, const Points& y, double omega, int max_iters, double tol,
                    const SinkhornConfig& cfg, Vec& f, Vec& g) {
  Run r;
  Vec f_next;
  for (int it = 0; it < max_iters; ++it) {
    soft_min_update(y, x, f, omega, cfg.workers, cfg.parallel_chunk, g);
    soft_min_update(x, y, g, omega, cfg.workers, cfg.parallel_chunk, f_next);
    r.iters = it + 1;
    r.violation = row_violation(f, f_next, omega);
    if (r.violation <= tol) {
      r.converged = true;
      break;
    }
    f.swap(f_next);
  }
  return r;
}

Run run_symmetric(const Points& x, double omega, int max_iters, double tol,
                  const SinkhornConfig& cfg, Vec& f, Vec* last_update) {
  Run r;
  Vec u;
  for (int it = 0; it < max_iters; ++it) {
    soft_min_update(x, x, f, omega, cfg.workers, cfg.parallel_chunk, u);
    r.iters = it + 1;
    r.violation = row_violation(f, u, omega);
    if (r.violation <= tol) {
      r.converged = true;
      break;
    }
    f = 0.5 * (f + u);
  }
  if (last_update) *last_update = u;
  return r;
}

}  // namespace

double auto_omega(const Points& x, const Points& y) {
  const Eigen::RowVectorXd mx = x.colwise().mean();
  const Eigen::RowVectorXd my = y.colwise().mean();
  const double ex = x.rowwise().squaredNorm().mean();
  const double ey = y.rowwise().squaredNorm().mean();
  const double mean_sq = ex + ey - 2.0 * mx.dot(my);
  const double omega = 0.05 * mean_sq;
  // Identical single points: fall back to a unit-scale weight.
  return omega > 1e-12 ? omega : 1e-3;
}

Mat SinkhornSolution::plan(const Points& x, const Points& y) const {
  const Index n = x.rows(), m = y.rows(), d = x.cols();
  const double log_ab = -std::log(static_cast<double>(n)) - std::log(static_cast<double>(m));
  Mat t(n, m);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < m; ++j) {
      const double c = sq_dist(x.data() + i * d, y.data() + j * d, d);
      t(i, j) = std::exp(log_ab + (f(i) + g(j) - c) / omega);
    }
  }
  return t;
}

SinkhornSolution entropic_ot(const Points& x, const Points& y, const SinkhornConfig& cfg,
                             const Potentials* warm) {
  check_inputs(x, y, cfg);
  const Index n = x.rows(), m = y.rows();
  SinkhornSolution sol;
  sol.omega = cfg.omega ? *cfg.omega : auto_omega(x, y);
  Vec f = Vec::Zero(n);
  Vec g = Vec::Zero(m);
  const bool warm_ok = warm && warm->f.size() == n && warm->g.size() == m;
  if (warm_ok) {
    f = warm->f;
    g = warm->g;
  } else if (cfg.anneal) {
    for (double stage : anneal_schedule(sol.omega, max_cost(x, y))) {
      sol.iters_used += run_alternating(x, y, stage, kAnnealStageIters, cfg.tol, cfg, f, g).iters;
    }
  }
  const Run r = run_alternating(x, y, sol.omega, cfg.max_iters, cfg.tol, cfg, f, g);
  sol.iters_used += r.iters;
  sol.converged = r.converged;
  sol.marginal_violation = r.violation;
  sol.f = std::move(f);
  sol.g = std::move(g);
  // Column marginals are exact for (f, g), so the plan has unit mass and the
  // dual objective reduces to <a, f> + <b, g>.
  sol.cost = sol.f.mean() + sol.g.mean() -
             sol.omega * (std::log(static_cast<double>(n)) + std::log(static_cast<double>(m)));
  return sol;
}

SinkhornSolution entropic_ot_self(const Points& x, const SinkhornConfig& cfg, const Vec* warm) {
  check_inputs(x, x, cfg);
  const Index n = x.rows();
  SinkhornSolution sol;
  sol.omega = cfg.omega ? *cfg.omega : auto_omega(x, x);
  Vec f = Vec::Zero(n);
  if (warm && warm->size() == n) {
    f = *warm;
  } else if (cfg.anneal) {
    for (double stage : anneal_schedule(sol.omega, max_cost(x, x))) {
      sol.iters_used += run_symmetric(x, stage, kAnnealStageIters, cfg.tol, cfg, f, nullptr).iters;
    }
  }
  Vec u;
  const Run r = run_symmetric(x, sol.omega, cfg.max_iters, cfg.tol, cfg, f, &u);
  sol.iters_used += r.iters;
  sol.converged = r.converged;
  sol.marginal_violation = r.violation;
  // Total plan mass: sum_i a exp((f_i - u_i) / omega).
  const double a = 1.0 / static_cast<double>(n);
  double mass = 0.0;
  for (Index i = 0; i < n; ++i) mass += a * std::exp((f(i) - u(i)) / sol.omega);
  sol.cost = 2.0 * f.mean() - sol.omega * (mass - 1.0) -
             2.0 * sol.omega * std::log(static_cast<double>(n));
  sol.g = f;
  sol.f = std::move(f);
  return sol;
}

DivergenceParts sinkhorn_divergence_parts(const Points& x, const Points& y,
                                          const SinkhornConfig& cfg,
                                          const SinkhornSolution* yy) {
  check_inputs(x, y, cfg);
  SinkhornConfig fixed = cfg;
  fixed.omega = cfg.omega ? *cfg.omega : auto_omega(x, y);
  DivergenceParts parts;
  parts.omega = *fixed.omega;
  parts.xy = entropic_ot(x, y, fixed);
  parts.xx = entropic_ot_self(x, fixed);
  if (yy) {
    if (yy->omega != parts.omega || yy->f.size() != y.rows()) {
      throw InvalidArgument("sinkhorn_divergence: cached OT(Y, Y) does not match");
    }
    parts.yy = *yy;
  } else {
    parts.yy = entropic_ot_self(y, fixed);
  }
  parts.value = parts.xy.cost - 0.5 * parts.xx.cost - 0.5 * parts.yy.cost;
  return parts;
}

double sinkhorn_divergence(const Points& x, const Points& y, const SinkhornConfig& cfg) {
  return sinkhorn_divergence_parts(x, y, cfg).value;
}

Points sinkhorn_divergence_gradient(const Points& x, const Points& y,
                                    const SinkhornSolution& xy, const SinkhornSolution& xx,
                                    int workers, Index chunk) {
  const Index n = x.rows(), m = y.rows(), d = x.cols();
  const double omega = xy.omega;
  const double log_ab = -std::log(static_cast<double>(n)) - std::log(static_cast<double>(m));
  const double log_aa = -2.0 * std::log(static_cast<double>(n));
  Points grad(n, d);
  const Mat xt = x.transpose();
  const Mat yt = y.transpose();
  // Per-row plan weights t_j = T_ij, then sum_j t_j (x_i - p_j) per coordinate.
  auto pull = [d](const Mat& pt, const Vec& pot, double shift, double omega, Index i,
                  const Points& xs, Eigen::ArrayXd& t, double* out) {
    t = pot.array();
    for (Index c = 0; c < d; ++c) t -= (pt.row(c).transpose().array() - xs(i, c)).square();
    t = (shift + t / omega).exp();
    for (Index c = 0; c < d; ++c) out[c] = (t * (xs(i, c) - pt.row(c).transpose().array())).sum();
  };
  parallel_for(n, workers, chunk, [&](Index i) {
    thread_local Eigen::ArrayXd t;
    thread_local std::vector<double> a, b;
    a.assign(static_cast<std::size_t>(d), 0.0);
    b.assign(static_cast<std::size_t>(d), 0.0);
    // OT(X, Y) term: 2 sum_j T_ij (x_i - y_j).
    pull(yt, xy.g, log_ab + xy.f(i) / omega, omega, i, x, t, a.data());
    // -OT(X, X) / 2 term: both slots move, giving -2 sum_j T_ij (x_i - x_j).
    pull(xt, xx.f, log_aa + xx.f(i) / omega, omega, i, x, t, b.data());
    for (Index c = 0; c < d; ++c) grad(i, c) = 2.0 * a[static_cast<std::size_t>(c)] - 2.0 * b[static_cast<std::size_t>(c)];
  });
  return grad;
}

FlowField sinkhorn_flow(const Points& x, const ReferenceDistribution& q,
                        const SinkhornConfig& cfg, SinkhornWarmStart* warm) {
  const Points& y = q.cloud().points();
  check_inputs(x, y, cfg);
  SinkhornConfig fixed = cfg;
  fixed.omega = cfg.omega ? *cfg.omega : auto_omega(x, y);

  const SinkhornSolution xy = entropic_ot(x, y, fixed, warm ? &warm->xy : nullptr);
  const SinkhornSolution xx = entropic_ot_self(x, fixed, warm ? &warm->xx : nullptr);
  const double worst = std::max(xy.marginal_violation, xx.marginal_violation);
  if (worst > 100.0 * cfg.tol) {
    throw FlowError("sinkhorn_flow: marginal violation " + std::to_string(worst) +
                    " exceeds 100 * tol; gradient is untrustworthy");
  }
  FlowField out;
  out.converged = xy.converged && xx.converged;
  out.sinkhorn_iterations = xy.iters_used + xx.iters_used;
  out.vectors = -sinkhorn_divergence_gradient(x, y, xy, xx, cfg.workers, cfg.parallel_chunk);
  if (warm) {
    warm->xy = {xy.f, xy.g};
    warm->xx = xx.f;
  }
  return out;
}

}  // namespace covflow
