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

#include "covflow/reference.hpp"

#include <cmath>
#include <numbers>

namespace covflow {

GaussianMixture::GaussianMixture(std::vector<double> weights, Points means,
                                 std::vector<Mat> covariances)
    : weights_(std::move(weights)),
      means_(std::move(means)),
      covariances_(std::move(covariances)) {
  const std::size_t k = weights_.size();
  if (k == 0) throw InvalidArgument("mixture needs at least one component");
  if (static_cast<std::size_t>(means_.rows()) != k || covariances_.size() != k) {
    throw InvalidArgument("mixture weights, means and covariances disagree in count");
  }
  if (!means_.allFinite()) throw InvalidArgument("mixture means must be finite");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w > 0.0) || !std::isfinite(w)) throw InvalidArgument("mixture weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("mixture weights must sum to 1");

  const Index d = means_.cols();
  for (std::size_t i = 0; i < k; ++i) {
    const Mat& cov = covariances_[i];
    if (cov.rows() != d || cov.cols() != d) {
      throw InvalidArgument("covariance shape does not match workspace dimension");
    }
    if (!cov.allFinite() || !cov.isApprox(cov.transpose(), 1e-12)) {
      throw InvalidArgument("covariance " + std::to_string(i) + " is not symmetric");
    }
    Eigen::LLT<Mat> llt(cov);
    if (llt.info() != Eigen::Success) {
      throw InvalidArgument("covariance " + std::to_string(i) + " is not positive definite");
    }
    Mat l = llt.matrixL();
    double log_det = 2.0 * l.diagonal().array().log().sum();
    cholesky_.push_back(l);
    precisions_.push_back(llt.solve(Mat::Identity(d, d)));
    log_norm_.push_back(std::log(weights_[i]) -
                        0.5 * (static_cast<double>(d) * std::log(2.0 * std::numbers::pi) + log_det));
  }
}

double GaussianMixture::log_density(const Vec& x) const {
  const int k = components();
  Eigen::ArrayXd logp(k);
  for (int i = 0; i < k; ++i) {
    const Vec r = x - means_.row(i).transpose();
    logp(i) = log_norm_[i] - 0.5 * r.dot(precisions_[i] * r);
  }
  const double top = logp.maxCoeff();
  return top + std::log((logp - top).exp().sum());
}

Vec GaussianMixture::score(const Vec& x) const {
  const int k = components();
  const Index d = dim();
  Eigen::ArrayXd logp(k);
  Mat grads(d, k);
  for (int i = 0; i < k; ++i) {
    const Vec r = x - means_.row(i).transpose();
    const Vec pr = precisions_[i] * r;
    logp(i) = log_norm_[i] - 0.5 * r.dot(pr);
    grads.col(i) = -pr;
  }
  const double top = logp.maxCoeff();
  Eigen::ArrayXd resp = (logp - top).exp();
  resp /= resp.sum();
  return grads * resp.matrix();
}

GaussianMixture GaussianMixture::translated(const Vec& offset) const {
  Points shifted = means_.rowwise() + offset.transpose();
  return GaussianMixture(weights_, shifted, covariances_);
}

PointCloud::PointCloud(Points points) : points_(std::move(points)) {
  if (points_.rows() < 1) throw InvalidArgument("point cloud needs at least one point");
  if (!points_.allFinite()) throw InvalidArgument("point cloud contains non-finite values");
}

int ReferenceDistribution::dim() const {
  return std::visit([](const auto& r) { return r.dim(); }, repr_);
}

const GaussianMixture& ReferenceDistribution::mixture() const {
  if (!is_score_based()) throw InvalidArgument("reference distribution is not score-based");
  return std::get<GaussianMixture>(repr_);
}

const PointCloud& ReferenceDistribution::cloud() const {
  if (!is_sample_based()) throw InvalidArgument("reference distribution is not sample-based");
  return std::get<PointCloud>(repr_);
}

Vec score(const ReferenceDistribution& q, const Vec& x) { return q.mixture().score(x); }

Points sample(const ReferenceDistribution& q, Index n, RngSeed seed) {
  if (n < 1) throw InvalidArgument("sample: n must be at least 1");
  Rng rng(seed);
  Points out(n, q.dim());
  if (q.is_sample_based()) {
    const Points& pts = q.cloud().points();
    for (Index i = 0; i < n; ++i) out.row(i) = pts.row(static_cast<Index>(rng.index(pts.rows())));
    return out;
  }
  const GaussianMixture& gm = q.mixture();
  const auto& w = gm.weights();
  Vec z(gm.dim());
  for (Index i = 0; i < n; ++i) {
    double u = rng.uniform();
    int comp = gm.components() - 1;
    for (int c = 0; c < gm.components(); ++c) {
      if (u < w[c]) {
        comp = c;
        break;
      }
      u -= w[c];
    }
    for (Index j = 0; j < z.size(); ++j) z(j) = rng.normal();
    out.row(i) = gm.means().row(comp) + (gm.cholesky(comp) * z).transpose();
  }
  return out;
}

ReferenceDistribution to_sample_based(const ReferenceDistribution& q, Index m, RngSeed seed) {
  if (m < 1) throw InvalidArgument("to_sample_based: m must be at least 1");
  return PointCloud(sample(q, m, seed));
}

GaussianMixture coverage_fixture(int dim) {
  if (dim != 2 && dim != 3) throw InvalidArgument("coverage fixture exists for 2D and 3D only");
  Points means(3, dim);
  if (dim == 2) {
    means << 0.25, 0.25, 0.75, 0.35, 0.4, 0.8;
  } else {
    means << 0.25, 0.25, 0.35, 0.75, 0.35, 0.5, 0.4, 0.8, 0.65;
  }
  std::vector<Mat> covs(3, 0.02 * Mat::Identity(dim, dim));
  return GaussianMixture({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, means, covs);
}

}  // namespace covflow
