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

#ifndef COVFLOW_REFERENCE_HPP_
#define COVFLOW_REFERENCE_HPP_

#include <variant>
#include <vector>

#include "covflow/common.hpp"
#include "covflow/rng.hpp"

namespace covflow {

// Gaussian mixture over the workspace. Validated on construction: weights are
// positive and sum to one, covariances are symmetric positive definite.
class GaussianMixture {
 public:
  GaussianMixture(std::vector<double> weights, Points means, std::vector<Mat> covariances);

  int dim() const { return static_cast<int>(means_.cols()); }
  int components() const { return static_cast<int>(weights_.size()); }
  const std::vector<double>& weights() const { return weights_; }
  const Points& means() const { return means_; }
  const std::vector<Mat>& covariances() const { return covariances_; }
  const Mat& cholesky(int k) const { return cholesky_[k]; }

  double log_density(const Vec& x) const;
  // grad log q(x), responsibilities stabilized by log-sum-exp.
  Vec score(const Vec& x) const;

  GaussianMixture translated(const Vec& offset) const;

 private:
  std::vector<double> weights_;
  Points means_;
  std::vector<Mat> covariances_;
  std::vector<Mat> cholesky_;    // lower factors
  std::vector<Mat> precisions_;
  std::vector<double> log_norm_;  // log w_k - 0.5 log det(2 pi Sigma_k)
};

// Uniformly weighted point cloud.
class PointCloud {
 public:
  explicit PointCloud(Points points);

  int dim() const { return static_cast<int>(points_.cols()); }
  Index size() const { return points_.rows(); }
  const Points& points() const { return points_; }

 private:
  Points points_;
};

class ReferenceDistribution {
 public:
  ReferenceDistribution(GaussianMixture mixture) : repr_(std::move(mixture)) {}  // NOLINT
  ReferenceDistribution(PointCloud cloud) : repr_(std::move(cloud)) {}          // NOLINT

  bool is_score_based() const { return std::holds_alternative<GaussianMixture>(repr_); }
  bool is_sample_based() const { return std::holds_alternative<PointCloud>(repr_); }
  int dim() const;

  const GaussianMixture& mixture() const;
  const PointCloud& cloud() const;

 private:
  std::variant<GaussianMixture, PointCloud> repr_;
};

// Throws InvalidArgument for sample-based distributions.
Vec score(const ReferenceDistribution& q, const Vec& x);

// Mixture: ancestral sampling. Point cloud: resampling with replacement.
Points sample(const ReferenceDistribution& q, Index n, RngSeed seed);

ReferenceDistribution to_sample_based(const ReferenceDistribution& q, Index m, RngSeed seed);

// Benchmark task: three equal-weight isotropic components (covariance 0.02 I)
// in the unit square (dim 2) or unit cube (dim 3).
GaussianMixture coverage_fixture(int dim);

}  // namespace covflow

#endif  // COVFLOW_REFERENCE_HPP_
