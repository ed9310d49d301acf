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

#ifndef COVFLOW_COMMON_HPP_
#define COVFLOW_COMMON_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace covflow {

using Index = Eigen::Index;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Point sets and time series: one row per sample / time step.
using Points = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A state became non-finite during integration.
class RolloutDivergence : public Error {
 public:
  RolloutDivergence(Index step, const std::string& what)
      : Error(what), step_(step) {}
  Index step() const { return step_; }

 private:
  Index step_;
};

// Riccati recursion produced non-finite value matrices.
class NumericalInstability : public Error {
 public:
  NumericalInstability(Index time_index, const std::string& what)
      : Error(what), time_index_(time_index) {}
  Index time_index() const { return time_index_; }

 private:
  Index time_index_;
};

// Flow evaluation could not produce a trustworthy vector field.
class FlowError : public Error {
 public:
  using Error::Error;
};

inline bool all_finite(const Points& p) { return p.allFinite(); }

}  // namespace covflow

#endif  // COVFLOW_COMMON_HPP_
