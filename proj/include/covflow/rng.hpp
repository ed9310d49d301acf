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

#ifndef COVFLOW_RNG_HPP_
#define COVFLOW_RNG_HPP_

#include <cstdint>
#include <random>

namespace covflow {

struct RngSeed {
  std::uint64_t value = 0;
};

// SplitMix64 finalizer. Used to derive independent child seeds.
std::uint64_t mix64(std::uint64_t x);

// Seeded 64-bit generator: std::mt19937_64 whose state is initialized from a
// SplitMix64-mixed seed. split(stream) derives a child generator whose seed
// depends only on (parent seed, stream), never on how much the parent has
// been consumed, so sub-streams are stable under code reordering.
class Rng {
 public:
  explicit Rng(RngSeed seed);

  Rng split(std::uint64_t stream) const;
  RngSeed seed() const { return seed_; }

  double uniform();  // [0, 1)
  double normal();   // standard normal
  std::size_t index(std::size_t n);  // uniform in [0, n)

  std::mt19937_64& engine() { return engine_; }

 private:
  RngSeed seed_;
  std::mt19937_64 engine_;
};

}  // namespace covflow

#endif  // COVFLOW_RNG_HPP_
