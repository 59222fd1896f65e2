// Copyright 2026 The bandmf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <vector>

#include "bandmf/strategy.hpp"

namespace bandmf::testing {

// Published optimal 3-banded strategy for 9 iterations, printed to three
// decimals. Used as a recurrence fixture throughout the tests.
inline Dense example_9x9_strategy() {
  const double m[9][9] = {
      {0.740, 0, 0, 0, 0, 0, 0, 0, 0},
      {0.500, 0.822, 0, 0, 0, 0, 0, 0, 0},
      {0.450, 0.492, 0.876, 0, 0, 0, 0, 0, 0},
      {0, 0.286, 0.395, 0.821, 0, 0, 0, 0, 0},
      {0, 0, 0.278, 0.462, 0.855, 0, 0, 0, 0},
      {0, 0, 0, 0.335, 0.442, 0.882, 0, 0, 0},
      {0, 0, 0, 0, 0.272, 0.403, 0.892, 0, 0},
      {0, 0, 0, 0, 0, 0.243, 0.409, 0.936, 0},
      {0, 0, 0, 0, 0, 0, 0.194, 0.353, 1.000}};
  Dense d(9, 9);
  for (int i = 0; i < 9; ++i) {
    for (int j = 0; j < 9; ++j) d.at(i, j) = m[i][j];
  }
  return d;
}

inline BandMatrix example_9x9_bands() {
  const Dense d = example_9x9_strategy();
  BandMatrix c(9, 3);
  for (std::size_t l = 0; l < 3; ++l) {
    for (std::size_t j = 0; j + l < 9; ++j) c.band(l, j) = d.at(j + l, j);
  }
  return c;
}

// Raw band entries of the printed matrix reinterpreted as banded parameters
// (the induced strategy renormalizes the almost-unit columns).
inline BandedParams example_9x9_params() {
  const Dense d = example_9x9_strategy();
  BandedParams p(9, 3);
  for (std::size_t l = 0; l < 3; ++l) {
    for (std::size_t j = 0; j + l < 9; ++j) p.param(l, j) = d.at(j + l, j);
  }
  return p;
}

// Small deterministic generator for test instances (xorshift-style, stable
// across platforms; std distributions are not).
class TestRng {
 public:
  explicit TestRng(std::uint64_t seed) : state_(seed ^ 0x9E3779B97F4A7C15ULL) {
    next_u64();
  }

  std::uint64_t next_u64() {
    state_ ^= state_ << 13;
    state_ ^= state_ >> 7;
    state_ ^= state_ << 17;
    return state_;
  }

  double uniform(double lo, double hi) {
    const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }

  std::size_t index(std::size_t n) { return next_u64() % n; }

 private:
  std::uint64_t state_;
};

// Random well-conditioned instances: diagonally dominant band columns.
inline BandedParams random_banded(std::size_t n, std::size_t b, TestRng& rng) {
  BandedParams s(n, b);
  for (std::size_t j = 0; j < n; ++j) {
    s.param(0, j) = rng.uniform(0.8, 1.2);
    for (std::size_t l = 1; l < b; ++l) {
      s.param(l, j) = rng.uniform(0.0, 0.5 / static_cast<double>(l));
    }
  }
  return s;
}

inline ToeplitzCoeffs random_toeplitz(std::size_t n, std::size_t b,
                                      TestRng& rng) {
  std::vector<double> theta(b);
  theta[0] = rng.uniform(0.8, 1.2);
  for (std::size_t l = 1; l < b; ++l) {
    theta[l] = rng.uniform(0.0, 0.5 / static_cast<double>(l));
  }
  return ToeplitzCoeffs(n, theta);
}

inline std::vector<std::vector<double>> random_stream(std::size_t n,
                                                      std::size_t d,
                                                      TestRng& rng) {
  std::vector<std::vector<double>> z(n, std::vector<double>(d));
  for (auto& row : z) {
    for (auto& v : row) v = rng.uniform(-1.0, 1.0);
  }
  return z;
}

}  // namespace bandmf::testing
