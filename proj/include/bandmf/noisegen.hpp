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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "bandmf/slo.hpp"
#include "bandmf/strategy.hpp"

namespace bandmf {

// Counter-based generator: the Gaussian for coordinate j at step i is a pure
// function of (seed, i, j). This is what makes shard outputs independent of
// how coordinates are split across machines.
std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t step,
                           std::uint64_t coord, std::uint64_t lane);
double uniform_from_bits(std::uint64_t bits);  // in (0, 1)
double gaussian_sample(std::uint64_t seed, std::uint64_t step,
                       std::uint64_t coord);   // standard normal, Box-Muller

struct ShardSpec {
  std::size_t index = 0;
  std::size_t count = 1;
};

struct NoiseStreamConfig {
  Strategy strategy;
  std::size_t d = 1;        // model dimension
  double sigma = 1.0;       // noise multiplier
  std::uint64_t seed = 0;   // master seed shared by all shards
  ShardSpec shard;
};

struct NoiseRow {
  std::size_t step = 0;         // 1-based, in [1, n]
  std::vector<double> values;   // this shard's coordinate slice
};

// Deterministic, seeded, shardable producer of the correlated noise rows
// y_i = rows of C^{-1} Z with Z_ij ~ N(0, sigma^2). One stream per shard;
// shards run fully independently, a single stream is sequential. Keeps the
// last b-1 rows of its slice: O(b * slice) memory.
class NoiseStream {
 public:
  explicit NoiseStream(NoiseStreamConfig config);

  // Next row, or nullopt once n rows have been produced.
  std::optional<NoiseRow> next_row();

  std::size_t steps_total() const { return band_matrix_.n; }
  std::size_t steps_produced() const { return step_; }
  std::size_t coord_begin() const { return coord_begin_; }
  std::size_t coord_end() const { return coord_end_; }
  std::size_t width() const { return coord_end_ - coord_begin_; }

 private:
  NoiseStreamConfig config_;
  BandMatrix band_matrix_;
  std::size_t coord_begin_ = 0;
  std::size_t coord_end_ = 0;
  std::size_t step_ = 0;              // rows produced so far
  std::vector<double> ring_;          // b rows of width, slot i%b = y_i
};

// Shard coordinate range [floor(s d / S), floor((s+1) d / S)); the ranges
// partition [0, d).
std::size_t shard_begin(std::size_t d, const ShardSpec& shard);
std::size_t shard_end(std::size_t d, const ShardSpec& shard);

// Validation harness: regenerate Z from the counter-based generator, apply
// the forward banded multiply to the produced rows, and return
// max |C Y - Z| over the first n_check steps. Must be < 1e-6 * sigma.
double verify_roundtrip(const NoiseStreamConfig& config, std::size_t n_check);

}  // namespace bandmf
