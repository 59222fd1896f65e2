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

#include "bandmf/noisegen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bandmf/errors.hpp"

namespace bandmf {

namespace {

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t step,
                           std::uint64_t coord, std::uint64_t lane) {
  std::uint64_t h = mix64(seed ^ 0x243F6A8885A308D3ULL);
  h = mix64(h ^ step);
  h = mix64(h ^ coord);
  h = mix64(h ^ lane);
  return h;
}

double uniform_from_bits(std::uint64_t bits) {
  // Top 52 bits, offset by half a step: m + 0.5 is exactly representable for
  // every m < 2^52, so the result lies strictly inside (0, 1).
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

double gaussian_sample(std::uint64_t seed, std::uint64_t step,
                       std::uint64_t coord) {
  const double u1 = uniform_from_bits(counter_hash(seed, step, coord, 0));
  const double u2 = uniform_from_bits(counter_hash(seed, step, coord, 1));
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t shard_begin(std::size_t d, const ShardSpec& shard) {
  return shard.index * d / shard.count;
}

std::size_t shard_end(std::size_t d, const ShardSpec& shard) {
  return (shard.index + 1) * d / shard.count;
}

NoiseStream::NoiseStream(NoiseStreamConfig config)
    : config_(std::move(config)),
      band_matrix_(to_band_matrix(config_.strategy)) {
  if (config_.d == 0) throw ShapeError("model dimension must be positive");
  if (config_.shard.count == 0 || config_.shard.index >= config_.shard.count) {
    throw ShapeError("shard index must lie in [0, shard count)");
  }
  if (!(config_.sigma >= 0.0)) throw ShapeError("sigma must be nonnegative");
  for (std::size_t i = 0; i < band_matrix_.n; ++i) {
    if (!(std::abs(band_matrix_.band(0, i)) > kSingularTol)) {
      throw SingularStrategyError("strategy diagonal entry " +
                                  std::to_string(i) + " is zero or subnormal");
    }
  }
  coord_begin_ = shard_begin(config_.d, config_.shard);
  coord_end_ = shard_end(config_.d, config_.shard);
  ring_.assign(band_matrix_.b * width(), 0.0);
}

std::optional<NoiseRow> NoiseStream::next_row() {
  const std::size_t n = band_matrix_.n;
  if (step_ >= n) return std::nullopt;
  const std::size_t i = step_;
  const std::size_t b = band_matrix_.b;
  const std::size_t w = width();

  NoiseRow row;
  row.step = i + 1;
  row.values.resize(w);
  for (std::size_t c = 0; c < w; ++c) {
    row.values[c] =
        config_.sigma * gaussian_sample(config_.seed, i, coord_begin_ + c);
  }
  // Alg.-1 recurrence on this shard's slice. The band sum runs in fixed
  // ascending order so every coordinate sees the same arithmetic no matter
  // which shard owns it.
  const std::size_t lmax = std::min(b - 1, i);
  for (std::size_t l = 1; l <= lmax; ++l) {
    const double coef = band_matrix_.band(l, i - l);
    if (coef == 0.0) continue;
    const double* prev = ring_.data() + ((i - l) % b) * w;
    for (std::size_t c = 0; c < w; ++c) row.values[c] -= coef * prev[c];
  }
  const double inv_diag = 1.0 / band_matrix_.band(0, i);
  double* slot = ring_.data() + (i % b) * w;
  for (std::size_t c = 0; c < w; ++c) {
    row.values[c] *= inv_diag;
    slot[c] = row.values[c];
  }
  ++step_;
  return row;
}

double verify_roundtrip(const NoiseStreamConfig& config, std::size_t n_check) {
  NoiseStream stream(config);
  if (n_check > stream.steps_total()) {
    throw ShapeError("n_check exceeds stream length");
  }
  const BandMatrix c = to_band_matrix(config.strategy);
  const std::size_t b = c.b;
  const std::size_t w = stream.width();
  const std::size_t begin = stream.coord_begin();

  // Forward-multiply the produced rows and compare against regenerated noise.
  std::vector<double> ring(b * w, 0.0);
  double max_residual = 0.0;
  for (std::size_t i = 0; i < n_check; ++i) {
    auto row = stream.next_row();
    std::copy(row->values.begin(), row->values.end(),
              ring.data() + (i % b) * w);
    for (std::size_t cidx = 0; cidx < w; ++cidx) {
      double acc = 0.0;
      const std::size_t lmax = std::min(b - 1, i);
      for (std::size_t l = 0; l <= lmax; ++l) {
        acc += c.band(l, i - l) * ring[((i - l) % b) * w + cidx];
      }
      const double z =
          config.sigma * gaussian_sample(config.seed, i, begin + cidx);
      max_residual = std::max(max_residual, std::abs(acc - z));
    }
  }
  return max_residual;
}

}  // namespace bandmf
