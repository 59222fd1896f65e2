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
#include <iosfwd>
#include <string>
#include <vector>

#include "bandmf/optimizer.hpp"

namespace bandmf {

// Renyi accounting, integer orders 2..256. Conservative relative to PLD
// accounting: calibrated sigmas are slightly larger, so quantitative targets
// are reproduced as trends and ratios rather than absolute values.
inline constexpr int kMinRdpOrder = 2;
inline constexpr int kMaxRdpOrder = 256;
inline constexpr double kSigmaSearchLo = 1e-3;
inline constexpr double kSigmaSearchHi = 1e6;
inline constexpr double kSigmaSearchTol = 1e-4;

struct PrivacyParams {
  double epsilon = 1.0;
  double delta = 1e-8;
  std::size_t n = 1;  // training iterations
  double k = 1.0;     // epochs: expected participations per example

  double sampling_probability() const {
    return k / static_cast<double>(n);
  }

  // Throws InfeasibleError on invalid domains; returns non-fatal warnings
  // (e.g. delta >= 1/n).
  std::vector<std::string> validate() const;
};

// Per-step Renyi DP of the Poisson-subsampled Gaussian at integer order
// alpha, via the binomial-expansion bound
//   (1/(alpha-1)) log sum_j C(alpha,j) (1-q)^(alpha-j) q^j e^{j(j-1)/2sigma^2}.
// Reduces to alpha/(2 sigma^2) at q = 1.
double rdp_subsampled_gaussian(double q, double sigma, int alpha);

// epsilon(delta) = min_alpha [ steps * eps_RDP(alpha) + log(1/delta)/(alpha-1) ].
double epsilon_for_sigma(double q, std::size_t steps, double sigma,
                         double delta);

// Smallest sigma (binary search to kSigmaSearchTol) whose recomputed epsilon
// is <= the target. Throws CalibrationRangeError when the target is
// unreachable within [kSigmaSearchLo, kSigmaSearchHi].
double calibrate_sigma(double q, std::size_t steps, double epsilon,
                       double delta);

// Noise multiplier for subsampled-Gaussian SGD at q = k/n over n steps.
double sigma_sgd(const PrivacyParams& params);

// Amplification mapping for the banded mechanism: q' = min(1, b k / n)
// composed over ceil(n/b) steps. b = 1 reproduces sigma_sgd exactly; b*k > n
// is infeasible.
double sigma_bandmf(const PrivacyParams& params, std::size_t b);

enum class StrategyClass { kToeplitz, kBanded };

StrategyClass strategy_class_from_name(const std::string& name);

struct BandSweepRow {
  std::size_t b = 0;
  double sigma = 0.0;
  double loss = 0.0;  // strategy objective, noise multiplier excluded
  double rmse = 0.0;  // sigma * sqrt(loss / n)
};

struct BandSweepResult {
  std::vector<BandSweepRow> rows;  // sorted by b
  std::size_t argmin_b = 0;
};

// Powers of two up to floor(n/k).
std::vector<std::size_t> default_band_candidates(const PrivacyParams& params);

// For each candidate b: optimize the strategy, evaluate its loss, calibrate
// sigma_bandmf, and report rmse. Brute-force selection of the band count.
BandSweepResult band_sweep(const PrivacyParams& params,
                           const std::vector<std::size_t>& candidate_bs,
                           StrategyClass strategy_class,
                           const OptimizerConfig& opt_config = {});

// Rule of thumb: round(max(1, eps*sqrt(n)/k)) clamped to [1, floor(n/k)].
std::size_t heuristic_bands(const PrivacyParams& params);

// CSV: header `b,sigma,loss,rmse`, one row per candidate, trailing comment
// line `# argmin_b=<b>`.
void write_sweep_csv(std::ostream& os, const BandSweepResult& result);

}  // namespace bandmf
