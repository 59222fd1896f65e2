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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bandmf/strategy.hpp"

namespace bandmf {

// Expected total squared error |A C(Theta)^{-1}|_F^2 of the column-normalized
// banded strategy, prefix workload, computed implicitly by streaming rows of
// the raw inverse and folding the column norms into the running prefix sum.
// O(n^2 b) time, O(n b) space; parallel over coordinate blocks.
double banded_loss(const BandedParams& s);

// Full objective |theta|_2^2 * sum_i (n-i+1) w_i^2 with w = C(theta)^{-1} 1.
// O(n b) time, O(n) space.
double toeplitz_loss(const ToeplitzCoeffs& s);

// Objective for whichever class the strategy is. Both are the Prop.-style
// product sensitivity^2 * |A C^{-1}|_F^2 (for BandedParams sensitivity = 1).
double strategy_loss(const Strategy& s);

// Per-query expected squared error: entry i is |row_i(A C^{-1})|^2 with the
// strategy's sensitivity excluded (multiply by sensitivity^2 for the full
// per-query objective). For BandedParams the column norms are folded in, so
// sensitivity is exactly 1 and the entries are already the full values.
// Toeplitz strategy with a Toeplitz workload takes the O(n b) closed-form
// path: prefix sums of w^2 with w = C(theta)^{-1} lambda.
std::vector<double> per_query_error(const Strategy& s, const Workload& w);

// Same quantity via the generic streaming path (inverse-SLO feeding the
// workload SLO with indicator inputs), kept as an internal cross-check.
std::vector<double> per_query_error_generic(const Strategy& s,
                                            const Workload& w);

enum class Aggregate { kTotal, kMax, kMean };

Aggregate aggregate_from_name(const std::string& name);
double aggregate(std::span<const double> per_query, Aggregate mode);

// Report assembled for the CLI. per_query entries include the sensitivity^2
// factor so that total_squared = sum(per_query) is the full objective and
// rmse(sigma) = sigma * sqrt(total_squared / n).
struct ErrorReport {
  double total_squared = 0.0;
  double max_query = 0.0;
  std::optional<std::vector<double>> per_query;

  double rmse(double sigma, std::size_t n) const;
};

ErrorReport make_error_report(const Strategy& s, const Workload& w,
                              bool keep_per_query);

}  // namespace bandmf
