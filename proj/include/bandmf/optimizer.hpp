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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bandmf/strategy.hpp"

namespace bandmf {

enum class GradMode { kAnalytic, kFiniteDifference };

struct OptimizerConfig {
  int max_iters = 10000;
  double rel_tol = 1e-9;        // relative loss change between accepted steps
  int lbfgs_memory = 10;
  double armijo_c1 = 1e-4;
  double backtrack_factor = 0.5;
  int max_backtracks = 40;
  GradMode grad_mode = GradMode::kAnalytic;
};

struct OptimizeResult {
  Strategy strategy;
  std::vector<double> loss_history;  // initial loss plus one per accepted step
  bool converged = false;
  int iterations = 0;

  double final_loss() const { return loss_history.back(); }
};

// Exact gradients of the implicit objectives, derived as adjoints of the
// streaming recurrences (reverse accumulation for the banded class, a
// transposed Toeplitz solve for the Toeplitz class).
std::vector<double> toeplitz_loss_gradient(const ToeplitzCoeffs& s);
std::vector<double> banded_loss_gradient(const BandedParams& s);

// Central finite differences with step 1e-5 * (1 + |param|); testing fallback
// and the GradMode::kFiniteDifference path.
std::vector<double> finite_difference_gradient(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> x);

// Truncated square-root-series coefficients r_1 = 1,
// r_j = r_{j-1} (2j-3)/(2j-2): the classic near-optimal untruncated Toeplitz
// factorization of the prefix workload, used as the deterministic starting
// point.
std::vector<double> toeplitz_sqrt_series_init(std::size_t b);

OptimizeResult optimize_toeplitz(std::size_t n, std::size_t b,
                                 const OptimizerConfig& config = {});

// Default initialization is the column-normalized optimal Toeplitz strategy
// at the same (n, b). Each iteration costs O(n^2 b); b = n is allowed but
// expensive, b > n is rejected.
OptimizeResult optimize_banded(
    std::size_t n, std::size_t b, const OptimizerConfig& config = {},
    const std::optional<BandedParams>& init = std::nullopt);

struct TraceEntry {
  int iteration;
  double loss;
  double grad_norm;  // infinity norm
};

// As optimize_* but records a per-iteration trace (written as CSV by the
// CLI when requested).
OptimizeResult optimize_toeplitz_traced(std::size_t n, std::size_t b,
                                        const OptimizerConfig& config,
                                        std::vector<TraceEntry>* trace);
OptimizeResult optimize_banded_traced(
    std::size_t n, std::size_t b, const OptimizerConfig& config,
    const std::optional<BandedParams>& init, std::vector<TraceEntry>* trace);

}  // namespace bandmf
