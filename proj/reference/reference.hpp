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
#include <span>
#include <vector>

#include "bandmf/strategy.hpp"

// Serial reference implementations used by the tests and the benchmark.
// Everything here deliberately avoids the streaming kernels: the dense path
// materializes matrices and uses direct O(n^3) linear algebra, so it can act
// as an independent oracle for them. Not built into the main library.
namespace bandmf::reference {

// Dense materializations from raw parameters (not via to_band_matrix).
Dense dense_from_toeplitz(const ToeplitzCoeffs& s);
Dense dense_from_banded_params(const BandedParams& s);
Dense dense_strategy(const Strategy& s);

Dense dense_identity(std::size_t n);
Dense dense_prefix_workload(std::size_t n);
Dense dense_workload(const Workload& w);

Dense matmul(const Dense& a, const Dense& b);

// Forward substitution against each column of rhs; requires lower-triangular
// nonsingular c.
Dense lower_solve_matrix(const Dense& c, const Dense& rhs);
std::vector<double> lower_solve(const Dense& c, std::span<const double> rhs);

Dense lower_inverse(const Dense& c);

double frobenius_sq(const Dense& m);
double max_column_norm(const Dense& m);

// sensitivity^2 * |A C^{-1}|_F^2 with A the prefix workload.
double dense_loss(const Dense& c);

// Squared row norms of A C^{-1} (sensitivity excluded).
std::vector<double> dense_per_query(const Dense& c, const Dense& a);

// Plain serial transcriptions of the streaming objectives (single loop, no
// blocking, no OpenMP). Kept for equivalence tests against the parallel
// kernels and for the benchmark baseline.
double serial_banded_loss(const BandedParams& s);
double serial_toeplitz_loss(const ToeplitzCoeffs& s);

}  // namespace bandmf::reference
