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
#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace bandmf {

// Dense matrices appear only in oracles, fixtures and small materializations;
// everything on the hot path is banded. Row-major.
struct Dense {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Dense() = default;
  Dense(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

// Explicit b-banded lower-triangular matrix, band-major storage:
// band(l, j) holds the entry in row j+l, column j, for l in [0, b) and
// j+l < n. Entries beyond the matrix edge are ignored (kept zero).
struct BandMatrix {
  std::size_t n = 0;
  std::size_t b = 0;
  std::vector<double> bands;  // b rows of n, row l = l-th subdiagonal

  BandMatrix() = default;
  BandMatrix(std::size_t n_, std::size_t b_)
      : n(n_), b(b_), bands(n_ * b_, 0.0) {}

  double& band(std::size_t l, std::size_t j) { return bands[l * n + j]; }
  double band(std::size_t l, std::size_t j) const { return bands[l * n + j]; }

  // Entry (i, j) of the full matrix; zero outside the band.
  double entry(std::size_t i, std::size_t j) const {
    if (j > i || i - j >= b) return 0.0;
    return band(i - j, j);
  }
};

// Banded Toeplitz strategy: C(theta)_{ij} = theta[i-j] for 0 <= i-j < b.
// Sensitivity is |theta|_2 (n >= b). Convention: theta[0] > 0; not enforced
// at construction since the objective is invariant to a global sign flip.
struct ToeplitzCoeffs {
  std::size_t n = 0;
  std::vector<double> theta;

  ToeplitzCoeffs() = default;
  ToeplitzCoeffs(std::size_t n_, std::vector<double> theta_);

  std::size_t bands() const { return theta.size(); }
};

// Column-normalized banded strategy defined by a b x n parameter matrix.
// Column j of the induced matrix is (Theta[0][j], ..., Theta[b-1][j]) placed
// on the subdiagonals and divided by the L2 norm of the full parameter
// column, so the maximum column norm is exactly 1.
struct BandedParams {
  std::size_t n = 0;
  std::size_t b = 0;
  std::vector<double> theta;  // row-major b x n

  BandedParams() = default;
  BandedParams(std::size_t n_, std::size_t b_);
  BandedParams(std::size_t n_, std::size_t b_, std::vector<double> theta_);

  double& param(std::size_t l, std::size_t j) { return theta[l * n + j]; }
  double param(std::size_t l, std::size_t j) const { return theta[l * n + j]; }

  // L2 norms of the parameter columns (all b rows, including entries whose
  // matrix position would fall past row n). Throws if any norm is zero.
  std::vector<double> column_norms() const;
};

using Strategy = std::variant<ToeplitzCoeffs, BandedParams>;

// Lower-triangular Toeplitz workload. Prefix is toeplitz with all-ones
// coefficients; coefficients may be shorter than n (zero padded).
struct Workload {
  enum class Kind { kPrefix, kToeplitz };
  Kind kind = Kind::kPrefix;
  std::size_t n = 0;
  std::vector<double> lambda;  // empty for prefix

  static Workload Prefix(std::size_t n);
  static Workload Toeplitz(std::size_t n, std::vector<double> lambda);

  // First column of the workload matrix, zero-padded to length n.
  std::vector<double> first_column() const;
  std::size_t bands() const {
    return kind == Kind::kPrefix ? n : lambda.size();
  }
};

inline constexpr std::size_t kDefaultDenseLimit = 4096;

// The actual strategy matrix entries, band-major. For BandedParams this
// applies the column normalization; for ToeplitzCoeffs it is the raw theta
// broadcast along the diagonals.
BandMatrix to_band_matrix(const ToeplitzCoeffs& s);
BandMatrix to_band_matrix(const BandedParams& s);
BandMatrix to_band_matrix(const Strategy& s);

Dense materialize(const BandMatrix& c);
Dense materialize(const Strategy& s,
                  std::size_t dense_limit = kDefaultDenseLimit);

// Post-processing step: rescale each column of C(theta) to unit norm. The
// result is banded but generally no longer Toeplitz.
BandedParams column_normalize(const ToeplitzCoeffs& s);

// Maximum L2 column norm of the strategy matrix. Exactly 1 for
// BandedParams; |theta|_2 for ToeplitzCoeffs (n >= b by construction).
double sensitivity(const Strategy& s);

std::size_t strategy_n(const Strategy& s);
std::size_t strategy_bands(const Strategy& s);

// JSON interchange format shared by all CLI subcommands:
//   { "kind": "banded"|"toeplitz", "n": int, "b": int,
//     "coefficients": [floats] }
// banded stores Theta row-major (b rows of n), toeplitz stores theta.
Strategy strategy_from_json(const std::string& text);
std::string strategy_to_json(const Strategy& s);
Strategy load_strategy(const std::filesystem::path& path);
void save_strategy(const Strategy& s, const std::filesystem::path& path);

}  // namespace bandmf
