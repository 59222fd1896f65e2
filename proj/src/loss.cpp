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

#include "bandmf/loss.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "bandmf/errors.hpp"
#include "bandmf/parallel.hpp"
#include "bandmf/slo.hpp"

namespace bandmf {

namespace {

std::vector<double> checked_inv_diag(const BandedParams& s) {
  std::vector<double> inv(s.n);
  for (std::size_t i = 0; i < s.n; ++i) {
    const double d = s.param(0, i);
    if (!(std::abs(d) > kSingularTol)) {
      throw SingularStrategyError("strategy diagonal entry " +
                                  std::to_string(i) + " is zero or subnormal");
    }
    inv[i] = 1.0 / d;
  }
  return inv;
}

// One coordinate block of the streaming objective: runs the raw-inverse
// recurrence for indicator coordinates [j0, j1), folds the column norms into
// the running prefix sum, and accumulates |b_i|^2 restricted to the block.
// Writes per-step contributions into `pq` when given. Blocks touch no shared
// state, so the caller's ordered reduction is thread-count independent.
double banded_block(const BandedParams& s, const std::vector<double>& norms,
                    const std::vector<double>& inv_diag, std::size_t j0,
                    std::size_t j1, double* pq) {
  const std::size_t n = s.n;
  const std::size_t b = s.b;
  const std::size_t width = j1 - j0;
  std::vector<double> ring(b * width, 0.0);
  std::vector<double> bacc(width, 0.0);
  double total = 0.0;
  for (std::size_t i = j0; i < n; ++i) {
    double* cur = ring.data() + (i % b) * width;
    std::fill(cur, cur + width, 0.0);
    if (i < j1) cur[i - j0] = 1.0;
    const std::size_t lmax = std::min(b - 1, i);
    for (std::size_t l = 1; l <= lmax; ++l) {
      const double coef = s.param(l, i - l);
      if (coef == 0.0) continue;
      const double* prev = ring.data() + ((i - l) % b) * width;
      for (std::size_t w = 0; w < width; ++w) cur[w] -= coef * prev[w];
    }
    const double d = inv_diag[i];
    const double c = norms[i];
    double row_sq = 0.0;
    for (std::size_t w = 0; w < width; ++w) {
      cur[w] *= d;
      bacc[w] += c * cur[w];
      row_sq += bacc[w] * bacc[w];
    }
    total += row_sq;
    if (pq) pq[i] += row_sq;
  }
  return total;
}

}  // namespace

double banded_loss(const BandedParams& s) {
  const std::vector<double> norms = s.column_norms();
  const std::vector<double> inv_diag = checked_inv_diag(s);
  const auto blocks = parallel::fixed_blocks(s.n);
  std::vector<double> partials(blocks.size(), 0.0);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t bi = 0; bi < static_cast<std::ptrdiff_t>(blocks.size());
       ++bi) {
    partials[bi] = banded_block(s, norms, inv_diag, blocks[bi].begin,
                                blocks[bi].end, nullptr);
  }
  double loss = 0.0;
  for (double p : partials) loss += p;
  return loss;
}

double toeplitz_loss(const ToeplitzCoeffs& s) {
  const std::size_t n = s.n;
  const std::size_t b = s.theta.size();
  if (!(std::abs(s.theta[0]) > kSingularTol)) {
    throw SingularStrategyError("toeplitz strategy has zero diagonal");
  }
  // w_i is folded into the weighted sum as soon as it is produced; only the
  // trailing b-1 values are kept, so evaluation stays in cache at any n.
  // The ring starts zeroed and the band sum runs at full width from step 0:
  // out-of-range terms multiply stored zeros, which leaves the arithmetic
  // bit-identical and the per-step cost constant.
  std::vector<double> ring(b, 0.0);
  const double* theta = s.theta.data();
  const double inv_diag = 1.0 / theta[0];
  double weighted = 0.0;
  std::size_t slot = 0;  // ring position of w_i
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 1.0;
    std::size_t idx = slot;
    for (std::size_t l = 1; l < b; ++l) {
      idx = (idx == 0) ? b - 1 : idx - 1;
      acc -= theta[l] * ring[idx];
    }
    const double wi = acc * inv_diag;
    ring[slot] = wi;
    slot = (slot + 1 == b) ? 0 : slot + 1;
    weighted += static_cast<double>(n - i) * wi * wi;
  }
  double sens_sq = 0.0;
  for (double v : s.theta) sens_sq += v * v;
  return sens_sq * weighted;
}

double strategy_loss(const Strategy& s) {
  if (std::holds_alternative<BandedParams>(s)) {
    return banded_loss(std::get<BandedParams>(s));
  }
  return toeplitz_loss(std::get<ToeplitzCoeffs>(s));
}

namespace {

void check_workload(const Strategy& s, const Workload& w) {
  if (strategy_n(s) != w.n) {
    throw ShapeError("workload length " + std::to_string(w.n) +
                     " does not match strategy length " +
                     std::to_string(strategy_n(s)));
  }
}

// Closed form for a Toeplitz strategy and Toeplitz workload: the per-query
// error is the running sum of w^2 with w = C(theta)^{-1} lambda.
std::vector<double> per_query_toeplitz(const ToeplitzCoeffs& s,
                                       const Workload& wl) {
  const std::vector<double> w = toeplitz_solve(s.theta, wl.first_column());
  std::vector<double> pq(s.n);
  double acc = 0.0;
  for (std::size_t i = 0; i < s.n; ++i) {
    acc += w[i] * w[i];
    pq[i] = acc;
  }
  return pq;
}

std::vector<double> per_query_banded_prefix(const BandedParams& s) {
  const std::vector<double> norms = s.column_norms();
  const std::vector<double> inv_diag = checked_inv_diag(s);
  const auto blocks = parallel::fixed_blocks(s.n);
  std::vector<std::vector<double>> partial_pq(blocks.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t bi = 0; bi < static_cast<std::ptrdiff_t>(blocks.size());
       ++bi) {
    partial_pq[bi].assign(s.n, 0.0);
    banded_block(s, norms, inv_diag, blocks[bi].begin, blocks[bi].end,
                 partial_pq[bi].data());
  }
  std::vector<double> pq(s.n, 0.0);
  for (const auto& part : partial_pq) {
    for (std::size_t i = 0; i < s.n; ++i) pq[i] += part[i];
  }
  return pq;
}

std::unique_ptr<StreamingLinearOperator> workload_operator(const Workload& wl,
                                                           std::size_t dim) {
  if (wl.kind == Workload::Kind::kPrefix) {
    return std::make_unique<PrefixOperator>(wl.n, dim);
  }
  return std::make_unique<ToeplitzProductOperator>(wl.lambda, wl.n, dim);
}

}  // namespace

std::vector<double> per_query_error(const Strategy& s, const Workload& w) {
  check_workload(s, w);
  if (std::holds_alternative<ToeplitzCoeffs>(s)) {
    return per_query_toeplitz(std::get<ToeplitzCoeffs>(s), w);
  }
  const auto& banded = std::get<BandedParams>(s);
  if (w.kind == Workload::Kind::kPrefix) {
    return per_query_banded_prefix(banded);
  }
  return per_query_error_generic(s, w);
}

std::vector<double> per_query_error_generic(const Strategy& s,
                                            const Workload& w) {
  check_workload(s, w);
  const std::size_t n = w.n;
  BandedInverseOperator inverse(to_band_matrix(s), n);
  auto workload_op = workload_operator(w, n);
  std::vector<double> pq(n, 0.0);
  std::vector<double> row(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(row.begin(), row.end(), 0.0);
    row[i] = 1.0;
    inverse.step(row);
    workload_op->step(row);
    double sq = 0.0;
    for (double v : row) sq += v * v;
    pq[i] = sq;
  }
  return pq;
}

Aggregate aggregate_from_name(const std::string& name) {
  if (name == "total") return Aggregate::kTotal;
  if (name == "max") return Aggregate::kMax;
  if (name == "mean") return Aggregate::kMean;
  throw ShapeError("unknown aggregate: " + name);
}

double aggregate(std::span<const double> per_query, Aggregate mode) {
  if (per_query.empty()) throw ShapeError("aggregate of empty vector");
  switch (mode) {
    case Aggregate::kMax:
      return *std::max_element(per_query.begin(), per_query.end());
    case Aggregate::kMean: {
      double sum = 0.0;
      for (double v : per_query) sum += v;
      return sum / static_cast<double>(per_query.size());
    }
    case Aggregate::kTotal:
    default: {
      double sum = 0.0;
      for (double v : per_query) sum += v;
      return sum;
    }
  }
}

double ErrorReport::rmse(double sigma, std::size_t n) const {
  return sigma * std::sqrt(total_squared / static_cast<double>(n));
}

ErrorReport make_error_report(const Strategy& s, const Workload& w,
                              bool keep_per_query) {
  std::vector<double> pq = per_query_error(s, w);
  const double sens = sensitivity(s);
  const double sens_sq = sens * sens;
  for (double& v : pq) v *= sens_sq;
  ErrorReport report;
  report.total_squared = aggregate(pq, Aggregate::kTotal);
  report.max_query = aggregate(pq, Aggregate::kMax);
  if (keep_per_query) report.per_query = std::move(pq);
  return report;
}

}  // namespace bandmf
