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

#include "bandmf/slo.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bandmf/errors.hpp"

namespace bandmf {

namespace {

void check_diagonal(double v, std::size_t i) {
  if (!(std::abs(v) > kSingularTol)) {
    throw SingularStrategyError("strategy diagonal entry " +
                                std::to_string(i) + " is zero or subnormal");
  }
}

void check_band_diagonals(const BandMatrix& c) {
  for (std::size_t i = 0; i < c.n; ++i) check_diagonal(c.band(0, i), i);
}

}  // namespace

void StreamingLinearOperator::step(std::span<double> row) {
  if (step_index_ >= n_) {
    throw ShapeError("stream has length " + std::to_string(n_) +
                     "; too many inputs");
  }
  if (row.size() != dim_) {
    throw ShapeError("stream vector has dimension " +
                     std::to_string(row.size()) + ", expected " +
                     std::to_string(dim_));
  }
  do_step(row);
  ++step_index_;
}

void StreamingLinearOperator::reset() {
  step_index_ = 0;
  do_reset();
}

PrefixOperator::PrefixOperator(std::size_t n, std::size_t dim)
    : StreamingLinearOperator(n, dim), acc_(dim, 0.0) {}

void PrefixOperator::do_step(std::span<double> row) {
  for (std::size_t w = 0; w < dim_; ++w) {
    acc_[w] += row[w];
    row[w] = acc_[w];
  }
}

void PrefixOperator::do_reset() { std::fill(acc_.begin(), acc_.end(), 0.0); }

BandedInverseOperator::BandedInverseOperator(BandMatrix c, std::size_t dim)
    : StreamingLinearOperator(c.n, dim),
      c_(std::move(c)),
      ring_(c_.b * dim, 0.0) {
  check_band_diagonals(c_);
}

void BandedInverseOperator::do_step(std::span<double> row) {
  const std::size_t i = step_index();
  const std::size_t b = c_.b;
  const std::size_t lmax = std::min(b - 1, i);
  // Fixed ascending order within the band sum keeps outputs bit-exact across
  // shardings of the coordinate axis.
  for (std::size_t l = 1; l <= lmax; ++l) {
    const double coef = c_.band(l, i - l);
    if (coef == 0.0) continue;
    const double* prev = ring_.data() + ((i - l) % b) * dim_;
    for (std::size_t w = 0; w < dim_; ++w) row[w] -= coef * prev[w];
  }
  const double inv_diag = 1.0 / c_.band(0, i);
  double* slot = ring_.data() + (i % b) * dim_;
  for (std::size_t w = 0; w < dim_; ++w) {
    row[w] *= inv_diag;
    slot[w] = row[w];
  }
}

void BandedInverseOperator::do_reset() {
  std::fill(ring_.begin(), ring_.end(), 0.0);
}

BandedForwardOperator::BandedForwardOperator(BandMatrix c, std::size_t dim)
    : StreamingLinearOperator(c.n, dim),
      c_(std::move(c)),
      ring_(c_.b * dim, 0.0) {}

void BandedForwardOperator::do_step(std::span<double> row) {
  const std::size_t i = step_index();
  const std::size_t b = c_.b;
  double* slot = ring_.data() + (i % b) * dim_;
  std::copy(row.begin(), row.end(), slot);
  const double diag = c_.band(0, i);
  for (std::size_t w = 0; w < dim_; ++w) row[w] *= diag;
  const std::size_t lmax = std::min(b - 1, i);
  for (std::size_t l = 1; l <= lmax; ++l) {
    const double coef = c_.band(l, i - l);
    if (coef == 0.0) continue;
    const double* prev = ring_.data() + ((i - l) % b) * dim_;
    for (std::size_t w = 0; w < dim_; ++w) row[w] += coef * prev[w];
  }
}

void BandedForwardOperator::do_reset() {
  std::fill(ring_.begin(), ring_.end(), 0.0);
}

ToeplitzProductOperator::ToeplitzProductOperator(std::vector<double> lambda,
                                                 std::size_t n,
                                                 std::size_t dim)
    : StreamingLinearOperator(n, dim),
      lambda_(std::move(lambda)),
      ring_(lambda_.size() * dim, 0.0) {
  if (lambda_.empty()) throw ShapeError("toeplitz workload needs coefficients");
}

void ToeplitzProductOperator::do_step(std::span<double> row) {
  const std::size_t i = step_index();
  const std::size_t b = lambda_.size();
  double* slot = ring_.data() + (i % b) * dim_;
  std::copy(row.begin(), row.end(), slot);
  const std::size_t lmax = std::min(b - 1, i);
  for (std::size_t w = 0; w < dim_; ++w) row[w] *= lambda_[0];
  for (std::size_t l = 1; l <= lmax; ++l) {
    const double coef = lambda_[l];
    if (coef == 0.0) continue;
    const double* prev = ring_.data() + ((i - l) % b) * dim_;
    for (std::size_t w = 0; w < dim_; ++w) row[w] += coef * prev[w];
  }
}

void ToeplitzProductOperator::do_reset() {
  std::fill(ring_.begin(), ring_.end(), 0.0);
}

namespace {

RowStream run_stream(StreamingLinearOperator& op, const RowStream& z) {
  if (z.size() != op.length()) {
    throw ShapeError("stream has " + std::to_string(z.size()) +
                     " rows, expected " + std::to_string(op.length()));
  }
  RowStream out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = z[i];
    op.step(out[i]);
  }
  return out;
}

}  // namespace

RowStream banded_inverse_apply(const BandMatrix& c, const RowStream& z) {
  const std::size_t dim = z.empty() ? 0 : z.front().size();
  BandedInverseOperator op(c, dim);
  return run_stream(op, z);
}

RowStream banded_forward_apply(const BandMatrix& c, const RowStream& y) {
  const std::size_t dim = y.empty() ? 0 : y.front().size();
  BandedForwardOperator op(c, dim);
  return run_stream(op, y);
}

RowStream prefix_apply(const RowStream& z) {
  const std::size_t dim = z.empty() ? 0 : z.front().size();
  PrefixOperator op(z.size(), dim);
  return run_stream(op, z);
}

std::vector<double> toeplitz_solve(std::span<const double> theta,
                                   std::span<const double> rhs) {
  if (theta.empty()) throw ShapeError("empty toeplitz coefficients");
  check_diagonal(theta[0], 0);
  const std::size_t n = rhs.size();
  const std::size_t b = theta.size();
  std::vector<double> w(n);
  const double inv_diag = 1.0 / theta[0];
  for (std::size_t i = 0; i < n; ++i) {
    double acc = rhs[i];
    const std::size_t lmax = std::min(b - 1, i);
    for (std::size_t l = 1; l <= lmax; ++l) acc -= theta[l] * w[i - l];
    w[i] = acc * inv_diag;
  }
  return w;
}

std::vector<double> toeplitz_solve_transpose(std::span<const double> theta,
                                             std::span<const double> rhs) {
  if (theta.empty()) throw ShapeError("empty toeplitz coefficients");
  check_diagonal(theta[0], 0);
  const std::size_t n = rhs.size();
  const std::size_t b = theta.size();
  std::vector<double> u(n);
  const double inv_diag = 1.0 / theta[0];
  for (std::size_t ip = n; ip-- > 0;) {
    double acc = rhs[ip];
    const std::size_t lmax = std::min(b - 1, n - 1 - ip);
    for (std::size_t l = 1; l <= lmax; ++l) acc -= theta[l] * u[ip + l];
    u[ip] = acc * inv_diag;
  }
  return u;
}

}  // namespace bandmf
