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

namespace bandmf {

// Streaming linear operator: consumes vectors z_1..z_n one at a time and
// yields y_1..y_n where y_i depends linearly on z_1..z_i. Holds at most
// buffer_size() previous vectors. A single instance is a sequential state
// machine; distinct instances are independent.
class StreamingLinearOperator {
 public:
  virtual ~StreamingLinearOperator() = default;

  // Consume z_i (in `row`) and overwrite it with y_i.
  void step(std::span<double> row);

  std::size_t step_index() const { return step_index_; }
  std::size_t length() const { return n_; }
  virtual std::size_t buffer_size() const = 0;

  void reset();

 protected:
  StreamingLinearOperator(std::size_t n, std::size_t dim)
      : n_(n), dim_(dim) {}

  virtual void do_step(std::span<double> row) = 0;
  virtual void do_reset() = 0;

  std::size_t n_;
  std::size_t dim_;

 private:
  std::size_t step_index_ = 0;  // vectors consumed so far
};

// y_i = y_{i-1} + z_i: multiplication by the lower-triangular all-ones
// workload, 1-buffered.
class PrefixOperator final : public StreamingLinearOperator {
 public:
  PrefixOperator(std::size_t n, std::size_t dim);
  std::size_t buffer_size() const override { return 1; }

 private:
  void do_step(std::span<double> row) override;
  void do_reset() override;
  std::vector<double> acc_;
};

// y_i = (z_i - sum_{l=1}^{min(b-1,i)} C(i,i-l) y_{i-l}) / C(i,i):
// streaming rows of C^{-1} Z, retaining the last b-1 outputs.
class BandedInverseOperator final : public StreamingLinearOperator {
 public:
  BandedInverseOperator(BandMatrix c, std::size_t dim);
  std::size_t buffer_size() const override { return c_.b; }

 private:
  void do_step(std::span<double> row) override;
  void do_reset() override;
  BandMatrix c_;
  std::vector<double> ring_;  // b rows of dim, slot i%b holds y_i
};

// y_i = sum_{l=0}^{min(b-1,i)} C(i,i-l) z_{i-l}: the direct banded multiply.
// Not stated as an algorithm in the usual presentations (training only needs
// the inverse) but it is the transpose-free forward recurrence, used for
// round-trip validation.
class BandedForwardOperator final : public StreamingLinearOperator {
 public:
  BandedForwardOperator(BandMatrix c, std::size_t dim);
  std::size_t buffer_size() const override { return c_.b; }

 private:
  void do_step(std::span<double> row) override;
  void do_reset() override;
  BandMatrix c_;
  std::vector<double> ring_;  // b rows of dim, slot i%b holds z_i
};

// y_i = sum_{l} lambda[l] z_{i-l}: multiplication by a lower-triangular
// Toeplitz workload with coefficients lambda.
class ToeplitzProductOperator final : public StreamingLinearOperator {
 public:
  ToeplitzProductOperator(std::vector<double> lambda, std::size_t n,
                          std::size_t dim);
  std::size_t buffer_size() const override { return lambda_.size(); }

 private:
  void do_step(std::span<double> row) override;
  void do_reset() override;
  std::vector<double> lambda_;
  std::vector<double> ring_;
};

using RowStream = std::vector<std::vector<double>>;

// Batch helpers over in-memory streams. The stream must have exactly n rows
// of a common dimension.
RowStream banded_inverse_apply(const BandMatrix& c, const RowStream& z);
RowStream banded_forward_apply(const BandMatrix& c, const RowStream& y);
RowStream prefix_apply(const RowStream& z);

// Solve C(theta) w = rhs for a banded lower-triangular Toeplitz system.
// O(n*b) time, O(b) auxiliary state beyond the output.
std::vector<double> toeplitz_solve(std::span<const double> theta,
                                   std::span<const double> rhs);

// Solve C(theta)^T u = rhs (upper-triangular banded Toeplitz, backward
// recurrence). Used by the adjoint gradient.
std::vector<double> toeplitz_solve_transpose(std::span<const double> theta,
                                             std::span<const double> rhs);

}  // namespace bandmf
