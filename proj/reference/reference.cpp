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

#include "reference.hpp"

#include <cmath>
#include <stdexcept>

namespace bandmf::reference {

Dense dense_from_toeplitz(const ToeplitzCoeffs& s) {
  Dense m(s.n, s.n);
  for (std::size_t j = 0; j < s.n; ++j) {
    for (std::size_t l = 0; l < s.theta.size() && j + l < s.n; ++l) {
      m.at(j + l, j) = s.theta[l];
    }
  }
  return m;
}

Dense dense_from_banded_params(const BandedParams& s) {
  Dense m(s.n, s.n);
  for (std::size_t j = 0; j < s.n; ++j) {
    double norm_sq = 0.0;
    for (std::size_t l = 0; l < s.b; ++l) {
      const double v = s.theta[l * s.n + j];
      norm_sq += v * v;
    }
    const double norm = std::sqrt(norm_sq);
    if (!(norm > 0.0)) throw std::runtime_error("zero parameter column");
    for (std::size_t l = 0; l < s.b && j + l < s.n; ++l) {
      m.at(j + l, j) = s.theta[l * s.n + j] / norm;
    }
  }
  return m;
}

Dense dense_strategy(const Strategy& s) {
  if (std::holds_alternative<ToeplitzCoeffs>(s)) {
    return dense_from_toeplitz(std::get<ToeplitzCoeffs>(s));
  }
  return dense_from_banded_params(std::get<BandedParams>(s));
}

Dense dense_identity(std::size_t n) {
  Dense m(n, n);
  for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

Dense dense_prefix_workload(std::size_t n) {
  Dense m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) m.at(i, j) = 1.0;
  }
  return m;
}

Dense dense_workload(const Workload& w) {
  if (w.kind == Workload::Kind::kPrefix) return dense_prefix_workload(w.n);
  Dense m(w.n, w.n);
  for (std::size_t j = 0; j < w.n; ++j) {
    for (std::size_t l = 0; l < w.lambda.size() && j + l < w.n; ++l) {
      m.at(j + l, j) = w.lambda[l];
    }
  }
  return m;
}

Dense matmul(const Dense& a, const Dense& b) {
  if (a.cols != b.rows) throw std::runtime_error("matmul shape mismatch");
  Dense out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a.at(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols; ++j) {
        out.at(i, j) += aik * b.at(k, j);
      }
    }
  }
  return out;
}

Dense lower_solve_matrix(const Dense& c, const Dense& rhs) {
  if (c.rows != c.cols || c.rows != rhs.rows) {
    throw std::runtime_error("solve shape mismatch");
  }
  const std::size_t n = c.rows;
  Dense x(n, rhs.cols);
  for (std::size_t i = 0; i < n; ++i) {
    if (c.at(i, i) == 0.0) throw std::runtime_error("singular matrix");
    for (std::size_t j = 0; j < rhs.cols; ++j) {
      double acc = rhs.at(i, j);
      for (std::size_t k = 0; k < i; ++k) acc -= c.at(i, k) * x.at(k, j);
      x.at(i, j) = acc / c.at(i, i);
    }
  }
  return x;
}

std::vector<double> lower_solve(const Dense& c, std::span<const double> rhs) {
  const std::size_t n = c.rows;
  if (rhs.size() != n) throw std::runtime_error("solve shape mismatch");
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (c.at(i, i) == 0.0) throw std::runtime_error("singular matrix");
    double acc = rhs[i];
    for (std::size_t k = 0; k < i; ++k) acc -= c.at(i, k) * x[k];
    x[i] = acc / c.at(i, i);
  }
  return x;
}

Dense lower_inverse(const Dense& c) {
  return lower_solve_matrix(c, dense_identity(c.rows));
}

double frobenius_sq(const Dense& m) {
  double acc = 0.0;
  for (double v : m.data) acc += v * v;
  return acc;
}

double max_column_norm(const Dense& m) {
  double best = 0.0;
  for (std::size_t j = 0; j < m.cols; ++j) {
    double sq = 0.0;
    for (std::size_t i = 0; i < m.rows; ++i) sq += m.at(i, j) * m.at(i, j);
    best = std::max(best, sq);
  }
  return std::sqrt(best);
}

double dense_loss(const Dense& c) {
  const Dense inv = lower_inverse(c);
  const Dense b = matmul(dense_prefix_workload(c.rows), inv);
  const double sens = max_column_norm(c);
  return sens * sens * frobenius_sq(b);
}

std::vector<double> dense_per_query(const Dense& c, const Dense& a) {
  const Dense b = matmul(a, lower_inverse(c));
  std::vector<double> pq(b.rows, 0.0);
  for (std::size_t i = 0; i < b.rows; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < b.cols; ++j) acc += b.at(i, j) * b.at(i, j);
    pq[i] = acc;
  }
  return pq;
}

double serial_banded_loss(const BandedParams& s) {
  const std::size_t n = s.n;
  const std::size_t b = s.b;
  std::vector<double> norms(n, 0.0);
  for (std::size_t l = 0; l < b; ++l) {
    for (std::size_t j = 0; j < n; ++j) {
      const double v = s.theta[l * n + j];
      norms[j] += v * v;
    }
  }
  for (double& v : norms) v = std::sqrt(v);

  // Direct transcription of the streaming objective: e_i through the raw
  // inverse recurrence, column norms folded into the running prefix sum.
  std::vector<double> ring(b * n, 0.0);
  std::vector<double> bacc(n, 0.0);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double* cur = ring.data() + (i % b) * n;
    std::fill(cur, cur + n, 0.0);
    cur[i] = 1.0;
    for (std::size_t l = 1; l <= std::min(b - 1, i); ++l) {
      const double coef = s.theta[l * n + (i - l)];
      const double* prev = ring.data() + ((i - l) % b) * n;
      for (std::size_t w = 0; w <= i; ++w) cur[w] -= coef * prev[w];
    }
    const double inv_diag = 1.0 / s.theta[0 * n + i];
    const double c = norms[i];
    for (std::size_t w = 0; w <= i; ++w) {
      cur[w] *= inv_diag;
      bacc[w] += c * cur[w];
      loss += bacc[w] * bacc[w];
    }
  }
  return loss;
}

double serial_toeplitz_loss(const ToeplitzCoeffs& s) {
  const std::size_t n = s.n;
  const std::size_t b = s.theta.size();
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 1.0;
    for (std::size_t l = 1; l <= std::min(b - 1, i); ++l) {
      acc -= s.theta[l] * w[i - l];
    }
    w[i] = acc / s.theta[0];
  }
  double weighted = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    weighted += static_cast<double>(n - i) * w[i] * w[i];
  }
  double sens_sq = 0.0;
  for (double v : s.theta) sens_sq += v * v;
  return sens_sq * weighted;
}

}  // namespace bandmf::reference
