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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bandmf/errors.hpp"
#include "bandmf/slo.hpp"
#include "bandmf/strategy.hpp"
#include "reference.hpp"
#include "support/fixtures.hpp"

using namespace bandmf;
using bandmf::testing::TestRng;

namespace {

double max_abs_diff(const RowStream& a, const RowStream& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a[i].size(); ++j) {
      m = std::max(m, std::abs(a[i][j] - b[i][j]));
    }
  }
  return m;
}

double max_abs(const RowStream& a) {
  double m = 0.0;
  for (const auto& row : a) {
    for (double v : row) m = std::max(m, std::abs(v));
  }
  return m;
}

}  // namespace

TEST_CASE("banded inverse reproduces the published 9x9 recurrences") {
  const BandMatrix c = bandmf::testing::example_9x9_bands();
  TestRng rng(7);
  const RowStream z = bandmf::testing::random_stream(9, 3, rng);
  const RowStream y = banded_inverse_apply(c, z);

  // The listed recurrences, written out with the printed coefficients.
  for (std::size_t w = 0; w < 3; ++w) {
    const double y1 = z[0][w] / 0.740;
    const double y2 = (z[1][w] - 0.500 * y1) / 0.822;
    const double y3 = (z[2][w] - 0.492 * y2 - 0.450 * y1) / 0.876;
    const double y4 = (z[3][w] - 0.395 * y3 - 0.286 * y2) / 0.821;
    CHECK(y[0][w] == doctest::Approx(y1).epsilon(1e-12));
    CHECK(y[1][w] == doctest::Approx(y2).epsilon(1e-12));
    CHECK(y[2][w] == doctest::Approx(y3).epsilon(1e-12));
    CHECK(y[3][w] == doctest::Approx(y4).epsilon(1e-12));
    const double y9 = (z[8][w] - 0.353 * y[7][w] - 0.194 * y[6][w]) / 1.000;
    CHECK(y[8][w] == doctest::Approx(y9).epsilon(1e-12));
  }
}

TEST_CASE("identity strategy is a pass-through") {
  ToeplitzCoeffs identity(12, {1.0});
  TestRng rng(3);
  const RowStream z = bandmf::testing::random_stream(12, 4, rng);
  const RowStream y = banded_inverse_apply(to_band_matrix(identity), z);
  CHECK(max_abs_diff(y, z) == 0.0);
}

TEST_CASE("banded inverse matches the dense solve oracle") {
  TestRng rng(11);
  const BandedParams s = bandmf::testing::random_banded(6, 2, rng);
  const BandMatrix c = to_band_matrix(s);
  const RowStream z = bandmf::testing::random_stream(6, 5, rng);
  const RowStream y = banded_inverse_apply(c, z);

  const Dense dense = reference::dense_from_banded_params(s);
  const Dense inv = reference::lower_inverse(dense);
  RowStream expected(6, std::vector<double>(5, 0.0));
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t w = 0; w < 5; ++w) {
      for (std::size_t j = 0; j < 6; ++j) {
        expected[i][w] += inv.at(i, j) * z[j][w];
      }
    }
  }
  CHECK(max_abs_diff(y, expected) / max_abs(expected) < 1e-10);
}

TEST_CASE("prefix operator") {
  SUBCASE("rows of the all-ones workload") {
    RowStream z(3, std::vector<double>(3, 0.0));
    z[0][0] = z[1][1] = z[2][2] = 1.0;
    const RowStream y = prefix_apply(z);
    const RowStream expected = {{1, 0, 0}, {1, 1, 0}, {1, 1, 1}};
    CHECK(max_abs_diff(y, expected) == 0.0);
  }
  SUBCASE("zeros map to zeros") {
    const RowStream z(5, std::vector<double>(2, 0.0));
    CHECK(max_abs(prefix_apply(z)) == 0.0);
  }
  SUBCASE("random stream matches dense multiply") {
    TestRng rng(5);
    const RowStream z = bandmf::testing::random_stream(50, 3, rng);
    const RowStream y = prefix_apply(z);
    RowStream expected(50, std::vector<double>(3, 0.0));
    std::vector<double> acc(3, 0.0);
    for (std::size_t i = 0; i < 50; ++i) {
      for (std::size_t w = 0; w < 3; ++w) {
        acc[w] += z[i][w];
        expected[i][w] = acc[w];
      }
    }
    CHECK(max_abs_diff(y, expected) / max_abs(expected) < 1e-12);
  }
}

TEST_CASE("toeplitz solve") {
  SUBCASE("identity coefficients") {
    const std::vector<double> theta = {1.0};
    const std::vector<double> rhs(9, 1.0);
    const std::vector<double> w = toeplitz_solve(theta, rhs);
    for (double v : w) CHECK(v == 1.0);
  }
  SUBCASE("telescoping inverse of (1,-1)") {
    const std::vector<double> theta = {1.0, -1.0};
    std::vector<double> rhs(8, 0.0);
    rhs[0] = 1.0;
    const std::vector<double> w = toeplitz_solve(theta, rhs);
    for (double v : w) CHECK(v == 1.0);
  }
  SUBCASE("matches dense triangular solve") {
    const ToeplitzCoeffs s(32, {1.0, 0.5, 0.25});
    const std::vector<double> rhs(32, 1.0);
    const std::vector<double> w = toeplitz_solve(s.theta, rhs);
    const std::vector<double> expected =
        reference::lower_solve(reference::dense_from_toeplitz(s), rhs);
    double rel = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      rel = std::max(rel, std::abs(w[i] - expected[i]) /
                              std::max(std::abs(expected[i]), 1e-300));
    }
    CHECK(rel < 1e-10);
  }
  SUBCASE("transpose solve inverts the transposed system") {
    TestRng rng(23);
    const ToeplitzCoeffs s(20, {1.0, 0.4, 0.2, 0.1});
    std::vector<double> rhs(20);
    for (auto& v : rhs) v = rng.uniform(-1.0, 1.0);
    const std::vector<double> u = toeplitz_solve_transpose(s.theta, rhs);
    // C^T u should reproduce rhs.
    const Dense c = reference::dense_from_toeplitz(s);
    for (std::size_t i = 0; i < 20; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < 20; ++j) acc += c.at(j, i) * u[j];
      CHECK(acc == doctest::Approx(rhs[i]).epsilon(1e-10));
    }
  }
}

TEST_CASE("forward then inverse round trip") {
  TestRng rng(17);
  for (std::size_t b : {1u, 3u, 8u}) {
    const BandedParams s = bandmf::testing::random_banded(40, b, rng);
    const BandMatrix c = to_band_matrix(s);
    const RowStream z = bandmf::testing::random_stream(40, 4, rng);
    const RowStream round =
        banded_inverse_apply(c, banded_forward_apply(c, z));
    CHECK(max_abs_diff(round, z) / max_abs(z) < 1e-8);
  }
}

TEST_CASE("streaming operators are linear and causal") {
  TestRng rng(29);
  const BandedParams s = bandmf::testing::random_banded(24, 4, rng);
  const BandMatrix c = to_band_matrix(s);
  const RowStream z1 = bandmf::testing::random_stream(24, 2, rng);
  const RowStream z2 = bandmf::testing::random_stream(24, 2, rng);

  SUBCASE("linearity") {
    const double a = 1.75;
    const double ap = -0.4;
    RowStream combo(24, std::vector<double>(2));
    for (std::size_t i = 0; i < 24; ++i) {
      for (std::size_t w = 0; w < 2; ++w) {
        combo[i][w] = a * z1[i][w] + ap * z2[i][w];
      }
    }
    const RowStream y_combo = banded_inverse_apply(c, combo);
    const RowStream y1 = banded_inverse_apply(c, z1);
    const RowStream y2 = banded_inverse_apply(c, z2);
    double worst = 0.0;
    for (std::size_t i = 0; i < 24; ++i) {
      for (std::size_t w = 0; w < 2; ++w) {
        worst = std::max(worst, std::abs(y_combo[i][w] - a * y1[i][w] -
                                         ap * y2[i][w]));
      }
    }
    CHECK(worst < 1e-10 * std::max(1.0, max_abs(y_combo)));
  }

  SUBCASE("causality: later inputs cannot affect earlier outputs") {
    RowStream perturbed = z1;
    const std::size_t cut = 15;
    for (std::size_t i = cut; i < 24; ++i) {
      for (auto& v : perturbed[i]) v += 3.0;
    }
    const RowStream ya = banded_inverse_apply(c, z1);
    const RowStream yb = banded_inverse_apply(c, perturbed);
    for (std::size_t i = 0; i < cut; ++i) {
      for (std::size_t w = 0; w < 2; ++w) CHECK(ya[i][w] == yb[i][w]);
    }
  }
}

TEST_CASE("collected SLO outputs equal the dense matrices") {
  TestRng rng(31);
  for (std::size_t n : {64u, 512u}) {
    const std::size_t b = 5;
    const BandedParams s = bandmf::testing::random_banded(n, b, rng);
    const BandMatrix c = to_band_matrix(s);
    // Probe with indicator streams: column j of the operator matrix.
    BandedInverseOperator op(c, n);
    const Dense inv = reference::lower_inverse(
        reference::dense_from_banded_params(s));
    double worst = 0.0;
    std::vector<double> row(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::fill(row.begin(), row.end(), 0.0);
      row[i] = 1.0;
      op.step(row);
      for (std::size_t j = 0; j < n; ++j) {
        worst = std::max(worst, std::abs(row[j] - inv.at(i, j)));
      }
    }
    CHECK(worst < 1e-9);
    CHECK(op.buffer_size() == b);
    CHECK(op.step_index() == n);
  }

  SUBCASE("toeplitz workload product operator") {
    const std::size_t n = 64;
    std::vector<double> lambda = {1.0, -0.5, 0.25};
    const Workload wl = Workload::Toeplitz(n, lambda);
    ToeplitzProductOperator op(lambda, n, n);
    const Dense dense = reference::dense_workload(wl);
    double worst = 0.0;
    std::vector<double> row(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::fill(row.begin(), row.end(), 0.0);
      row[i] = 1.0;
      op.step(row);
      for (std::size_t j = 0; j < n; ++j) {
        worst = std::max(worst, std::abs(row[j] - dense.at(i, j)));
      }
    }
    CHECK(worst == 0.0);
    CHECK(op.buffer_size() == lambda.size());
  }
}

TEST_CASE("error paths") {
  SUBCASE("zero diagonal is singular") {
    BandMatrix c(4, 2);
    c.band(0, 0) = 1.0;
    c.band(0, 1) = 0.0;  // singular
    c.band(0, 2) = 1.0;
    c.band(0, 3) = 1.0;
    const RowStream z(4, std::vector<double>(1, 1.0));
    CHECK_THROWS_AS(banded_inverse_apply(c, z), SingularStrategyError);
    CHECK_THROWS_AS(toeplitz_solve(std::vector<double>{0.0, 1.0},
                                   std::vector<double>(4, 1.0)),
                    SingularStrategyError);
  }
  SUBCASE("stream length mismatch") {
    const ToeplitzCoeffs s(4, {1.0});
    const RowStream too_long(5, std::vector<double>(1, 0.0));
    CHECK_THROWS_AS(banded_inverse_apply(to_band_matrix(s), too_long),
                    ShapeError);
  }
  SUBCASE("dimension mismatch mid-stream") {
    PrefixOperator op(3, 2);
    std::vector<double> ok(2, 1.0);
    std::vector<double> bad(3, 1.0);
    op.step(ok);
    CHECK_THROWS_AS(op.step(bad), ShapeError);
  }
  SUBCASE("stepping past the end") {
    PrefixOperator op(1, 1);
    std::vector<double> v(1, 1.0);
    op.step(v);
    CHECK_THROWS_AS(op.step(v), ShapeError);
    op.reset();
    op.step(v);  // usable again after reset
    CHECK(op.step_index() == 1);
  }
}
