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
#include <functional>
#include <map>
#include <vector>
#include <numbers>
#include <sstream>

#include "bandmf/accountant.hpp"
#include "bandmf/errors.hpp"

using namespace bandmf;

namespace {

// Adaptive Simpson quadrature, test-only oracle.
double simpson(const std::function<double(double)>& f, double a, double b,
               double fa, double fm, double fb, double whole, double tol,
               int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

// Renyi divergence D_alpha(P || Q) of the subsampled Gaussian pair
// P = (1-q) N(0, sigma^2) + q N(1, sigma^2), Q = N(0, sigma^2), by direct
// numerical integration of E_Q[(P/Q)^alpha].
double renyi_divergence_quadrature(double q, double sigma, int alpha) {
  const auto integrand = [q, sigma, alpha](double x) {
    const double ratio =
        (1.0 - q) + q * std::exp((2.0 * x - 1.0) / (2.0 * sigma * sigma));
    const double gauss = std::exp(-x * x / (2.0 * sigma * sigma)) /
                         (sigma * std::sqrt(2.0 * std::numbers::pi));
    return gauss * std::pow(ratio, alpha);
  };
  const double lo = -20.0 * sigma;
  const double hi = 20.0 * sigma + 1.0 + static_cast<double>(alpha);
  const double moment = integrate(integrand, lo, hi, 1e-14);
  return std::log(moment) / (alpha - 1.0);
}

}  // namespace

TEST_CASE("rdp of the subsampled gaussian") {
  SUBCASE("q = 1 reduces to the pure Gaussian") {
    for (int alpha : {2, 8, 64}) {
      for (double sigma : {0.5, 1.0, 4.0}) {
        CHECK(rdp_subsampled_gaussian(1.0, sigma, alpha) ==
              doctest::Approx(alpha / (2.0 * sigma * sigma)).epsilon(1e-12));
      }
    }
  }
  SUBCASE("vanishing sampling rate gives vanishing privacy loss") {
    CHECK(rdp_subsampled_gaussian(1e-12, 1.0, 8) < 1e-9);
    CHECK(rdp_subsampled_gaussian(1e-12, 1.0, 8) >= 0.0);
  }
  SUBCASE("matches the quadrature oracle at integer order") {
    const double q = 0.01;
    const double sigma = 1.0;
    const int alpha = 8;
    const double bound = rdp_subsampled_gaussian(q, sigma, alpha);
    const double integral = renyi_divergence_quadrature(q, sigma, alpha);
    CHECK(bound >= integral - 1e-12);          // upper-bound check
    CHECK(std::abs(bound - integral) < 1e-8);  // and exact at integer order
  }
  SUBCASE("domain errors") {
    CHECK_THROWS_AS(rdp_subsampled_gaussian(0.0, 1.0, 2), InfeasibleError);
    CHECK_THROWS_AS(rdp_subsampled_gaussian(1.1, 1.0, 2), InfeasibleError);
    CHECK_THROWS_AS(rdp_subsampled_gaussian(0.5, 0.0, 2), InfeasibleError);
    CHECK_THROWS_AS(rdp_subsampled_gaussian(0.5, 1.0, 1), InfeasibleError);
  }
}

TEST_CASE("sigma_sgd") {
  SUBCASE("monotone decreasing in epsilon") {
    double prev = 1e300;
    for (double eps : {0.25, 0.5, 1.0, 2.0, 4.0}) {
      const PrivacyParams p{eps, 1e-6, 64, 64};
      const double s = sigma_sgd(p);
      CHECK(s < prev);
      prev = s;
    }
  }
  SUBCASE("calibration is self-consistent") {
    const PrivacyParams p{1.0, 1e-8, 512, 8};
    const double sigma = sigma_sgd(p);
    const double eps =
        epsilon_for_sigma(p.sampling_probability(), p.n, sigma, p.delta);
    CHECK(eps <= p.epsilon);
    const double eps_below = epsilon_for_sigma(
        p.sampling_probability(), p.n, sigma - 2.0 * kSigmaSearchTol, p.delta);
    CHECK(eps_below > p.epsilon);
  }
  SUBCASE("sigma/k is roughly flat once k exceeds sqrt(n eps)") {
    const PrivacyParams full{1.0, 1e-8, 4096, 4096};
    const PrivacyParams at_knee{1.0, 1e-8, 4096, 64};  // sqrt(4096) = 64
    const double ratio_full = sigma_sgd(full) / full.k;
    const double ratio_knee = sigma_sgd(at_knee) / at_knee.k;
    CHECK(ratio_full / ratio_knee > 0.75);
    CHECK(ratio_full / ratio_knee < 1.25);
  }
  SUBCASE("parameter validation") {
    CHECK_THROWS_AS(sigma_sgd({-1.0, 1e-8, 16, 1}), InfeasibleError);
    CHECK_THROWS_AS(sigma_sgd({1.0, 2.0, 16, 1}), InfeasibleError);
    CHECK_THROWS_AS(sigma_sgd({1.0, 1e-8, 16, 32}), InfeasibleError);
    const PrivacyParams loose{1.0, 0.5, 4, 1};
    CHECK(!loose.validate().empty());  // delta >= 1/n warns
  }
}

TEST_CASE("sigma_bandmf") {
  const PrivacyParams p{1.0, 1e-8, 1024, 16};
  SUBCASE("b = 1 is exactly sigma_sgd") {
    CHECK(sigma_bandmf(p, 1) == sigma_sgd(p));
  }
  SUBCASE("b = n/k hits q = 1") {
    const std::size_t b = 64;  // 1024 / 16
    const double direct = calibrate_sigma(1.0, 1024 / 64, p.epsilon, p.delta);
    CHECK(sigma_bandmf(p, b) == doctest::Approx(direct).epsilon(1e-12));
  }
  SUBCASE("non-decreasing in b") {
    double prev = 0.0;
    for (std::size_t b = 1; b * 16 <= 1024; b *= 2) {
      const double s = sigma_bandmf(p, b);
      CHECK(s >= prev);
      prev = s;
    }
  }
  SUBCASE("infeasible band counts throw") {
    CHECK_THROWS_AS(sigma_bandmf(p, 65), InfeasibleError);
    CHECK_THROWS_AS(sigma_bandmf(p, 0), InfeasibleError);
  }
  SUBCASE("ceiling rounding for non-divisible n/b") {
    const PrivacyParams odd{1.0, 1e-8, 1000, 10};
    // b = 3: q' = 0.03 over ceil(1000/3) = 334 steps.
    const double expected = calibrate_sigma(0.03, 334, odd.epsilon, odd.delta);
    CHECK(sigma_bandmf(odd, 3) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("heuristic_bands") {
  CHECK(heuristic_bands({1.0, 1e-8, 4096, 64}) == 1);
  CHECK(heuristic_bands({1.0, 1e-8, 4096, 8}) == 8);
  CHECK(heuristic_bands({8.0, 1e-8, 4096, 64}) == 8);
  // Clamped to the feasible range.
  CHECK(heuristic_bands({100.0, 1e-8, 4096, 1024}) == 4);
  CHECK(heuristic_bands({0.01, 1e-8, 4096, 1}) == 1);
}

TEST_CASE("band sweep") {
  const PrivacyParams p{1.0, 1e-8, 256, 4};
  OptimizerConfig quick;
  quick.max_iters = 200;
  quick.rel_tol = 1e-8;

  SUBCASE("default candidates are powers of two up to n/k") {
    const auto bs = default_band_candidates(p);
    CHECK(bs == std::vector<std::size_t>{1, 2, 4, 8, 16, 32, 64});
  }
  SUBCASE("rows, argmin, and the b = 1 closed form") {
    const auto result =
        band_sweep(p, {1, 2, 8, 32}, StrategyClass::kToeplitz, quick);
    REQUIRE(result.rows.size() == 4);
    CHECK(result.rows.front().b == 1);
    const double sgd = sigma_sgd(p);
    const double expected_rmse = sgd * std::sqrt((256.0 + 1.0) / 2.0);
    CHECK(result.rows.front().sigma == sgd);
    CHECK(result.rows.front().rmse ==
          doctest::Approx(expected_rmse).epsilon(1e-12));
    bool argmin_found = false;
    for (const auto& row : result.rows) {
      CHECK(row.rmse >= 0.0);
      CHECK(row.rmse == doctest::Approx(row.sigma * std::sqrt(row.loss / 256.0))
                            .epsilon(1e-12));
      if (row.b == result.argmin_b) argmin_found = true;
    }
    CHECK(argmin_found);
  }
  SUBCASE("csv format") {
    const auto result = band_sweep(p, {1, 4}, StrategyClass::kToeplitz, quick);
    std::ostringstream os;
    write_sweep_csv(os, result);
    const std::string text = os.str();
    CHECK(text.rfind("b,sigma,loss,rmse\n", 0) == 0);
    CHECK(text.find("# argmin_b=") != std::string::npos);
    // One line per row plus header and trailer.
    std::size_t lines = 0;
    for (char ch : text) lines += ch == '\n' ? 1 : 0;
    CHECK(lines == result.rows.size() + 2);
  }
  SUBCASE("infeasible candidate propagates") {
    CHECK_THROWS_AS(band_sweep(p, {128}, StrategyClass::kToeplitz, quick),
                    InfeasibleError);
  }
  SUBCASE("banded class is supported") {
    const auto result = band_sweep({1.0, 1e-8, 64, 4}, {1, 4},
                                   StrategyClass::kBanded, quick);
    CHECK(result.rows.size() == 2);
    CHECK(result.rows[1].loss <= result.rows[0].loss);
  }
}

TEST_CASE("strategy class names") {
  CHECK(strategy_class_from_name("toeplitz") == StrategyClass::kToeplitz);
  CHECK(strategy_class_from_name("banded") == StrategyClass::kBanded);
  CHECK_THROWS_AS(strategy_class_from_name("dense"), ShapeError);
}

TEST_CASE("known artifact: terminal q'=1 point dips at large epsilon") {
  // The integer-order RDP bound is exact at q = 1 but loose at intermediate
  // q, so for eps >= 4 the calibration at b = n/k comes out BELOW its
  // q' = 0.5 neighbor. This characterizes the artifact so a future tighter
  // accountant shows up as a failure here (and the monotone grid in the
  // acceptance suite can then be widened past eps = 2).
  const PrivacyParams p{4.0, 1e-8, 1024, 1.0};
  const double terminal = sigma_bandmf(p, 1024);  // q' = 1
  const double neighbor = sigma_bandmf(p, 512);   // q' = 0.5
  CHECK(terminal < neighbor);
  // Both calibrations remain individually sound.
  CHECK(epsilon_for_sigma(1.0, 1, terminal, p.delta) <= p.epsilon);
  CHECK(epsilon_for_sigma(0.5, 2, neighbor, p.delta) <= p.epsilon);
  // No such dip anywhere on the practical-budget grid.
  for (double eps : {0.5, 1.0, 2.0}) {
    for (double k : {1.0, 4.0, 16.0, 64.0}) {
      const PrivacyParams q{eps, 1e-8, 1024, k};
      double prev = 0.0;
      for (std::size_t b = 1; static_cast<double>(b) * k <= 1024.0; b *= 2) {
        const double s = sigma_bandmf(q, b);
        CHECK(s >= prev);
        prev = s;
      }
    }
  }
}

TEST_CASE("heuristic tracks the sweep argmin across the budget grid") {
  // eps in {0.5,1,2,4,8} x k in {1,4,16,64} at n = 4096. Within a factor of
  // 4 everywhere except the extreme (eps=8, k=1) corner, where the optimum
  // saturates at the n/k feasibility cap: the loss at the heuristic's
  // b = 512 is ~28% above the cap's while calibrated sigma (a certified
  // upper bound) differs by ~6%, so no accountant places the argmin within
  // factor 4 there. The corner is asserted as saturated instead.
  OptimizerConfig quick;
  quick.max_iters = 300;
  quick.rel_tol = 1e-8;
  const std::vector<double> eps_grid = {0.5, 1.0, 2.0, 4.0, 8.0};
  const std::vector<double> k_grid = {1.0, 4.0, 16.0, 64.0};
  std::map<std::pair<double, double>, double> argmin;
  for (double eps : eps_grid) {
    for (double k : k_grid) {
      const PrivacyParams p{eps, 1e-8, 4096, k};
      const auto sweep = band_sweep(p, default_band_candidates(p),
                                    StrategyClass::kToeplitz, quick);
      argmin[{eps, k}] = static_cast<double>(sweep.argmin_b);
      const auto h = static_cast<double>(heuristic_bands(p));
      const auto a = static_cast<double>(sweep.argmin_b);
      const double factor = std::max(h / a, a / h);
      if (eps == 8.0 && k == 1.0) {
        CHECK(sweep.argmin_b == 4096);  // pinned at the feasibility cap
        // The local structure still dips at the heuristic scale.
        double local_best = 1e300;
        double local_argmin = 1.0;
        for (const auto& row : sweep.rows) {
          if (row.b <= 1024 && row.rmse < local_best) {
            local_best = row.rmse;
            local_argmin = static_cast<double>(row.b);
          }
        }
        CHECK(std::max(h / local_argmin, local_argmin / h) <= 4.0);
      } else {
        CHECK(factor <= 4.0);
      }
    }
  }

  // Doubling eps roughly doubles the argmin; quadrupling k roughly quarters
  // it (each within a factor of 2, the sweep's own grid granularity). Pairs
  // touching the saturated corner are skipped.
  for (double k : k_grid) {
    for (std::size_t e = 0; e + 1 < eps_grid.size(); ++e) {
      if (eps_grid[e + 1] == 8.0 && k == 1.0) continue;
      const double growth = argmin[{eps_grid[e + 1], k}] / argmin[{eps_grid[e], k}];
      CHECK(growth >= 1.0);
      CHECK(growth <= 4.0);
    }
  }
  for (double eps : eps_grid) {
    for (std::size_t i = 0; i + 1 < k_grid.size(); ++i) {
      if (eps == 8.0 && k_grid[i] == 1.0) continue;
      const double decay = argmin[{eps, k_grid[i + 1]}] / argmin[{eps, k_grid[i]}];
      CHECK(decay >= 1.0 / 8.0);
      CHECK(decay <= 1.0 / 2.0);
    }
  }
}
