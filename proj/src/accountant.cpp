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

#include "bandmf/accountant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "bandmf/errors.hpp"
#include "bandmf/loss.hpp"

namespace bandmf {

namespace {

// log C(n, k) from a table of log-factorials over the fixed order range;
// calibration evaluates millions of binomial terms.
double log_choose(int n, int k) {
  static const std::vector<double> log_fact = [] {
    std::vector<double> t(kMaxRdpOrder + 2, 0.0);
    for (std::size_t i = 1; i < t.size(); ++i) {
      t[i] = t[i - 1] + std::log(static_cast<double>(i));
    }
    return t;
  }();
  return log_fact[n] - log_fact[k] - log_fact[n - k];
}

double log_sum_exp(const std::vector<double>& terms) {
  double m = -std::numeric_limits<double>::infinity();
  for (double t : terms) m = std::max(m, t);
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - m);
  return m + std::log(acc);
}

}  // namespace

std::vector<std::string> PrivacyParams::validate() const {
  if (!(epsilon > 0.0)) throw InfeasibleError("epsilon must be positive");
  if (!(delta > 0.0 && delta < 1.0)) {
    throw InfeasibleError("delta must lie in (0, 1)");
  }
  if (n == 0) throw InfeasibleError("n must be positive");
  if (!(k > 0.0)) throw InfeasibleError("epochs k must be positive");
  if (k > static_cast<double>(n)) {
    throw InfeasibleError("epochs k exceed iterations n (q > 1)");
  }
  std::vector<std::string> warnings;
  if (delta >= 1.0 / static_cast<double>(n)) {
    warnings.push_back("delta >= 1/n; smaller delta is recommended");
  }
  return warnings;
}

double rdp_subsampled_gaussian(double q, double sigma, int alpha) {
  if (!(q > 0.0 && q <= 1.0)) throw InfeasibleError("q must lie in (0, 1]");
  if (!(sigma > 0.0)) throw InfeasibleError("sigma must be positive");
  if (alpha < 2) throw InfeasibleError("alpha must be an integer >= 2");
  if (q == 1.0) return alpha / (2.0 * sigma * sigma);

  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);
  std::vector<double> terms;
  terms.reserve(alpha + 1);
  for (int j = 0; j <= alpha; ++j) {
    double t = log_choose(alpha, j) + (alpha - j) * log_1mq;
    if (j > 0) t += j * log_q;
    t += j * (j - 1.0) / (2.0 * sigma * sigma);
    terms.push_back(t);
  }
  const double lse = log_sum_exp(terms);
  // The sum is >= 1 (j = 0 term alone is (1-q)^alpha and the rest are
  // positive), so the result is nonnegative up to rounding.
  return std::max(0.0, lse) / (alpha - 1.0);
}

double epsilon_for_sigma(double q, std::size_t steps, double sigma,
                         double delta) {
  const double log_inv_delta = std::log(1.0 / delta);
  double best = std::numeric_limits<double>::infinity();
  for (int alpha = kMinRdpOrder; alpha <= kMaxRdpOrder; ++alpha) {
    const double rdp = rdp_subsampled_gaussian(q, sigma, alpha);
    const double eps =
        static_cast<double>(steps) * rdp + log_inv_delta / (alpha - 1.0);
    best = std::min(best, eps);
  }
  return best;
}

double calibrate_sigma(double q, std::size_t steps, double epsilon,
                       double delta) {
  double lo = kSigmaSearchLo;
  double hi = kSigmaSearchHi;
  if (epsilon_for_sigma(q, steps, hi, delta) > epsilon) {
    throw CalibrationRangeError(
        "target epsilon unreachable at sigma = " + std::to_string(hi));
  }
  if (epsilon_for_sigma(q, steps, lo, delta) <= epsilon) return lo;
  while (hi - lo > kSigmaSearchTol) {
    const double mid = 0.5 * (lo + hi);
    if (epsilon_for_sigma(q, steps, mid, delta) <= epsilon) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;  // certified feasible endpoint
}

double sigma_sgd(const PrivacyParams& params) {
  params.validate();
  return calibrate_sigma(params.sampling_probability(), params.n,
                         params.epsilon, params.delta);
}

double sigma_bandmf(const PrivacyParams& params, std::size_t b) {
  params.validate();
  if (b == 0) throw InfeasibleError("band count must be positive");
  const double bk = static_cast<double>(b) * params.k;
  if (bk > static_cast<double>(params.n) * (1.0 + 1e-12)) {
    throw InfeasibleError("infeasible bands: b*k = " + std::to_string(bk) +
                          " exceeds n = " + std::to_string(params.n));
  }
  const double q = std::min(1.0, bk / static_cast<double>(params.n));
  const std::size_t steps = (params.n + b - 1) / b;  // ceil(n/b), conservative
  return calibrate_sigma(q, steps, params.epsilon, params.delta);
}

StrategyClass strategy_class_from_name(const std::string& name) {
  if (name == "toeplitz") return StrategyClass::kToeplitz;
  if (name == "banded") return StrategyClass::kBanded;
  throw ShapeError("unknown strategy class: " + name);
}

std::vector<std::size_t> default_band_candidates(const PrivacyParams& params) {
  const std::size_t max_b = static_cast<std::size_t>(
      std::floor(static_cast<double>(params.n) / params.k + 1e-12));
  std::vector<std::size_t> bs;
  for (std::size_t b = 1; b <= std::max<std::size_t>(1, max_b); b *= 2) {
    bs.push_back(b);
  }
  return bs;
}

BandSweepResult band_sweep(const PrivacyParams& params,
                           const std::vector<std::size_t>& candidate_bs,
                           StrategyClass strategy_class,
                           const OptimizerConfig& opt_config) {
  params.validate();
  std::vector<std::size_t> bs = candidate_bs;
  std::sort(bs.begin(), bs.end());
  bs.erase(std::unique(bs.begin(), bs.end()), bs.end());
  if (bs.empty()) throw InfeasibleError("band sweep needs candidates");

  BandSweepResult result;
  result.rows.reserve(bs.size());
  for (std::size_t b : bs) {
    BandSweepRow row;
    row.b = b;
    row.sigma = sigma_bandmf(params, b);  // throws if infeasible
    if (strategy_class == StrategyClass::kToeplitz) {
      row.loss = optimize_toeplitz(params.n, b, opt_config).final_loss();
    } else {
      row.loss = optimize_banded(params.n, b, opt_config).final_loss();
    }
    row.rmse = row.sigma * std::sqrt(row.loss / static_cast<double>(params.n));
    result.rows.push_back(row);
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < result.rows.size(); ++i) {
    if (result.rows[i].rmse < result.rows[best].rmse) best = i;
  }
  result.argmin_b = result.rows[best].b;
  return result;
}

std::size_t heuristic_bands(const PrivacyParams& params) {
  params.validate();
  const double n = static_cast<double>(params.n);
  const double raw =
      std::max(1.0, std::round(params.epsilon * std::sqrt(n) / params.k));
  const double cap = std::max(1.0, std::floor(n / params.k + 1e-12));
  return static_cast<std::size_t>(std::min(raw, cap));
}

void write_sweep_csv(std::ostream& os, const BandSweepResult& result) {
  os << "b,sigma,loss,rmse\n";
  os.precision(17);
  for (const auto& row : result.rows) {
    os << row.b << "," << row.sigma << "," << row.loss << "," << row.rmse
       << "\n";
  }
  os << "# argmin_b=" << result.argmin_b << "\n";
}

}  // namespace bandmf
