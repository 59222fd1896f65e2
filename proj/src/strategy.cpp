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

#include "bandmf/strategy.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bandmf/errors.hpp"

namespace bandmf {

namespace {

void check_dims(std::size_t n, std::size_t b) {
  if (n == 0) throw ShapeError("strategy length n must be positive");
  if (b == 0) throw ShapeError("band count b must be positive");
  if (b > n) {
    throw InfeasibleError("band count " + std::to_string(b) +
                          " exceeds iterations " + std::to_string(n));
  }
}

}  // namespace

ToeplitzCoeffs::ToeplitzCoeffs(std::size_t n_, std::vector<double> theta_)
    : n(n_), theta(std::move(theta_)) {
  check_dims(n, theta.size());
}

BandedParams::BandedParams(std::size_t n_, std::size_t b_)
    : n(n_), b(b_), theta(n_ * b_, 0.0) {
  check_dims(n, b);
}

BandedParams::BandedParams(std::size_t n_, std::size_t b_,
                           std::vector<double> theta_)
    : n(n_), b(b_), theta(std::move(theta_)) {
  check_dims(n, b);
  if (theta.size() != n * b) {
    throw ShapeError("banded parameter array has size " +
                     std::to_string(theta.size()) + ", expected " +
                     std::to_string(n * b));
  }
}

std::vector<double> BandedParams::column_norms() const {
  std::vector<double> norms(n, 0.0);
  for (std::size_t l = 0; l < b; ++l) {
    const double* row = theta.data() + l * n;
    for (std::size_t j = 0; j < n; ++j) norms[j] += row[j] * row[j];
  }
  for (std::size_t j = 0; j < n; ++j) {
    norms[j] = std::sqrt(norms[j]);
    if (!(norms[j] > kSingularTol)) {
      throw SingularStrategyError("parameter column " + std::to_string(j) +
                                  " has zero norm");
    }
  }
  return norms;
}

Workload Workload::Prefix(std::size_t n) {
  Workload w;
  w.kind = Kind::kPrefix;
  w.n = n;
  return w;
}

Workload Workload::Toeplitz(std::size_t n, std::vector<double> lambda) {
  if (lambda.empty()) throw ShapeError("toeplitz workload needs coefficients");
  if (lambda.size() > n) {
    throw ShapeError("workload coefficients longer than n");
  }
  Workload w;
  w.kind = Kind::kToeplitz;
  w.n = n;
  w.lambda = std::move(lambda);
  return w;
}

std::vector<double> Workload::first_column() const {
  std::vector<double> col(n, 0.0);
  if (kind == Kind::kPrefix) {
    for (auto& v : col) v = 1.0;
  } else {
    for (std::size_t l = 0; l < lambda.size(); ++l) col[l] = lambda[l];
  }
  return col;
}

BandMatrix to_band_matrix(const ToeplitzCoeffs& s) {
  BandMatrix c(s.n, s.theta.size());
  for (std::size_t l = 0; l < c.b; ++l) {
    for (std::size_t j = 0; j + l < c.n; ++j) c.band(l, j) = s.theta[l];
  }
  return c;
}

BandMatrix to_band_matrix(const BandedParams& s) {
  const std::vector<double> norms = s.column_norms();
  BandMatrix c(s.n, s.b);
  for (std::size_t l = 0; l < s.b; ++l) {
    for (std::size_t j = 0; j + l < s.n; ++j) {
      c.band(l, j) = s.param(l, j) / norms[j];
    }
  }
  return c;
}

BandMatrix to_band_matrix(const Strategy& s) {
  return std::visit([](const auto& v) { return to_band_matrix(v); }, s);
}

Dense materialize(const BandMatrix& c) {
  Dense m(c.n, c.n);
  for (std::size_t l = 0; l < c.b; ++l) {
    for (std::size_t j = 0; j + l < c.n; ++j) m.at(j + l, j) = c.band(l, j);
  }
  return m;
}

Dense materialize(const Strategy& s, std::size_t dense_limit) {
  const std::size_t n = strategy_n(s);
  if (n > dense_limit) {
    throw InfeasibleError("refusing to materialize n=" + std::to_string(n) +
                          " (dense limit " + std::to_string(dense_limit) +
                          ")");
  }
  return materialize(to_band_matrix(s));
}

BandedParams column_normalize(const ToeplitzCoeffs& s) {
  if (std::abs(s.theta[0]) <= kSingularTol) {
    throw SingularStrategyError("toeplitz strategy has zero diagonal");
  }
  // Parameters equal to theta wherever the band fits inside the matrix and
  // zero past the edge, so the induced normalization divides each column of
  // C(theta) by its actual L2 norm.
  BandedParams out(s.n, s.theta.size());
  for (std::size_t l = 0; l < out.b; ++l) {
    for (std::size_t j = 0; j + l < out.n; ++j) out.param(l, j) = s.theta[l];
  }
  return out;
}

double sensitivity(const Strategy& s) {
  if (std::holds_alternative<BandedParams>(s)) {
    return 1.0;  // unit column norms by construction
  }
  const auto& t = std::get<ToeplitzCoeffs>(s);
  double sq = 0.0;
  for (double v : t.theta) sq += v * v;
  return std::sqrt(sq);
}

std::size_t strategy_n(const Strategy& s) {
  return std::visit([](const auto& v) { return v.n; }, s);
}

std::size_t strategy_bands(const Strategy& s) {
  if (std::holds_alternative<BandedParams>(s)) {
    return std::get<BandedParams>(s).b;
  }
  return std::get<ToeplitzCoeffs>(s).bands();
}

Strategy strategy_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ShapeError(std::string("strategy JSON parse error: ") + e.what());
  }
  try {
    const std::string kind = j.at("kind").get<std::string>();
    const std::size_t n = j.at("n").get<std::size_t>();
    const std::size_t b = j.at("b").get<std::size_t>();
    std::vector<double> coeffs =
        j.at("coefficients").get<std::vector<double>>();
    if (kind == "toeplitz") {
      if (coeffs.size() != b) {
        throw ShapeError("toeplitz strategy expects b coefficients");
      }
      return ToeplitzCoeffs(n, std::move(coeffs));
    }
    if (kind == "banded") {
      return BandedParams(n, b, std::move(coeffs));
    }
    throw ShapeError("unknown strategy kind: " + kind);
  } catch (const nlohmann::json::exception& e) {
    throw ShapeError(std::string("strategy JSON field error: ") + e.what());
  }
}

std::string strategy_to_json(const Strategy& s) {
  nlohmann::json j;
  if (std::holds_alternative<ToeplitzCoeffs>(s)) {
    const auto& t = std::get<ToeplitzCoeffs>(s);
    j["kind"] = "toeplitz";
    j["n"] = t.n;
    j["b"] = t.bands();
    j["coefficients"] = t.theta;
  } else {
    const auto& p = std::get<BandedParams>(s);
    j["kind"] = "banded";
    j["n"] = p.n;
    j["b"] = p.b;
    j["coefficients"] = p.theta;
  }
  return j.dump(2);
}

Strategy load_strategy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ShapeError("cannot read strategy file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return strategy_from_json(buf.str());
}

void save_strategy(const Strategy& s, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ShapeError("cannot write strategy file: " + path.string());
  out << strategy_to_json(s) << "\n";
}

}  // namespace bandmf
