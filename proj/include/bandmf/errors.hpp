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

#include <stdexcept>
#include <string>

namespace bandmf {

// Diagonal magnitudes below this are treated as singular. Far below the
// diagonal of any optimized strategy; guards division blow-up.
inline constexpr double kSingularTol = 1e-12;

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or inconsistent inputs: stream length mismatches, bad file
// contents, coefficient arrays of the wrong size.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Configurations that cannot be satisfied: b*k > n, b > n, calibration
// target unreachable within the search range, dense limit exceeded.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

class CalibrationRangeError : public InfeasibleError {
 public:
  using InfeasibleError::InfeasibleError;
};

// Numerical failures: singular strategies, non-finite intermediates.
class NumericError : public Error {
 public:
  using Error::Error;
};

class SingularStrategyError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace bandmf
