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

// Compares the OpenMP streaming kernels against the serial streaming
// transcription and the dense O(n^3) oracle. Run with no arguments for the
// default grid; pass `--quick` for a smaller one.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "bandmf/loss.hpp"
#include "bandmf/optimizer.hpp"
#include "bandmf/parallel.hpp"
#include "reference.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double time_once(const std::function<double()>& fn, double* out) {
  const auto t0 = Clock::now();
  *out = fn();
  const auto t1 = Clock::now();
  return std::chrono::duration<double>(t1 - t0).count();
}

double time_best(const std::function<double()>& fn, int reps, double* out) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) best = std::min(best, time_once(fn, out));
  return best;
}

bandmf::BandedParams make_banded(std::size_t n, std::size_t b) {
  bandmf::BandedParams s(n, b);
  const std::vector<double> init = bandmf::toeplitz_sqrt_series_init(b);
  for (std::size_t l = 0; l < b; ++l) {
    for (std::size_t j = 0; j < n; ++j) s.param(l, j) = init[l];
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  bool quick = false;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--quick") == 0) quick = true;
  }

  std::printf("threads=%d\n\n", bandmf::parallel::max_threads());
  std::printf("banded objective: parallel streaming vs serial streaming vs dense\n");
  std::printf("%8s %4s %12s %12s %12s %10s %9s\n", "n", "b", "parallel_s",
              "serial_s", "dense_s", "speedup", "rel_diff");

  const std::vector<std::pair<std::size_t, std::size_t>> banded_grid =
      quick ? std::vector<std::pair<std::size_t, std::size_t>>{{256, 8},
                                                               {1024, 16}}
            : std::vector<std::pair<std::size_t, std::size_t>>{
                  {256, 8}, {1024, 16}, {2048, 16}, {4096, 16}, {8192, 16}};

  for (const auto& [n, b] : banded_grid) {
    const bandmf::BandedParams s = make_banded(n, b);
    double parallel_v = 0.0;
    double serial_v = 0.0;
    const double t_par =
        time_best([&] { return bandmf::banded_loss(s); }, 3, &parallel_v);
    const double t_ser = time_best(
        [&] { return bandmf::reference::serial_banded_loss(s); }, 3,
        &serial_v);
    double dense_v = 0.0;
    double t_dense = 0.0;
    if (n <= 2048) {
      t_dense = time_once(
          [&] {
            return bandmf::reference::dense_loss(
                bandmf::reference::dense_from_banded_params(s));
          },
          &dense_v);
    }
    const double rel =
        std::abs(parallel_v - serial_v) / std::max(serial_v, 1e-300);
    std::printf("%8zu %4zu %12.4f %12.4f %12s %9.2fx %9.1e\n", n, b, t_par,
                t_ser, n <= 2048 ? std::to_string(t_dense).c_str() : "-",
                t_ser / t_par, rel);
  }

  std::printf("\ntoeplitz objective: O(n b) streaming evaluation\n");
  std::printf("%10s %4s %12s %14s\n", "n", "b", "seconds", "ns_per_entry");
  const std::vector<std::size_t> toeplitz_grid =
      quick ? std::vector<std::size_t>{1u << 17}
            : std::vector<std::size_t>{1u << 14, 1u << 17, 1u << 20};
  for (std::size_t n : toeplitz_grid) {
    bandmf::ToeplitzCoeffs s(n, bandmf::toeplitz_sqrt_series_init(16));
    double v = 0.0;
    const double t = time_best([&] { return bandmf::toeplitz_loss(s); }, 5, &v);
    std::printf("%10zu %4d %12.5f %14.2f\n", n, 16, t,
                1e9 * t / static_cast<double>(n));
  }
  return 0;
}
