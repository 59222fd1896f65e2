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
#include <vector>

namespace bandmf::parallel {

// Coordinate blocks have a fixed width so per-block partial results (and the
// ordered reduction over them) do not depend on the number of threads. The
// kernels are bit-identical for any thread count.
inline constexpr std::size_t kCoordinateBlock = 64;

struct BlockRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
};

std::vector<BlockRange> fixed_blocks(std::size_t extent,
                                     std::size_t block = kCoordinateBlock);

int max_threads();
void set_threads(int n);

}  // namespace bandmf::parallel
