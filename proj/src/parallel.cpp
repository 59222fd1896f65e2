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

#include "bandmf/parallel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace bandmf::parallel {

std::vector<BlockRange> fixed_blocks(std::size_t extent, std::size_t block) {
  std::vector<BlockRange> out;
  if (extent == 0) return out;
  if (block == 0) block = 1;
  out.reserve((extent + block - 1) / block);
  for (std::size_t begin = 0; begin < extent; begin += block) {
    out.push_back({begin, begin + block < extent ? begin + block : extent});
  }
  return out;
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace bandmf::parallel
