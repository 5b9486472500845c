// Copyright 2026 The collabrec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef COLLABREC_SEED_HPP_
#define COLLABREC_SEED_HPP_

#include <cstdint>
#include <random>

namespace collabrec {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

// Independent streams inside one repetition. Values are part of the seed
// schedule; never renumber them.
enum class SeedStream : std::uint64_t {
  kSplit = 1,
  kPartition = 2,
  kAnchor = 3,
  // Indexed by party for individual models; centralized and collaborative
  // models use index 0, so one party alone reproduces the centralized fit.
  kLearner = 4,
};

// derive_seed(s, stream, i) = splitmix64(splitmix64(s ^ splitmix64(stream)) + i).
std::uint64_t derive_seed(std::uint64_t repetition_seed, SeedStream stream,
                          std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t repetition_seed, SeedStream stream,
                    std::uint64_t index = 0) {
  return Rng(derive_seed(repetition_seed, stream, index));
}

}  // namespace collabrec

#endif  // COLLABREC_SEED_HPP_
