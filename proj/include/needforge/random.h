// Copyright 2026 The NeedForge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef NEEDFORGE_RANDOM_H_
#define NEEDFORGE_RANDOM_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace needforge {

// Seeded generator whose draws are identical on every standard library:
// std::mt19937_64's sequence is fixed by the standard, the distributions
// are not, so index sampling is done here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, n). n must be > 0.
  std::size_t UniformIndex(std::size_t n) {
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return static_cast<std::size_t>(x % bound);
  }

  // Uniform in [0, 1).
  double UniformReal() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // First `k` elements become a uniform sample without replacement
  // (partial Fisher-Yates).
  template <typename T>
  void PartialShuffle(std::vector<T>& items, std::size_t k) {
    for (std::size_t i = 0; i < k && i + 1 < items.size(); ++i) {
      const std::size_t j = i + UniformIndex(items.size() - i);
      std::swap(items[i], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace needforge

#endif  // NEEDFORGE_RANDOM_H_
