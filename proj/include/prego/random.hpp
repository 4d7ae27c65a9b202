#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace prego {

// mt19937_64's output sequence is fixed by the standard; the distribution
// helpers below are written out so results match across standard libraries.
using Rng = std::mt19937_64;

/// Uniform integer in [0, bound). `bound` must be positive.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t bound) {
  const std::uint64_t limit = Rng::max() - Rng::max() % bound;
  std::uint64_t draw = rng();
  while (draw >= limit) draw = rng();
  return draw % bound;
}

/// Uniform double in [0, 1).
inline double uniform_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <typename T>
void shuffle(std::span<T> items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = uniform_index(rng, i);
    std::swap(items[i - 1], items[j]);
  }
}

template <typename Container>
void shuffle(Container& items, Rng& rng) {
  shuffle(std::span(items), rng);
}

}  // namespace prego
