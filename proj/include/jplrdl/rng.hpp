#pragma once

// Seeded draws built directly on the mt19937_64 word stream. The standard
// distribution adaptors are implementation-defined, so fixed-seed outputs
// would change between standard libraries; these helpers keep corruption
// masks, splits, and dictionary padding reproducible from the seed alone.

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "jplrdl/linalg.hpp"

namespace jplrdl {

/// Uniform integer in [0, bound). Rejects draws from the final incomplete
/// block of the 64-bit range so every value is exactly equally likely.
inline std::uint64_t draw_below(std::mt19937_64& gen, std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("draw_below: bound must be positive");
  std::uint64_t x = gen();
  std::uint64_t r = x % bound;
  while (x - r > std::uint64_t(0) - bound) {
    x = gen();
    r = x % bound;
  }
  return r;
}

/// Uniform double in [0, 1) with the full 53 bits of significand.
inline double draw_unit(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

/// Partial Fisher-Yates: after the call the first k slots hold a uniform
/// sample of the items without replacement; k draws are consumed.
inline void sample_prefix(std::vector<Index>& items, Index k, std::mt19937_64& gen) {
  const Index n = static_cast<Index>(items.size());
  if (k < 0 || k > n) throw std::invalid_argument("sample_prefix: k out of range");
  for (Index i = 0; i < k; ++i) {
    Index j = i + static_cast<Index>(draw_below(gen, static_cast<std::uint64_t>(n - i)));
    std::swap(items[static_cast<size_t>(i)], items[static_cast<size_t>(j)]);
  }
}

/// Random unit-norm column; entries start uniform on [-1, 1).
inline Vector random_unit_vector(Index dim, std::mt19937_64& gen) {
  if (dim < 1) throw std::invalid_argument("random_unit_vector: dim must be positive");
  Vector v(dim);
  double n = 0.0;
  do {
    for (Index i = 0; i < dim; ++i) v(i) = 2.0 * draw_unit(gen) - 1.0;
    n = v.norm();
  } while (n <= 1e-12);
  return v / n;
}

}  // namespace jplrdl
