#pragma once

// Class-partitioned dictionary: a single atom matrix whose columns are
// owned by consecutive per-class ranges. Atoms are unit-norm except for
// columns that collapsed to zero during learning, which are left in place
// until the trainer replaces them.

#include <numeric>
#include <vector>

#include "jplrdl/linalg.hpp"

namespace jplrdl {

struct ClassRange {
  Index begin = 0;
  Index count = 0;
};

struct StructuredDictionary {
  Matrix atoms;  // d x total atoms
  std::vector<ClassRange> ranges;

  Index num_classes() const { return static_cast<Index>(ranges.size()); }
  Index total_atoms() const { return atoms.cols(); }

  auto block(Index class_i) { return atoms.middleCols(ranges[class_i].begin, ranges[class_i].count); }
  auto block(Index class_i) const {
    return atoms.middleCols(ranges[class_i].begin, ranges[class_i].count);
  }
};

/// Scales every column to unit l2 norm; columns with norm below zero_tol
/// are left untouched so a vanished atom is visible to the caller.
inline Matrix normalize_columns(Matrix m, double zero_tol = 1e-12) {
  for (Index c = 0; c < m.cols(); ++c) {
    double n = m.col(c).norm();
    if (n > zero_tol) m.col(c) /= n;
  }
  return m;
}

inline void validate(const StructuredDictionary& dict) {
  require_finite(dict.atoms, "dictionary");
  if (dict.ranges.empty()) throw std::invalid_argument("dictionary: no class ranges");
  Index expect = 0;
  for (const ClassRange& r : dict.ranges) {
    if (r.begin != expect || r.count < 1) {
      throw std::invalid_argument("dictionary: class ranges must partition the atom columns");
    }
    expect += r.count;
  }
  if (expect != dict.atoms.cols()) {
    throw std::invalid_argument("dictionary: class ranges must cover every atom column");
  }
  for (Index c = 0; c < dict.atoms.cols(); ++c) {
    double n = dict.atoms.col(c).norm();
    if (n > 1e-12 && std::abs(n - 1.0) > 1e-10) {
      std::ostringstream msg;
      msg << "dictionary: atom " << c << " has norm " << n << ", expected 1";
      throw std::invalid_argument(msg.str());
    }
  }
}

}  // namespace jplrdl
