#pragma once

#include <stdexcept>
#include <string>

namespace jplrdl {

/// Numerical failure in a solver or factorization (SVD non-convergence,
/// singular transformed system, ...). Distinct from argument validation,
/// which uses std::invalid_argument.
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input file (matrix/labels/model containers).
class parse_error : public std::runtime_error {
 public:
  explicit parse_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace jplrdl
