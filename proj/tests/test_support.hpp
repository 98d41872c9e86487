#pragma once

// Shared deterministic generators for the test suites.

#include <Eigen/Dense>

#include <random>

namespace testsup {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline std::mt19937_64 rng(unsigned long long seed) { return std::mt19937_64(seed); }

inline Matrix gaussian(std::mt19937_64& gen, Eigen::Index rows, Eigen::Index cols,
                       double stddev = 1.0) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = dist(gen);
  return m;
}

inline Matrix spd(std::mt19937_64& gen, Eigen::Index n, double shift = 0.1) {
  Matrix m = gaussian(gen, n, n);
  return m.transpose() * m + shift * Matrix::Identity(n, n);
}

}  // namespace testsup
