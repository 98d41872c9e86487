#pragma once

// Robust PCA by inexact augmented Lagrangian: split a data matrix into a
// low-rank part L and an entrywise-sparse part E by alternating singular
// value thresholding and soft thresholding with a running multiplier.
// The low-rank columns are the denoised sample representations the graph
// builders consume; one decomposition per class, never the pooled matrix.

#include <cstddef>
#include <vector>

#include "jplrdl/linalg.hpp"

namespace jplrdl {

struct RpcaConfig {
  double eta = 0.0;    // l1 weight; 0 selects 1/sqrt(max(rows, cols))
  double mu0 = 0.0;    // initial penalty; 0 selects 1.25 / sigma_1
  double rho = 1.5;    // penalty growth factor, must exceed 1
  int max_iter = 500;
  double tol = 1e-7;   // relative feasibility gap target
};

struct RpcaResult {
  Matrix low_rank;
  Matrix sparse;
  int iterations = 0;
  double final_residual = 0.0;  // ||X - L - E||_F / ||X||_F at exit
  bool converged = false;
  std::vector<double> residual_history;  // one entry per iteration
};

inline void validate(const RpcaConfig& cfg) {
  if (cfg.eta < 0.0) throw std::invalid_argument("rpca: eta must be positive (or 0 for automatic)");
  if (cfg.mu0 < 0.0) throw std::invalid_argument("rpca: mu0 must be positive (or 0 for automatic)");
  if (cfg.rho <= 1.0) throw std::invalid_argument("rpca: rho must exceed 1");
  if (cfg.max_iter < 1) throw std::invalid_argument("rpca: max_iter must be at least 1");
  if (cfg.tol <= 0.0) throw std::invalid_argument("rpca: tol must be positive");
}

inline RpcaResult rpca_decompose(const Matrix& x, const RpcaConfig& cfg = {}) {
  validate(cfg);
  require_finite(x, "rpca_decompose");

  RpcaResult res;
  res.low_rank = Matrix::Zero(x.rows(), x.cols());
  res.sparse = Matrix::Zero(x.rows(), x.cols());
  const double x_norm = x.norm();
  if (x_norm == 0.0) {
    res.converged = true;
    return res;
  }

  const double eta =
      cfg.eta > 0.0 ? cfg.eta : 1.0 / std::sqrt(static_cast<double>(std::max(x.rows(), x.cols())));
  const double sigma1 = compute_svd(x).s(0);
  double mu = cfg.mu0 > 0.0 ? cfg.mu0 : 1.25 / sigma1;
  // penalty cap relative to the start keeps the schedule scale-equivariant
  const double mu_max = mu * 1e7;

  // multiplier start scaled by the dual norm max(sigma_1, ||X||_inf / eta)
  Matrix y = x / std::max(sigma1, x.cwiseAbs().maxCoeff() / eta);

  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    res.low_rank = svt(x - res.sparse + y / mu, 1.0 / mu);
    res.sparse = soft_threshold(x - res.low_rank + y / mu, eta / mu);
    Matrix gap = x - res.low_rank - res.sparse;
    y += mu * gap;
    mu = std::min(cfg.rho * mu, mu_max);

    res.iterations = iter;
    res.final_residual = gap.norm() / x_norm;
    res.residual_history.push_back(res.final_residual);
    if (res.final_residual < cfg.tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace jplrdl
