#pragma once

// Training hyper-parameters shared across the solver layers. Counts set to
// zero select data-dependent defaults at training time:
//   k1              -> min(class size - 1, 15) per query class
//   k2              -> class size - 1 per query class
//   d               -> min(ambient dim - 1, sample count - 1, atom count)
//   atoms_per_class -> per-class training sample count
//   eta             -> 1/sqrt(max(ambient dim, class sample count))

#include <cstdint>
#include <stdexcept>

namespace jplrdl {

// which end of the spectrum the projection update keeps; smallest matches
// the trace minimization, largest is kept selectable for comparison runs
enum class EigSelect { smallest, largest };

struct TrainConfig {
  double lambda1 = 0.1;   // l1 weight on the coefficients
  double lambda2 = 0.1;   // coefficient-graph weight
  double lambda3 = 1.0;   // per-class nuclear-norm weight
  double delta = 1.0;     // projection-graph weight
  double beta = 0.1;      // l2,1 weight on per-class coding error
  double lambda_r = 1.0;  // cross-class reconstruction/incoherence weight
  double gamma = 0.1;     // projection interpolation step
  double eta = 0.0;       // robust-PCA l1 weight, 0 = automatic
  double xi = 0.01;       // test-coding l1 weight
  double omega = 0.01;    // class-mean penalty in the classifier

  int k1 = 0;              // same-class neighborhood size, 0 = automatic
  int k2 = 0;              // different-class neighborhood size, 0 = automatic
  int d = 0;               // projected dimension, 0 = automatic
  int atoms_per_class = 0; // 0 = one atom per training sample
  int outer_max_iter = 10;
  int inner_max_iter = 500;
  double eps_inner = 1e-8; // per-class ALM stopping threshold
  double outer_tol = 1e-4; // relative objective change that ends training
  std::uint64_t seed = 0;
  EigSelect eig_select = EigSelect::smallest;
};

inline void validate(const TrainConfig& cfg) {
  auto nonneg = [](double v, const char* name) {
    if (v < 0.0) throw std::invalid_argument(std::string("config: ") + name + " must be >= 0");
  };
  nonneg(cfg.lambda1, "lambda1");
  nonneg(cfg.lambda2, "lambda2");
  nonneg(cfg.lambda3, "lambda3");
  nonneg(cfg.delta, "delta");
  nonneg(cfg.beta, "beta");
  nonneg(cfg.lambda_r, "lambda_r");
  nonneg(cfg.eta, "eta");
  nonneg(cfg.xi, "xi");
  nonneg(cfg.omega, "omega");
  nonneg(cfg.outer_tol, "outer_tol");
  if (cfg.gamma <= 0.0 || cfg.gamma > 1.0) {
    throw std::invalid_argument("config: gamma must lie in (0, 1]");
  }
  if (cfg.k1 < 0 || cfg.k2 < 0) throw std::invalid_argument("config: k1/k2 must be >= 0");
  if (cfg.d < 0) throw std::invalid_argument("config: d must be >= 0");
  if (cfg.atoms_per_class < 0) throw std::invalid_argument("config: atoms_per_class must be >= 0");
  if (cfg.outer_max_iter < 1) throw std::invalid_argument("config: outer_max_iter must be >= 1");
  if (cfg.inner_max_iter < 1) throw std::invalid_argument("config: inner_max_iter must be >= 1");
  if (cfg.eps_inner <= 0.0) throw std::invalid_argument("config: eps_inner must be positive");
}

}  // namespace jplrdl
