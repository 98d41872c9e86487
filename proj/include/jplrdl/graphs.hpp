#pragma once

// Signed k-nearest-neighbor graphs over the per-sample low-rank
// representations produced by robust PCA, plus the Laplacians training
// needs: the signed Laplacian of the coefficient graph (objective term),
// its symmetrically normalized form (coding subproblems, where the signed
// diagonal would destroy positive definiteness), and the symmetrically
// normalized Laplacian of the projection graph.
//
// Same-class neighbors get positive weights (+1 or a heat-kernel value),
// different-class neighbors negative ones. Membership is symmetric: either
// direction of k-NN inclusion sets both entries. Distance ties are broken
// by lower column index so graphs are deterministic.

#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include "jplrdl/linalg.hpp"

namespace jplrdl {

enum class GraphKind { coefficient, projection };

struct GraphWeights {
  Matrix w;  // N x N, symmetric, zero diagonal
  GraphKind kind = GraphKind::coefficient;
  std::vector<std::string> warnings;  // one entry per clamped class
};

struct NeighborhoodConfig {
  // zero selects the per-class defaults min(n_c - 1, 15) for k1 and
  // n_c - 1 for k2, where n_c is the size of the query column's class
  int k1 = 0;
  int k2 = 0;
  double heat_t = 1.0;
};

struct LaplacianPair {
  Matrix l_c;       // signed Laplacian diag(degrees_c) - W^c
  Matrix l_c_norm;  // I - D^{-1/2} W^c D^{-1/2} with absolute-value degrees
  Matrix l_p_norm;  // I - D^{-1/2} W^p D^{-1/2} with absolute-value degrees
  Vector degrees_c;
  Vector degrees_c_abs;
  Vector degrees_p_abs;
};

namespace detail {

struct NeighborSets {
  std::vector<std::vector<Index>> same;
  std::vector<std::vector<Index>> diff;
  std::vector<std::string> warnings;
};

inline Matrix pairwise_sq_dist(const Matrix& cols) {
  const Index n = cols.cols();
  Matrix d2 = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      // direct per-pair evaluation; the Gram shortcut loses the exact
      // equality of tied distances that index tie-breaking relies on
      d2(i, j) = d2(j, i) = (cols.col(i) - cols.col(j)).squaredNorm();
    }
  }
  return d2;
}

inline NeighborSets find_neighbors(const Matrix& d2, const std::vector<int>& labels,
                                   const NeighborhoodConfig& cfg) {
  const Index n = d2.rows();
  std::map<int, int> class_size;
  for (int lab : labels) ++class_size[lab];

  NeighborSets sets;
  sets.same.resize(static_cast<size_t>(n));
  sets.diff.resize(static_cast<size_t>(n));
  std::set<int> warned_same, warned_diff;

  for (Index i = 0; i < n; ++i) {
    const int lab = labels[static_cast<size_t>(i)];
    const int n_c = class_size[lab];
    const int other = static_cast<int>(n) - n_c;

    int k1 = cfg.k1 == 0 ? std::min(n_c - 1, 15) : cfg.k1;
    if (k1 > n_c - 1) {
      if (warned_same.insert(lab).second) {
        std::ostringstream msg;
        msg << "k1=" << cfg.k1 << " exceeds class " << lab << " size " << n_c << "; using "
            << n_c - 1;
        sets.warnings.push_back(msg.str());
      }
      k1 = n_c - 1;
    }
    int k2 = cfg.k2 == 0 ? n_c - 1 : cfg.k2;
    if (k2 > other) {
      if (warned_diff.insert(lab).second) {
        std::ostringstream msg;
        msg << "k2=" << k2 << " exceeds the " << other << " samples outside class " << lab
            << "; using " << other;
        sets.warnings.push_back(msg.str());
      }
      k2 = other;
    }

    std::vector<std::pair<double, Index>> cand_same, cand_diff;
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      if (labels[static_cast<size_t>(j)] == lab) {
        cand_same.emplace_back(d2(i, j), j);
      } else {
        cand_diff.emplace_back(d2(i, j), j);
      }
    }
    std::sort(cand_same.begin(), cand_same.end());
    std::sort(cand_diff.begin(), cand_diff.end());
    for (int k = 0; k < k1; ++k) sets.same[static_cast<size_t>(i)].push_back(cand_same[k].second);
    for (int k = 0; k < k2; ++k) sets.diff[static_cast<size_t>(i)].push_back(cand_diff[k].second);
  }
  return sets;
}

inline GraphWeights build_graph(const Matrix& lr_reps, const std::vector<int>& labels,
                                const NeighborhoodConfig& cfg, GraphKind kind) {
  require_finite(lr_reps, "build_graph");
  if (lr_reps.cols() == 0) throw std::invalid_argument("build_graph: no columns");
  if (static_cast<Index>(labels.size()) != lr_reps.cols()) {
    throw std::invalid_argument("build_graph: label count does not match column count");
  }
  if (cfg.k1 < 0 || cfg.k2 < 0) throw std::invalid_argument("build_graph: k1/k2 must be >= 0");
  if (cfg.heat_t <= 0.0) throw std::invalid_argument("build_graph: heat_t must be positive");

  const Index n = lr_reps.cols();
  Matrix d2 = pairwise_sq_dist(lr_reps);
  NeighborSets sets = find_neighbors(d2, labels, cfg);

  GraphWeights g;
  g.kind = kind;
  g.warnings = std::move(sets.warnings);
  g.w = Matrix::Zero(n, n);
  const double two_t2 = 2.0 * cfg.heat_t * cfg.heat_t;
  auto heat = [&](Index i, Index j) { return std::exp(-d2(i, j) / two_t2); };
  for (Index i = 0; i < n; ++i) {
    for (Index j : sets.same[static_cast<size_t>(i)]) {
      double v = kind == GraphKind::coefficient ? 1.0 : heat(i, j);
      g.w(i, j) = g.w(j, i) = v;
    }
    for (Index j : sets.diff[static_cast<size_t>(i)]) {
      double v = kind == GraphKind::coefficient ? -1.0 : -heat(i, j);
      g.w(i, j) = g.w(j, i) = v;
    }
  }
  return g;
}

}  // namespace detail

inline GraphWeights build_coefficient_graph(const Matrix& lr_reps, const std::vector<int>& labels,
                                            const NeighborhoodConfig& cfg = {}) {
  return detail::build_graph(lr_reps, labels, cfg, GraphKind::coefficient);
}

inline GraphWeights build_projection_graph(const Matrix& lr_reps, const std::vector<int>& labels,
                                           const NeighborhoodConfig& cfg = {}) {
  return detail::build_graph(lr_reps, labels, cfg, GraphKind::projection);
}

namespace detail {

// I - D^{-1/2} W D^{-1/2} over absolute-value degrees; isolated samples
// keep a plain identity row
inline Matrix normalized_laplacian(const Matrix& w, const Vector& degrees_abs) {
  const Index n = w.rows();
  Vector d_inv_sqrt(n);
  for (Index i = 0; i < n; ++i) {
    d_inv_sqrt(i) = degrees_abs(i) > 0.0 ? 1.0 / std::sqrt(degrees_abs(i)) : 0.0;
  }
  return Matrix::Identity(n, n) - d_inv_sqrt.asDiagonal() * w * d_inv_sqrt.asDiagonal();
}

}  // namespace detail

inline LaplacianPair laplacians(const GraphWeights& wc, const GraphWeights& wp) {
  if (wc.w.rows() != wp.w.rows()) {
    throw std::invalid_argument("laplacians: weight matrices differ in size");
  }
  LaplacianPair lp;
  lp.degrees_c = wc.w.colwise().sum();
  lp.l_c = Matrix(lp.degrees_c.asDiagonal()) - wc.w;

  lp.degrees_c_abs = wc.w.cwiseAbs().colwise().sum();
  lp.l_c_norm = detail::normalized_laplacian(wc.w, lp.degrees_c_abs);

  lp.degrees_p_abs = wp.w.cwiseAbs().colwise().sum();
  lp.l_p_norm = detail::normalized_laplacian(wp.w, lp.degrees_p_abs);
  return lp;
}

}  // namespace jplrdl
