#pragma once

// Orthonormal projection learning: locality-preserving initialization from
// a generalized eigenproblem, the stacked dictionary/coefficient product
// whose residual drives the projection update, and the gradual eigenvector
// update itself.
//
// The stacked form duplicates each class's data block so that one Frobenius
// norm carries both reconstruction terms (shared-dictionary and own-class):
// d_hat repeats [D, D_i] per class and z_hat holds [[A_i, 0], [0, A_i^i]]
// on its diagonal, with xhat_cols mapping every stacked column back to its
// data column.

#include <vector>

#include "jplrdl/config.hpp"
#include "jplrdl/dictionary.hpp"
#include "jplrdl/linalg.hpp"

namespace jplrdl {

struct StackedCoding {
  Matrix d_hat;                  // [ [D, D_1], [D, D_2], ... ]
  Matrix z_hat;                  // block-diagonal by class
  std::vector<Index> xhat_cols;  // data column behind each stacked column
};

/// Locality-preserving projection: the d smallest generalized eigenvectors
/// of (X L X' + eps I, X X' + eps I), orthonormalized. eps is tied to the
/// data scale so the pencil stays definite on degenerate inputs.
inline Matrix lpp_init(const Matrix& x, const Matrix& l_p_norm, Index d) {
  require_finite(x, "lpp_init");
  const Index m = x.rows();
  const Index n = x.cols();
  if (d < 1 || d >= m || d > n - 1) {
    std::ostringstream msg;
    msg << "lpp_init: need 1 <= d < " << m << " and d <= " << n - 1 << ", got d = " << d;
    throw std::invalid_argument(msg.str());
  }
  if (l_p_norm.rows() != n || l_p_norm.cols() != n) {
    throw std::invalid_argument("lpp_init: Laplacian size must match the sample count");
  }
  Matrix xxt = x * x.transpose();
  const double eps = 1e-6 * xxt.trace() / static_cast<double>(m);
  if (eps <= 0.0) throw std::invalid_argument("lpp_init: data matrix is zero");
  Matrix a = x * l_p_norm * x.transpose();
  a = (0.5 * (a + a.transpose())).eval();
  a.diagonal().array() += eps;
  xxt.diagonal().array() += eps;
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(a, xxt);
  if (es.info() != Eigen::Success) throw numeric_error("lpp_init: generalized eigensolver failed");
  return orthonormalize(es.eigenvectors().leftCols(d));
}

inline StackedCoding build_stacked(const StructuredDictionary& dict, const Matrix& a,
                                   const std::vector<int>& class_of) {
  validate(dict);
  require_finite(a, "build_stacked");
  const Index n = a.cols();
  const Index atoms = dict.total_atoms();
  if (a.rows() != atoms || static_cast<Index>(class_of.size()) != n) {
    throw std::invalid_argument("build_stacked: coefficient/label shapes inconsistent");
  }

  Index dcols = 0;
  for (const ClassRange& r : dict.ranges) dcols += atoms + r.count;

  StackedCoding st;
  st.d_hat = Matrix::Zero(dict.atoms.rows(), dcols);
  st.z_hat = Matrix::Zero(dcols, 2 * n);
  st.xhat_cols.reserve(static_cast<size_t>(2 * n));

  Index row0 = 0;
  Index col0 = 0;
  for (Index i = 0; i < dict.num_classes(); ++i) {
    const ClassRange& r = dict.ranges[static_cast<size_t>(i)];
    st.d_hat.middleCols(row0, atoms) = dict.atoms;
    st.d_hat.middleCols(row0 + atoms, r.count) = dict.block(i);

    std::vector<Index> members;
    for (Index p = 0; p < n; ++p) {
      if (class_of[static_cast<size_t>(p)] == static_cast<int>(i)) members.push_back(p);
    }
    const Index ni = static_cast<Index>(members.size());
    for (Index k = 0; k < ni; ++k) {
      Index p = members[static_cast<size_t>(k)];
      st.z_hat.block(row0, col0 + k, atoms, 1) = a.col(p);
      st.z_hat.block(row0 + atoms, col0 + ni + k, r.count, 1) =
          a.col(p).segment(r.begin, r.count);
    }
    for (Index k = 0; k < 2 * ni; ++k) {
      st.xhat_cols.push_back(members[static_cast<size_t>(k % ni)]);
    }
    row0 += atoms + r.count;
    col0 += 2 * ni;
  }
  if (col0 != 2 * n) {
    throw std::invalid_argument("build_stacked: labels must be class indices of the dictionary");
  }
  return st;
}

namespace detail {

/// Picks the d-dimensional extreme eigenspace of a symmetric spectrum and
/// returns the orthonormal basis of it closest to p_prev (orthogonal
/// Procrustes). Eigenvalues within cluster_tol of the boundary are treated
/// as tied, so a flat spectrum (such as a zero matrix) resolves to p_prev
/// itself instead of solver noise.
inline Matrix aligned_extreme_eigvecs(const Matrix& vecs, const Vector& vals, Index d,
                                      EigSelect mode, double cluster_tol, const Matrix& p_prev) {
  const Index m = vals.size();
  const double boundary = mode == EigSelect::smallest ? vals(d - 1) : vals(m - d);
  std::vector<Index> chosen;
  for (Index k = 0; k < m; ++k) {
    bool core = mode == EigSelect::smallest ? vals(k) < boundary - cluster_tol
                                            : vals(k) > boundary + cluster_tol;
    if (core || std::abs(vals(k) - boundary) <= cluster_tol) chosen.push_back(k);
  }
  Matrix s(m, static_cast<Index>(chosen.size()));
  for (Index c = 0; c < s.cols(); ++c) s.col(c) = vecs.col(chosen[static_cast<size_t>(c)]);
  SvdFactors f = compute_svd(s.transpose() * p_prev);
  return s * (f.u * f.vt);
}

}  // namespace detail

inline Matrix update_projection(const Matrix& p_prev, const Matrix& x, const StackedCoding& stacked,
                                const Matrix& l_p_norm, double delta, double gamma,
                                EigSelect eig_select = EigSelect::smallest) {
  require_finite(p_prev, "update_projection");
  require_finite(x, "update_projection data");
  const Index m = x.rows();
  const Index d = p_prev.cols();
  if (p_prev.rows() != m) throw std::invalid_argument("update_projection: projection rows != data rows");
  if ((p_prev.transpose() * p_prev - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-8) {
    throw std::invalid_argument("update_projection: previous projection is not orthonormal");
  }
  if (gamma < 0.0 || gamma > 1.0) {
    throw std::invalid_argument("update_projection: gamma must lie in [0, 1]");
  }
  if (stacked.d_hat.rows() != d) {
    throw std::invalid_argument("update_projection: stacked dictionary lives in the wrong dimension");
  }
  if (l_p_norm.rows() != x.cols() || l_p_norm.cols() != x.cols()) {
    throw std::invalid_argument("update_projection: Laplacian size must match the sample count");
  }
  if (gamma == 0.0) return p_prev;

  Matrix xhat(m, static_cast<Index>(stacked.xhat_cols.size()));
  for (Index c = 0; c < xhat.cols(); ++c) {
    Index src = stacked.xhat_cols[static_cast<size_t>(c)];
    if (src < 0 || src >= x.cols()) {
      throw std::invalid_argument("update_projection: stacked column maps outside the data");
    }
    xhat.col(c) = x.col(src);
  }

  Matrix residual = xhat - p_prev * (stacked.d_hat * stacked.z_hat);
  Matrix graph_part = x * l_p_norm * x.transpose();
  Matrix mmat = residual * residual.transpose() + delta * graph_part;
  mmat = (0.5 * (mmat + mmat.transpose())).eval();

  Eigen::SelfAdjointEigenSolver<Matrix> es(mmat);
  if (es.info() != Eigen::Success) throw numeric_error("update_projection: eigensolver failed");

  // tie tolerance is relative to the problem scale, not the spectrum spread,
  // so a numerically-zero M clusters into one flat eigenspace
  const double scale = xhat.squaredNorm() + std::abs(delta) * graph_part.norm();
  const double cluster_tol = 1e-10 * std::max(scale, 1e-300);
  Matrix u_d = detail::aligned_extreme_eigvecs(es.eigenvectors(), es.eigenvalues(), d, eig_select,
                                               cluster_tol, p_prev);
  return orthonormalize(p_prev + gamma * (u_d - p_prev));
}

}  // namespace jplrdl
