#pragma once

// Dense proximal operators and structured solvers shared by the training
// loops: entrywise soft thresholding (l1 prox), singular value thresholding
// (nuclear-norm prox), columnwise l2 shrinkage (l2,1 prox), a Sylvester
// solver specialized to symmetric operands, and QR-based orthonormalization.
//
// Everything here is a pure function of its inputs. Sign conventions on
// singular/eigen-vectors are fixed so repeated runs are bit-comparable.

#include <Eigen/Dense>

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "jplrdl/errors.hpp"

namespace jplrdl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw std::invalid_argument(std::string(what) + ": input contains NaN/Inf entries");
  }
}

/// Thin SVD with non-increasing singular values. Deterministic sign
/// convention: the largest-magnitude entry of each left singular vector is
/// positive (ties broken by lowest row index).
struct SvdFactors {
  Matrix u;   // left singular vectors, orthonormal columns
  Vector s;   // singular values, non-increasing
  Matrix vt;  // right singular vectors, transposed (orthonormal rows)
};

inline SvdFactors compute_svd(const Matrix& x) {
  require_finite(x, "compute_svd");
  Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "compute_svd: SVD failed to converge on " << x.rows() << "x" << x.cols()
        << " input (max |entry| = " << x.cwiseAbs().maxCoeff() << ")";
    throw numeric_error(msg.str());
  }
  SvdFactors f{svd.matrixU(), svd.singularValues(), svd.matrixV().transpose()};
  for (Index c = 0; c < f.u.cols(); ++c) {
    Index imax = 0;
    f.u.col(c).cwiseAbs().maxCoeff(&imax);
    if (f.u(imax, c) < 0.0) {
      f.u.col(c) = -f.u.col(c);
      f.vt.row(c) = -f.vt.row(c);
    }
  }
  return f;
}

/// Sum of singular values.
inline double nuclear_norm(const Matrix& x) {
  require_finite(x, "nuclear_norm");
  return Eigen::BDCSVD<Matrix>(x).singularValues().sum();
}

/// Entrywise shrinkage sign(x) * max(|x| - tau, 0): the proximal operator of
/// tau * ||.||_1.
inline Matrix soft_threshold(const Matrix& x, double tau) {
  require_finite(x, "soft_threshold");
  if (!(tau >= 0.0)) {
    throw std::invalid_argument("soft_threshold: tau must be non-negative");
  }
  return x.unaryExpr([tau](double v) {
    double mag = std::abs(v) - tau;
    return mag > 0.0 ? (v > 0.0 ? mag : -mag) : 0.0;
  });
}

/// Singular value thresholding: U * diag(max(s - tau, 0)) * V^T, the proximal
/// operator of tau * ||.||_* (nuclear norm).
inline Matrix svt(const Matrix& x, double tau) {
  require_finite(x, "svt");
  if (!(tau >= 0.0)) {
    throw std::invalid_argument("svt: tau must be non-negative");
  }
  SvdFactors f = compute_svd(x);
  Vector shrunk = (f.s.array() - tau).max(0.0);
  return f.u * shrunk.asDiagonal() * f.vt;
}

/// Columnwise l2 shrinkage: column c of the result is
/// max(1 - tau/||x_c||_2, 0) * x_c. Proximal operator of tau * ||.||_{2,1}.
inline Matrix l21_prox(const Matrix& x, double tau) {
  require_finite(x, "l21_prox");
  if (!(tau >= 0.0)) {
    throw std::invalid_argument("l21_prox: tau must be non-negative");
  }
  Matrix out = x;
  for (Index c = 0; c < x.cols(); ++c) {
    double nrm = x.col(c).norm();
    if (nrm > tau) {
      out.col(c) *= (1.0 - tau / nrm);
    } else {
      out.col(c).setZero();
    }
  }
  return out;
}

/// Solves H*Y + Y*Q = C for symmetric H (p x p) and Q (r x r) via the two
/// eigendecompositions H = Uh Lh Uh^T, Q = Uq Lq Uq^T and entrywise division
/// in the transformed basis. The spectra must not contain a pair of
/// eigenvalues summing to (nearly) zero.
inline Matrix solve_sylvester(const Matrix& h, const Matrix& q, const Matrix& c) {
  require_finite(h, "solve_sylvester(h)");
  require_finite(q, "solve_sylvester(q)");
  require_finite(c, "solve_sylvester(c)");
  if (h.rows() != h.cols() || q.rows() != q.cols()) {
    throw std::invalid_argument("solve_sylvester: h and q must be square");
  }
  if (c.rows() != h.rows() || c.cols() != q.rows()) {
    throw std::invalid_argument("solve_sylvester: c has incompatible shape");
  }
  auto check_symmetric = [](const Matrix& m, const char* name) {
    double scale = 1.0 + m.cwiseAbs().maxCoeff();
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
      throw std::invalid_argument(std::string("solve_sylvester: ") + name + " is not symmetric");
    }
  };
  check_symmetric(h, "h");
  check_symmetric(q, "q");

  Eigen::SelfAdjointEigenSolver<Matrix> eh(h);
  Eigen::SelfAdjointEigenSolver<Matrix> eq(q);
  if (eh.info() != Eigen::Success || eq.info() != Eigen::Success) {
    throw numeric_error("solve_sylvester: eigendecomposition failed");
  }

  Matrix ct = eh.eigenvectors().transpose() * c * eq.eigenvectors();
  const Vector& lh = eh.eigenvalues();
  const Vector& lq = eq.eigenvalues();
  for (Index i = 0; i < lh.size(); ++i) {
    for (Index j = 0; j < lq.size(); ++j) {
      double denom = lh(i) + lq(j);
      if (std::abs(denom) < 1e-12) {
        std::ostringstream msg;
        msg << "solve_sylvester: near-singular system, eigenvalue pair (" << lh(i) << ", "
            << lq(j) << ") sums to " << denom;
        throw numeric_error(msg.str());
      }
      ct(i, j) /= denom;
    }
  }
  return eh.eigenvectors() * ct * eq.eigenvectors().transpose();
}

/// Orthonormal basis of the column space of p via Householder QR, with a
/// deterministic sign convention (first entry of magnitude > 1e-10 in each
/// column is made positive). Throws on rank-deficient input.
inline Matrix orthonormalize(const Matrix& p) {
  require_finite(p, "orthonormalize");
  if (p.cols() == 0 || p.rows() < p.cols()) {
    throw std::invalid_argument("orthonormalize: need rows >= cols >= 1");
  }
  Eigen::HouseholderQR<Matrix> qr(p);
  Matrix r = qr.matrixQR().topRows(p.cols()).triangularView<Eigen::Upper>();
  double rmax = r.diagonal().cwiseAbs().maxCoeff();
  double tol = static_cast<double>(std::max(p.rows(), p.cols())) *
               std::numeric_limits<double>::epsilon() * rmax;
  Index rank = 0;
  for (Index i = 0; i < r.rows(); ++i) {
    if (std::abs(r(i, i)) > tol) ++rank;
  }
  if (rank < p.cols()) {
    std::ostringstream msg;
    msg << "orthonormalize: rank-deficient input (numerical rank " << rank << " of " << p.cols()
        << " columns)";
    throw std::invalid_argument(msg.str());
  }
  Matrix qthin = qr.householderQ() * Matrix::Identity(p.rows(), p.cols());
  for (Index c = 0; c < qthin.cols(); ++c) {
    for (Index i = 0; i < qthin.rows(); ++i) {
      if (std::abs(qthin(i, c)) > 1e-10) {
        if (qthin(i, c) < 0.0) qthin.col(c) = -qthin.col(c);
        break;
      }
    }
  }
  return qthin;
}

}  // namespace jplrdl
