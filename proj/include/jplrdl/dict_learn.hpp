#pragma once

// Per-class sub-dictionary refinement by inexact augmented Lagrangian.
// For class i the subproblem couples a nuclear-norm surrogate J for D_i,
// an l1 surrogate Z for the class-own codes A_i^i, and a columnwise-sparse
// error E_i, tied together by three multipliers and a growing penalty mu.
// Everything outside class i (the other sub-dictionaries and the codes of
// class-i samples over foreign atoms) is held fixed for the whole solve.

#include <array>
#include <vector>

#include "jplrdl/config.hpp"
#include "jplrdl/dictionary.hpp"
#include "jplrdl/linalg.hpp"

namespace jplrdl {

struct AlmState {
  Matrix z;   // l1 surrogate of the class-own codes
  Matrix j;   // nuclear-norm surrogate of the sub-dictionary
  Matrix e;   // columnwise-sparse coding error
  Matrix t1;  // multiplier for  P'X_i = D_i A_i^i + E_i
  Matrix t2;  // multiplier for  D_i = J
  Matrix t3;  // multiplier for  A_i^i = Z
  double mu = 1e-6;
  int iter = 0;
};

struct SubdictUpdate {
  Matrix d_i;   // refreshed sub-dictionary, columns unit-norm unless vanished
  Matrix a_ii;  // refreshed class-own codes
  Matrix e_i;   // final coding error (same matrix as state.e)
  AlmState state;
  bool converged = false;
  // per-iteration stopping residuals: (||D-J||, ||X-DA-E||, ||A-Z||), inf-norms
  std::vector<std::array<double, 3>> residual_trace;
};

inline SubdictUpdate update_subdictionary(const Matrix& px_i, const StructuredDictionary& dict,
                                          Index class_i, const Matrix& a_i_full,
                                          const TrainConfig& cfg) {
  validate(cfg);
  validate(dict);
  require_finite(px_i, "update_subdictionary");
  require_finite(a_i_full, "update_subdictionary codes");
  if (class_i < 0 || class_i >= dict.num_classes()) {
    throw std::invalid_argument("update_subdictionary: class id out of range");
  }
  if (px_i.rows() != dict.atoms.rows() || a_i_full.rows() != dict.total_atoms() ||
      a_i_full.cols() != px_i.cols()) {
    throw std::invalid_argument("update_subdictionary: inconsistent shapes");
  }

  const ClassRange& own = dict.ranges[static_cast<size_t>(class_i)];
  const Index dim = px_i.rows();
  const Index ni = px_i.cols();
  const Index ci = own.count;

  Matrix d_i = dict.block(class_i);
  Matrix a_ii = a_i_full.middleRows(own.begin, own.count);

  // fixed over the whole solve: cross-class reconstruction and the foreign
  // atom outer-product sum driving the incoherence pressure on D_i
  Matrix cross = Matrix::Zero(dim, ni);
  Matrix foreign_outer = Matrix::Zero(dim, dim);
  for (Index j = 0; j < dict.num_classes(); ++j) {
    if (j == class_i) continue;
    const ClassRange& r = dict.ranges[static_cast<size_t>(j)];
    cross += dict.block(j) * a_i_full.middleRows(r.begin, r.count);
    foreign_outer += dict.block(j) * dict.block(j).transpose();
  }

  const double rho = 1.1;
  const double mu_max = 1e30;
  AlmState st;
  st.z = a_ii;  // consistent with the A = Z constraint under zero t3
  st.j = Matrix::Zero(dim, ci);
  st.e = Matrix::Zero(dim, ni);
  st.t1 = Matrix::Zero(dim, ni);
  st.t2 = Matrix::Zero(dim, ci);
  st.t3 = Matrix::Zero(ci, ni);

  SubdictUpdate out;
  const Matrix eye_ci = Matrix::Identity(ci, ci);
  for (int it = 1; it <= cfg.inner_max_iter; ++it) {
    const double mu = st.mu;
    st.z = soft_threshold(a_ii + st.t3 / mu, 1.0 / mu);

    Matrix rhs = d_i.transpose() * (px_i - st.e) + st.z + (d_i.transpose() * st.t1 - st.t3) / mu;
    a_ii = (d_i.transpose() * d_i + eye_ci).ldlt().solve(rhs);

    st.j = normalize_columns(svt(d_i + st.t2 / mu, cfg.lambda3 / mu));

    const double w = 2.0 * cfg.lambda_r / mu;
    Matrix aat = a_ii * a_ii.transpose();
    Matrix h = w * foreign_outer;
    Matrix q = (w + 1.0) * aat + eye_ci;
    Matrix c = w * (px_i * a_ii.transpose() - cross * a_ii.transpose()) +
               (px_i - st.e) * a_ii.transpose() + st.j +
               (st.t1 * a_ii.transpose() - st.t2) / mu;
    d_i = normalize_columns(solve_sylvester(h, q, c));

    st.e = l21_prox(px_i - d_i * a_ii + st.t1 / mu, cfg.beta / mu);

    Matrix r1 = px_i - d_i * a_ii - st.e;
    Matrix r2 = d_i - st.j;
    Matrix r3 = a_ii - st.z;
    st.t1 += mu * r1;
    st.t2 += mu * r2;
    st.t3 += mu * r3;
    st.mu = std::min(rho * mu, mu_max);
    st.iter = it;

    std::array<double, 3> res = {r2.cwiseAbs().maxCoeff(), r1.cwiseAbs().maxCoeff(),
                                 r3.cwiseAbs().maxCoeff()};
    out.residual_trace.push_back(res);
    if (res[0] < cfg.eps_inner && res[1] < cfg.eps_inner && res[2] < cfg.eps_inner) {
      out.converged = true;
      break;
    }
  }

  out.d_i = std::move(d_i);
  out.a_ii = std::move(a_ii);
  out.e_i = st.e;
  out.state = std::move(st);
  return out;
}

}  // namespace jplrdl
