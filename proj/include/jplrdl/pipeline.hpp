#pragma once

// Training orchestration and the residual classifier. Training runs
// per-class robust PCA once, builds both sample graphs from the recovered
// low-rank columns, seeds the projection from the graph embedding and the
// dictionary from per-class singular vectors, then alternates coding,
// per-class dictionary refinement, and the projection update until the
// joint objective stalls. Everything downstream of the seed is
// deterministic, so identical configs reproduce identical models.

#include <chrono>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "jplrdl/config.hpp"
#include "jplrdl/dataset.hpp"
#include "jplrdl/dict_learn.hpp"
#include "jplrdl/dictionary.hpp"
#include "jplrdl/graphs.hpp"
#include "jplrdl/linalg.hpp"
#include "jplrdl/projection.hpp"
#include "jplrdl/rng.hpp"
#include "jplrdl/rpca.hpp"
#include "jplrdl/sparse_coding.hpp"

namespace jplrdl {

struct Model {
  Matrix projection;                // m x d, orthonormal columns
  StructuredDictionary dictionary;  // atoms live in the projected space
  Matrix coefficients;              // training codes, atoms x samples
  // training-sample column spans of `coefficients`, one per class; kept so
  // the stored means stay verifiable against the codes
  std::vector<ClassRange> sample_ranges;
  std::vector<Vector> class_means;  // mean training code per class
  TrainConfig config;               // as trained, with d resolved
  std::vector<double> objective_trace;
};

struct TrainReport {
  std::vector<double> objective_trace;
  bool converged = false;
  std::vector<double> per_iteration_seconds;
  std::vector<std::string> warnings;
};

struct TrainOutput {
  Model model;
  TrainReport report;
};

/// Post-iteration view handed to the observer; references stay valid only
/// during the callback.
struct IterationSnapshot {
  int iteration;  // 1-based outer iteration
  const Matrix& projection;
  const StructuredDictionary& dictionary;
  const Matrix& coefficients;
  const GraphWeights& coeff_graph;
  const LaplacianPair& laplacian;
  double objective;
};

using TrainObserver = std::function<void(const IterationSnapshot&)>;

inline void validate(const Model& model) {
  validate(model.config);
  validate(model.dictionary);
  require_finite(model.projection, "model projection");
  require_finite(model.coefficients, "model coefficients");
  const Index d = model.projection.cols();
  if (model.projection.rows() < 1 || d < 1 || model.dictionary.atoms.rows() != d) {
    throw std::invalid_argument("model: projection and dictionary dimensions disagree");
  }
  if ((model.projection.transpose() * model.projection - Matrix::Identity(d, d))
          .cwiseAbs()
          .maxCoeff() > 1e-8) {
    throw std::invalid_argument("model: projection columns are not orthonormal");
  }
  const Index k = model.dictionary.num_classes();
  if (static_cast<Index>(model.class_means.size()) != k ||
      static_cast<Index>(model.sample_ranges.size()) != k) {
    throw std::invalid_argument("model: per-class fields disagree with the dictionary");
  }
  if (model.coefficients.rows() != model.dictionary.total_atoms()) {
    throw std::invalid_argument("model: coefficient rows must match the atom count");
  }
  Index at = 0;
  for (Index i = 0; i < k; ++i) {
    const ClassRange& r = model.sample_ranges[static_cast<size_t>(i)];
    if (r.begin != at || r.count < 1) {
      throw std::invalid_argument("model: sample ranges must partition the coefficient columns");
    }
    at += r.count;
    const Vector& m_i = model.class_means[static_cast<size_t>(i)];
    if (m_i.size() != model.coefficients.rows()) {
      throw std::invalid_argument("model: class mean length must match the atom count");
    }
    Vector mean = model.coefficients.middleCols(r.begin, r.count).rowwise().mean();
    if ((m_i - mean).cwiseAbs().maxCoeff() > 1e-12) {
      std::ostringstream msg;
      msg << "model: stored mean for class " << i + 1 << " deviates from the coefficients";
      throw std::invalid_argument(msg.str());
    }
  }
  if (at != model.coefficients.cols()) {
    throw std::invalid_argument("model: sample ranges must cover every coefficient column");
  }
  for (double j : model.objective_trace) {
    if (!std::isfinite(j)) throw std::invalid_argument("model: objective trace must be finite");
  }
}

/// Joint objective: discriminative reconstruction (whole-dictionary and
/// own-class fits, foreign-class leakage, sub-dictionary incoherence), plus
/// the l1, coefficient-graph, nuclear-norm, and projection-graph terms.
inline double objective_value(const Matrix& x, const std::vector<int>& class_of,
                              const Matrix& projection, const StructuredDictionary& dict,
                              const Matrix& a, const LaplacianPair& lap, const TrainConfig& cfg) {
  const Index n = x.cols();
  const Index k = dict.num_classes();
  if (static_cast<Index>(class_of.size()) != n || a.cols() != n ||
      a.rows() != dict.total_atoms() || projection.rows() != x.rows() ||
      projection.cols() != dict.atoms.rows() || lap.l_c.rows() != n || lap.l_p_norm.rows() != n) {
    throw std::invalid_argument("objective_value: inconsistent shapes");
  }

  Matrix px = projection.transpose() * x;
  double recon = 0.0;
  for (Index i = 0; i < k; ++i) {
    std::vector<Index> cols;
    for (Index p = 0; p < n; ++p) {
      if (class_of[static_cast<size_t>(p)] == static_cast<int>(i)) cols.push_back(p);
    }
    Matrix pxi(px.rows(), static_cast<Index>(cols.size()));
    Matrix ai(a.rows(), static_cast<Index>(cols.size()));
    for (size_t j = 0; j < cols.size(); ++j) {
      pxi.col(static_cast<Index>(j)) = px.col(cols[j]);
      ai.col(static_cast<Index>(j)) = a.col(cols[j]);
    }
    const ClassRange& own = dict.ranges[static_cast<size_t>(i)];
    recon += (pxi - dict.atoms * ai).squaredNorm();
    recon += (pxi - dict.block(i) * ai.middleRows(own.begin, own.count)).squaredNorm();
    for (Index j = 0; j < k; ++j) {
      if (j == i) continue;
      const ClassRange& other = dict.ranges[static_cast<size_t>(j)];
      recon += (dict.block(j) * ai.middleRows(other.begin, other.count)).squaredNorm();
      recon += (dict.block(i).transpose() * dict.block(j)).squaredNorm();
    }
  }

  double nuclear = 0.0;
  for (Index i = 0; i < k; ++i) nuclear += nuclear_norm(dict.block(i));

  return recon + cfg.lambda1 * a.lpNorm<1>() + cfg.lambda2 * (a * lap.l_c * a.transpose()).trace() +
         cfg.lambda3 * nuclear +
         cfg.delta * (projection.transpose() * x * lap.l_p_norm * x.transpose() * projection).trace();
}

namespace detail {

inline Index resolved_projected_dim(const TrainConfig& cfg, Index m, Index n, Index total_atoms) {
  Index d = cfg.d;
  if (d == 0) d = std::min({m - 1, n - 1, total_atoms});
  if (d < 1 || d >= m) {
    std::ostringstream msg;
    msg << "train: projected dimension " << d << " must satisfy 1 <= d < " << m
        << " (the ambient dimension)";
    throw std::invalid_argument(msg.str());
  }
  if (d > n - 1) {
    std::ostringstream msg;
    msg << "train: projected dimension " << d << " needs at least d + 1 = " << d + 1
        << " samples, got " << n;
    throw std::invalid_argument(msg.str());
  }
  return d;
}

/// Top left-singular-vector atoms of the projected class block; directions
/// beyond the numerical rank are replaced by random unit columns so every
/// atom starts meaningful.
inline Matrix init_subdictionary(const Matrix& px_i, Index atom_count, std::mt19937_64& gen) {
  SvdFactors svd = compute_svd(px_i);
  Index usable = 0;
  if (svd.s.size() > 0 && svd.s(0) > 0.0) {
    while (usable < svd.s.size() && svd.s(usable) > 1e-12 * svd.s(0)) ++usable;
  }
  usable = std::min(usable, atom_count);
  Matrix d_i(px_i.rows(), atom_count);
  d_i.leftCols(usable) = svd.u.leftCols(usable);
  for (Index c = usable; c < atom_count; ++c) d_i.col(c) = random_unit_vector(px_i.rows(), gen);
  return normalize_columns(std::move(d_i));
}

}  // namespace detail

inline TrainOutput train(const LabeledDataset& data, const TrainConfig& cfg,
                         const TrainObserver& observer = {}) {
  validate(cfg);
  validate(data);
  const Index m = data.dim();
  const Index n = data.size();
  const Index k = data.num_classes();
  for (const ClassRange& r : data.class_ranges) {
    if (r.count < 2) {
      throw std::invalid_argument("train: every class needs at least 2 samples");
    }
  }

  std::vector<Index> atom_counts;
  Index total_atoms = 0;
  for (const ClassRange& r : data.class_ranges) {
    Index c = cfg.atoms_per_class > 0 ? cfg.atoms_per_class : r.count;
    atom_counts.push_back(c);
    total_atoms += c;
  }
  const Index d = detail::resolved_projected_dim(cfg, m, n, total_atoms);

  TrainReport report;
  const std::vector<int> class0 = data.class_of();
  std::mt19937_64 gen(cfg.seed);

  // per-class low-rank recovery; the graphs are built from these columns
  // so neighborhoods survive corruption
  Matrix lr(m, n);
  RpcaConfig rpca_cfg;
  rpca_cfg.eta = cfg.eta;
  for (Index i = 0; i < k; ++i) {
    RpcaResult res = rpca_decompose(data.class_block(i), rpca_cfg);
    lr.middleCols(data.class_ranges[static_cast<size_t>(i)].begin,
                  data.class_ranges[static_cast<size_t>(i)].count) = res.low_rank;
    if (!res.converged) {
      std::ostringstream msg;
      msg << "robust pca for class " << i + 1 << " stopped at residual " << res.final_residual
          << " after " << res.iterations << " iterations";
      report.warnings.push_back(msg.str());
    }
  }

  // graphs depend only on the data and labels, so they are built once and
  // held fixed across the outer loop
  NeighborhoodConfig nb;
  nb.k1 = cfg.k1;
  nb.k2 = cfg.k2;
  GraphWeights wc = build_coefficient_graph(lr, class0, nb);
  GraphWeights wp = build_projection_graph(lr, class0, nb);
  for (const std::string& w : wc.warnings) report.warnings.push_back("coefficient graph: " + w);
  for (const std::string& w : wp.warnings) report.warnings.push_back("projection graph: " + w);
  const LaplacianPair lap = laplacians(wc, wp);

  Matrix p = lpp_init(data.x, lap.l_p_norm, d);

  StructuredDictionary dict;
  dict.atoms.resize(d, total_atoms);
  Index at = 0;
  for (Index i = 0; i < k; ++i) {
    Matrix px_i = p.transpose() * data.class_block(i);
    dict.atoms.middleCols(at, atom_counts[static_cast<size_t>(i)]) =
        detail::init_subdictionary(px_i, atom_counts[static_cast<size_t>(i)], gen);
    dict.ranges.push_back({at, atom_counts[static_cast<size_t>(i)]});
    at += atom_counts[static_cast<size_t>(i)];
  }

  Matrix a = Matrix::Zero(total_atoms, n);

  bool converged = false;
  for (int t = 1; t <= cfg.outer_max_iter; ++t) {
    const auto tick = std::chrono::steady_clock::now();
    Matrix px = p.transpose() * data.x;
    // coding couples samples through the degree-normalized signed Laplacian:
    // its unit diagonal keeps every per-sample Hessian positive definite,
    // where the raw signed diagonal (negative for heavily mixed neighbor-
    // hoods) would make the subproblems unbounded
    coding_sweep(px, dict, class0, lap.l_c_norm, cfg, a);

    for (Index i = 0; i < k; ++i) {
      const ClassRange& cols = data.class_ranges[static_cast<size_t>(i)];
      SubdictUpdate up = update_subdictionary(px.middleCols(cols.begin, cols.count), dict, i,
                                              a.middleCols(cols.begin, cols.count), cfg);
      const ClassRange& own = dict.ranges[static_cast<size_t>(i)];
      dict.atoms.middleCols(own.begin, own.count) = up.d_i;
      a.block(own.begin, cols.begin, own.count, cols.count) = up.a_ii;
      if (!up.converged) {
        std::ostringstream msg;
        msg << "iteration " << t << ": dictionary update for class " << i + 1
            << " hit the inner iteration cap";
        report.warnings.push_back(msg.str());
      }
    }

    // an atom can collapse when nothing codes over it; re-seed it so the
    // dictionary keeps full column rank potential
    for (Index i = 0; i < k; ++i) {
      const ClassRange& own = dict.ranges[static_cast<size_t>(i)];
      for (Index c = own.begin; c < own.begin + own.count; ++c) {
        if (dict.atoms.col(c).norm() <= 1e-12) {
          dict.atoms.col(c) = random_unit_vector(d, gen);
          std::ostringstream msg;
          msg << "iteration " << t << ": atom " << c - own.begin + 1 << " of class " << i + 1
              << " collapsed and was re-seeded";
          report.warnings.push_back(msg.str());
        }
      }
    }

    StackedCoding stacked = build_stacked(dict, a, class0);
    p = update_projection(p, data.x, stacked, lap.l_p_norm, cfg.delta, cfg.gamma, cfg.eig_select);

    const double j = objective_value(data.x, class0, p, dict, a, lap, cfg);
    if (!std::isfinite(j)) {
      std::ostringstream msg;
      msg << "train: objective became non-finite at iteration " << t;
      throw numeric_error(msg.str());
    }
    report.objective_trace.push_back(j);
    report.per_iteration_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - tick).count());
    if (observer) {
      observer(IterationSnapshot{t, p, dict, a, wc, lap, j});
    }
    const size_t len = report.objective_trace.size();
    if (len >= 2) {
      const double prev = report.objective_trace[len - 2];
      const double rel = std::abs(j - prev) / std::max(std::abs(prev), 1e-300);
      if (rel < cfg.outer_tol) {
        converged = true;
        break;
      }
    }
  }
  report.converged = converged;

  Model model;
  model.projection = std::move(p);
  model.dictionary = std::move(dict);
  model.coefficients = std::move(a);
  model.sample_ranges = data.class_ranges;
  for (Index i = 0; i < k; ++i) {
    const ClassRange& cols = data.class_ranges[static_cast<size_t>(i)];
    model.class_means.push_back(
        model.coefficients.middleCols(cols.begin, cols.count).rowwise().mean());
  }
  model.config = cfg;
  model.config.d = static_cast<int>(d);
  model.objective_trace = report.objective_trace;
  validate(model);
  return {std::move(model), std::move(report)};
}

struct Classification {
  int label = 0;      // 1-based class label
  Vector residuals;   // per-class residual, argmin decides (ties to lowest)
};

/// Codes the projected query over the whole dictionary, then scores each
/// class by its own-block reconstruction error plus the distance to the
/// class mean code. The l1 weight follows the projected query's norm, so a
/// rescaled input codes to rescaled coefficients and the decision survives
/// gain changes.
inline Classification classify(const Vector& x_test, const Model& model) {
  validate(model);
  require_finite(x_test, "classify");
  if (x_test.size() != model.projection.rows()) {
    std::ostringstream msg;
    msg << "classify: sample has " << x_test.size() << " entries, model expects "
        << model.projection.rows();
    throw std::invalid_argument(msg.str());
  }
  const TrainConfig& cfg = model.config;
  Vector y = model.projection.transpose() * x_test;
  const double scale = y.norm();
  Vector alpha;
  if (scale > 0.0) {
    alpha = code_projected_sample(x_test, model.projection, model.dictionary, cfg.xi * scale).alpha;
  } else {
    alpha = Vector::Zero(model.dictionary.total_atoms());
  }

  const Index k = model.dictionary.num_classes();
  Classification out;
  out.residuals.resize(k);
  for (Index i = 0; i < k; ++i) {
    const ClassRange& own = model.dictionary.ranges[static_cast<size_t>(i)];
    const double fit = (y - model.dictionary.block(i) * alpha.segment(own.begin, own.count))
                           .squaredNorm();
    const double mean_dist = (alpha - model.class_means[static_cast<size_t>(i)]).squaredNorm();
    out.residuals(i) = fit + cfg.omega * mean_dist;
  }
  out.label = 1;
  for (Index i = 1; i < k; ++i) {
    if (out.residuals(i) < out.residuals(out.label - 1)) out.label = static_cast<int>(i) + 1;
  }
  return out;
}

}  // namespace jplrdl
