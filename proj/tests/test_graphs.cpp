#include <catch2/catch_amalgamated.hpp>

#include "jplrdl/graphs.hpp"
#include "test_support.hpp"

using jplrdl::GraphWeights;
using jplrdl::Matrix;
using jplrdl::NeighborhoodConfig;
using jplrdl::Vector;

TEST_CASE("coefficient graph on identical pairs") {
  Matrix cols(3, 2);
  cols.col(0) << 1.0, 2.0, 3.0;
  cols.col(1) = cols.col(0);

  NeighborhoodConfig cfg;
  cfg.k1 = 1;
  cfg.k2 = 1;
  GraphWeights same = jplrdl::build_coefficient_graph(cols, {0, 0}, cfg);
  Matrix expect_same(2, 2);
  expect_same << 0, 1, 1, 0;
  CHECK((same.w - expect_same).cwiseAbs().maxCoeff() == 0.0);

  GraphWeights diff = jplrdl::build_coefficient_graph(cols, {0, 1}, cfg);
  Matrix expect_diff(2, 2);
  expect_diff << 0, -1, -1, 0;
  CHECK((diff.w - expect_diff).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("coefficient graph matches hand-ranked neighbors on four points") {
  // class 0 at (0,0), (1,0); class 1 at (0,3), (1,3); k1 = k2 = 1
  Matrix cols(2, 4);
  cols.col(0) << 0.0, 0.0;
  cols.col(1) << 1.0, 0.0;
  cols.col(2) << 0.0, 3.0;
  cols.col(3) << 1.0, 3.0;
  NeighborhoodConfig cfg;
  cfg.k1 = 1;
  cfg.k2 = 1;
  GraphWeights g = jplrdl::build_coefficient_graph(cols, {0, 0, 1, 1}, cfg);
  Matrix expect(4, 4);
  expect << 0, 1, -1, 0,
            1, 0, 0, -1,
           -1, 0, 0, 1,
            0, -1, 1, 0;
  CHECK((g.w - expect).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("projection graph carries heat-kernel weights") {
  Matrix cols(2, 2);
  cols.col(0) << 0.0, 0.0;
  cols.col(1) << 0.0, 0.0;
  NeighborhoodConfig cfg;
  cfg.k1 = 1;
  cfg.k2 = 1;
  CHECK(jplrdl::build_projection_graph(cols, {0, 0}, cfg).w(0, 1) == 1.0);
  CHECK(jplrdl::build_projection_graph(cols, {0, 1}, cfg).w(0, 1) == -1.0);

  cols.col(1) << 1.0, 1.0;  // distance sqrt(2), t = 1
  GraphWeights g = jplrdl::build_projection_graph(cols, {0, 0}, cfg);
  CHECK(g.w(0, 1) == Catch::Approx(0.3678794411714423).epsilon(1e-12));
}

TEST_CASE("graph weight invariants hold on random data") {
  auto gen = testsup::rng(41);
  Matrix cols = testsup::gaussian(gen, 6, 18);
  std::vector<int> labels;
  for (int i = 0; i < 18; ++i) labels.push_back(i % 3);
  NeighborhoodConfig cfg;
  cfg.k1 = 3;
  cfg.k2 = 4;

  GraphWeights wc = jplrdl::build_coefficient_graph(cols, labels, cfg);
  GraphWeights wp = jplrdl::build_projection_graph(cols, labels, cfg);
  for (const GraphWeights* g : {&wc, &wp}) {
    CHECK((g->w - g->w.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(g->w.diagonal().cwiseAbs().maxCoeff() == 0.0);
    CHECK(g->w.cwiseAbs().maxCoeff() <= 1.0);
  }
  for (int i = 0; i < 18; ++i) {
    for (int j = 0; j < 18; ++j) {
      double c = wc.w(i, j), p = wp.w(i, j);
      CHECK((c == 0.0 || c == 1.0 || c == -1.0));
      CHECK((c == 0.0) == (p == 0.0));  // same neighborhoods drive both graphs
      if (c != 0.0) CHECK(c * p > 0.0);
      if (c == 1.0) CHECK(labels[i] == labels[j]);
      if (c == -1.0) CHECK(labels[i] != labels[j]);
    }
  }
}

TEST_CASE("graph construction commutes with sample permutation") {
  auto gen = testsup::rng(42);
  Matrix cols = testsup::gaussian(gen, 5, 15);
  std::vector<int> labels;
  for (int i = 0; i < 15; ++i) labels.push_back(i / 5);
  NeighborhoodConfig cfg;
  cfg.k1 = 2;
  cfg.k2 = 3;

  std::vector<int> perm(15);
  for (int i = 0; i < 15; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), gen);

  Matrix cols_p(5, 15);
  std::vector<int> labels_p(15);
  for (int i = 0; i < 15; ++i) {
    cols_p.col(i) = cols.col(perm[i]);
    labels_p[i] = labels[perm[i]];
  }
  GraphWeights base = jplrdl::build_projection_graph(cols, labels, cfg);
  GraphWeights permuted = jplrdl::build_projection_graph(cols_p, labels_p, cfg);
  for (int i = 0; i < 15; ++i) {
    for (int j = 0; j < 15; ++j) {
      CHECK(permuted.w(i, j) == base.w(perm[i], perm[j]));
    }
  }
}

TEST_CASE("laplacians reproduce the closed-form small cases") {
  GraphWeights wc, wp;
  wc.kind = jplrdl::GraphKind::coefficient;
  wp.kind = jplrdl::GraphKind::projection;
  wc.w = Matrix(2, 2);
  wc.w << 0, 1, 1, 0;
  wp.w = wc.w;
  jplrdl::LaplacianPair lp = jplrdl::laplacians(wc, wp);
  Matrix expect(2, 2);
  expect << 1, -1, -1, 1;
  CHECK((lp.l_c - expect).cwiseAbs().maxCoeff() == 0.0);
  CHECK((lp.l_c_norm - expect).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((lp.l_p_norm - expect).cwiseAbs().maxCoeff() < 1e-12);

  wc.w << 0, -1, -1, 0;
  lp = jplrdl::laplacians(wc, wp);
  CHECK(lp.degrees_c(0) == -1.0);
  CHECK(lp.degrees_c(1) == -1.0);
  CHECK(lp.degrees_c_abs(0) == 1.0);
  Matrix expect_neg(2, 2);
  expect_neg << -1, 1, 1, -1;
  CHECK((lp.l_c - expect_neg).cwiseAbs().maxCoeff() == 0.0);
  // absolute-value degrees flip the signed diagonal back to the identity
  Matrix expect_norm(2, 2);
  expect_norm << 1, 1, 1, 1;
  CHECK((lp.l_c_norm - expect_norm).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("normalized coefficient Laplacian is positive semidefinite") {
  // mixed-sign neighborhoods can push the signed Laplacian's eigenvalues
  // far below zero; the degree-normalized form must stay PSD with a unit
  // diagonal, because per-sample coding curvature rides on it
  auto gen = testsup::rng(47);
  for (int trial = 0; trial < 5; ++trial) {
    Matrix cols = testsup::gaussian(gen, 3, 14);
    std::vector<int> labels;
    for (int i = 0; i < 14; ++i) labels.push_back(i % 2);
    NeighborhoodConfig cfg;
    cfg.k1 = 4;
    cfg.k2 = 5;
    GraphWeights wc = jplrdl::build_coefficient_graph(cols, labels, cfg);
    GraphWeights wp = jplrdl::build_projection_graph(cols, labels, cfg);
    jplrdl::LaplacianPair lp = jplrdl::laplacians(wc, wp);

    CHECK((lp.l_c_norm.diagonal() - Vector::Ones(14)).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Matrix> es(lp.l_c_norm, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
    Eigen::SelfAdjointEigenSolver<Matrix> ep(lp.l_p_norm, Eigen::EigenvaluesOnly);
    CHECK(ep.eigenvalues().minCoeff() >= -1e-10);
  }
}

TEST_CASE("signed Laplacian quadratic form matches the pairwise sum") {
  auto gen = testsup::rng(43);
  Matrix cols = testsup::gaussian(gen, 4, 12);
  std::vector<int> labels;
  for (int i = 0; i < 12; ++i) labels.push_back(i % 2);
  NeighborhoodConfig cfg;
  cfg.k1 = 2;
  cfg.k2 = 2;
  GraphWeights wc = jplrdl::build_coefficient_graph(cols, labels, cfg);
  GraphWeights wp = jplrdl::build_projection_graph(cols, labels, cfg);
  jplrdl::LaplacianPair lp = jplrdl::laplacians(wc, wp);

  Matrix a = testsup::gaussian(gen, 7, 12);
  double pairwise = 0.0;
  for (int i = 0; i < 12; ++i) {
    for (int j = 0; j < 12; ++j) {
      pairwise += 0.5 * (a.col(i) - a.col(j)).squaredNorm() * wc.w(i, j);
    }
  }
  double quad = (a * lp.l_c * a.transpose()).trace();
  CHECK(pairwise == Catch::Approx(quad).margin(1e-9));

  CHECK(lp.l_c.rowwise().sum().cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("all-positive weights give a positive semidefinite Laplacian") {
  auto gen = testsup::rng(44);
  Matrix cols = testsup::gaussian(gen, 5, 10);
  std::vector<int> labels(10, 0);  // one class, so no negative entries
  NeighborhoodConfig cfg;
  cfg.k1 = 3;
  cfg.k2 = 1;
  GraphWeights wc = jplrdl::build_coefficient_graph(cols, labels, cfg);
  CHECK(wc.w.minCoeff() >= 0.0);
  jplrdl::LaplacianPair lp = jplrdl::laplacians(wc, wc);
  Eigen::SelfAdjointEigenSolver<Matrix> es(lp.l_c);
  CHECK(es.eigenvalues().minCoeff() >= -1e-10);
}

TEST_CASE("oversized neighborhoods clamp with a warning") {
  auto gen = testsup::rng(45);
  Matrix cols = testsup::gaussian(gen, 4, 7);
  std::vector<int> labels = {0, 0, 0, 1, 1, 1, 1};
  NeighborhoodConfig big;
  big.k1 = 10;
  big.k2 = 2;
  GraphWeights clamped = jplrdl::build_coefficient_graph(cols, labels, big);
  CHECK_FALSE(clamped.warnings.empty());

  // class 0 has 3 members, class 1 has 4: the clamp is per class
  NeighborhoodConfig cfg23 = big, cfg33 = big;
  cfg23.k1 = 2;
  cfg33.k1 = 3;
  GraphWeights w2 = jplrdl::build_coefficient_graph(cols, labels, cfg23);
  GraphWeights w3 = jplrdl::build_coefficient_graph(cols, labels, cfg33);
  for (int i = 0; i < 7; ++i) {
    const GraphWeights& ref = labels[i] == 0 ? w2 : w3;
    for (int j = 0; j < 7; ++j) {
      if (labels[i] == labels[j] && clamped.w(i, j) > 0.0) CHECK(ref.w(i, j) > 0.0);
    }
  }
}

TEST_CASE("zero neighborhood sizes select the per-class defaults") {
  auto gen = testsup::rng(46);
  Matrix cols = testsup::gaussian(gen, 4, 10);
  std::vector<int> labels = {0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
  NeighborhoodConfig aut;  // k1 = k2 = 0
  NeighborhoodConfig expl;
  expl.k1 = 4;  // min(5 - 1, 15)
  expl.k2 = 4;  // 5 - 1
  GraphWeights a = jplrdl::build_coefficient_graph(cols, labels, aut);
  GraphWeights e = jplrdl::build_coefficient_graph(cols, labels, expl);
  CHECK((a.w - e.w).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("isolated samples yield identity rows in the normalized Laplacian") {
  Matrix cols(2, 1);
  cols.col(0) << 1.0, 2.0;
  GraphWeights wp = jplrdl::build_projection_graph(cols, {0});
  CHECK(wp.w.cwiseAbs().maxCoeff() == 0.0);
  jplrdl::LaplacianPair lp = jplrdl::laplacians(wp, wp);
  CHECK(lp.l_p_norm(0, 0) == 1.0);
}

TEST_CASE("graph builders reject malformed input") {
  Matrix cols = Matrix::Ones(3, 4);
  CHECK_THROWS_AS(jplrdl::build_coefficient_graph(cols, {0, 1, 0}), std::invalid_argument);
  NeighborhoodConfig bad;
  bad.heat_t = 0.0;
  CHECK_THROWS_AS(jplrdl::build_projection_graph(cols, {0, 1, 0, 1}, bad), std::invalid_argument);
  bad = {};
  bad.k1 = -1;
  CHECK_THROWS_AS(jplrdl::build_coefficient_graph(cols, {0, 1, 0, 1}, bad), std::invalid_argument);
  cols(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(jplrdl::build_coefficient_graph(cols, {0, 1, 0, 1}), std::invalid_argument);
}
