#include <catch2/catch_amalgamated.hpp>

#include "jplrdl/sparse_coding.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using jplrdl::CodingResult;
using jplrdl::Matrix;
using jplrdl::QuadraticL1Problem;
using jplrdl::StructuredDictionary;
using jplrdl::TrainConfig;
using jplrdl::Vector;

namespace {

StructuredDictionary random_dictionary(std::mt19937_64& gen, int dim, std::vector<int> counts) {
  StructuredDictionary dict;
  int total = 0;
  for (int c : counts) {
    dict.ranges.push_back({total, c});
    total += c;
  }
  dict.atoms = jplrdl::normalize_columns(testsup::gaussian(gen, dim, total));
  return dict;
}

}  // namespace

TEST_CASE("single-class assembly without graph term doubles the Gram") {
  auto gen = testsup::rng(51);
  StructuredDictionary dict = random_dictionary(gen, 8, {4});
  Vector y = testsup::gaussian(gen, 8, 1);
  Matrix a = Matrix::Zero(4, 3);
  Matrix l_c = Matrix::Zero(3, 3);
  TrainConfig cfg;
  cfg.lambda2 = 0.0;

  QuadraticL1Problem prob = jplrdl::assemble_training_problem(y, dict, 0, a, l_c, 1, cfg);
  Matrix gram = dict.atoms.transpose() * dict.atoms;
  CHECK((prob.hessian - 2.0 * gram).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((prob.linear - 2.0 * dict.atoms.transpose() * y).cwiseAbs().maxCoeff() < 1e-12);

  // a zero Laplacian gives the identical problem even with lambda2 active
  TrainConfig with_graph;
  with_graph.lambda2 = 0.7;
  QuadraticL1Problem prob2 = jplrdl::assemble_training_problem(y, dict, 0, a, l_c, 1, with_graph);
  CHECK((prob2.hessian - prob.hessian).cwiseAbs().maxCoeff() == 0.0);
  CHECK((prob2.linear - prob.linear).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("two-class assembly matches a hand expansion") {
  auto gen = testsup::rng(52);
  StructuredDictionary dict = random_dictionary(gen, 10, {2, 2});
  Vector y = testsup::gaussian(gen, 10, 1);
  Matrix a = testsup::gaussian(gen, 4, 5);
  Matrix l_c = testsup::gaussian(gen, 5, 5);
  l_c = (l_c + l_c.transpose()).eval();
  TrainConfig cfg;
  cfg.lambda2 = 0.3;
  const int p = 2;  // owned by class 1
  QuadraticL1Problem prob = jplrdl::assemble_training_problem(y, dict, 1, a, l_c, p, cfg);

  Matrix d1 = dict.atoms.leftCols(2), d2 = dict.atoms.rightCols(2);
  Matrix expect_h = dict.atoms.transpose() * dict.atoms;
  expect_h.topLeftCorner(2, 2) += d1.transpose() * d1;
  expect_h.bottomRightCorner(2, 2) += d2.transpose() * d2;
  expect_h += cfg.lambda2 * l_c(p, p) * Matrix::Identity(4, 4);

  Vector expect_b = dict.atoms.transpose() * y;
  expect_b.tail(2) += d2.transpose() * y;
  for (int q = 0; q < 5; ++q) {
    if (q != p) expect_b -= cfg.lambda2 * l_c(q, p) * a.col(q);
  }
  CHECK((prob.hessian - expect_h).cwiseAbs().maxCoeff() < 1e-11);
  CHECK((prob.linear - expect_b).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("negative graph diagonal passes through assembly unmodified") {
  auto gen = testsup::rng(53);
  StructuredDictionary dict = random_dictionary(gen, 6, {3});
  Vector y = testsup::gaussian(gen, 6, 1);
  Matrix a = Matrix::Zero(3, 2);
  Matrix l_c(2, 2);
  l_c << -40.0, 40.0, 40.0, -40.0;  // strongly negative diagonal
  TrainConfig cfg;
  cfg.lambda2 = 1.0;
  QuadraticL1Problem prob = jplrdl::assemble_training_problem(y, dict, 0, a, l_c, 0, cfg);

  // assembly reports the quadratic exactly as the objective defines it; an
  // indefinite graph diagonal must not be silently repaired, because any
  // shift moves the minimizer of the surrounding sweep
  Matrix expect_h = 2.0 * (dict.atoms.transpose() * dict.atoms).eval();
  expect_h += cfg.lambda2 * l_c(0, 0) * Matrix::Identity(3, 3);
  CHECK((prob.hessian - expect_h).cwiseAbs().maxCoeff() < 1e-12);
  Eigen::SelfAdjointEigenSolver<Matrix> es(prob.hessian, Eigen::EigenvaluesOnly);
  CHECK(es.eigenvalues().minCoeff() < 0.0);
}

TEST_CASE("feature-sign returns zero when the penalty dominates") {
  auto gen = testsup::rng(54);
  Matrix h = testsup::spd(gen, 5, 0.5);
  Vector b = testsup::gaussian(gen, 5, 1);
  QuadraticL1Problem prob{h, b, 2.0 * b.cwiseAbs().maxCoeff() + 0.1};
  CodingResult res = jplrdl::feature_sign_solve(prob);
  CHECK(res.alpha.cwiseAbs().maxCoeff() == 0.0);
  CHECK(res.active_set_size == 0);
  CHECK(res.objective == 0.0);
}

TEST_CASE("feature-sign matches the orthonormal-design closed form") {
  auto gen = testsup::rng(55);
  Vector b = testsup::gaussian(gen, 7, 1);
  const double l1 = 0.8;
  QuadraticL1Problem prob{Matrix::Identity(7, 7), b, l1};
  CodingResult res = jplrdl::feature_sign_solve(prob);
  for (int j = 0; j < 7; ++j) {
    double expect = (b(j) > 0 ? 1.0 : -1.0) * std::max(std::abs(b(j)) - l1 / 2.0, 0.0);
    CHECK(res.alpha(j) == Catch::Approx(expect).margin(1e-10));
  }
}

TEST_CASE("feature-sign attains the exhaustive sign-pattern minimum") {
  auto gen = testsup::rng(56);
  for (int trial = 0; trial < 8; ++trial) {
    Matrix h = testsup::spd(gen, 6, 0.2);
    Vector b = testsup::gaussian(gen, 6, 1);
    double l1 = 0.1 + 0.3 * trial;
    QuadraticL1Problem prob{h, b, l1};
    CodingResult res = jplrdl::feature_sign_solve(prob);
    Vector oracle_alpha;
    double oracle_obj = oracle::lasso_enum_objective(h, b, l1, &oracle_alpha);
    CHECK(res.objective == Catch::Approx(oracle_obj).margin(1e-9));
    CHECK((res.alpha - oracle_alpha).cwiseAbs().maxCoeff() < 1e-7);
  }
}

TEST_CASE("feature-sign certificates hold on random problems") {
  auto gen = testsup::rng(57);
  for (int trial = 0; trial < 25; ++trial) {
    int c = 2 + trial % 9;
    Matrix h = testsup::spd(gen, c, 0.1);
    Vector b = testsup::gaussian(gen, c, 1);
    double l1 = 0.05 * (1 + trial % 7);
    QuadraticL1Problem prob{h, b, l1};
    CodingResult res = jplrdl::feature_sign_solve(prob);

    Vector g = 2.0 * (h * res.alpha - b);
    int active = 0;
    for (int j = 0; j < c; ++j) {
      if (res.alpha(j) != 0.0) {
        ++active;
        CHECK(std::abs(g(j) + l1 * (res.alpha(j) > 0 ? 1.0 : -1.0)) <= 1e-8);
      } else {
        CHECK(std::abs(g(j)) <= l1 + 1e-8);
      }
    }
    CHECK(res.active_set_size == active);
    CHECK(res.objective == Catch::Approx(jplrdl::coding_objective(prob, res.alpha)).margin(1e-10));

    // never worse than the zero vector or the unpenalized least-squares point
    CHECK(res.objective <= 0.0 + 1e-12);
    Vector ls = h.ldlt().solve(b);
    CHECK(res.objective <= jplrdl::coding_objective(prob, ls) + 1e-12);

    // determinism: identical input, identical bits
    CodingResult rerun = jplrdl::feature_sign_solve(prob);
    CHECK((rerun.alpha - res.alpha).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("feature-sign with zero penalty solves the plain quadratic") {
  auto gen = testsup::rng(58);
  Matrix h = testsup::spd(gen, 5, 0.3);
  Vector b = testsup::gaussian(gen, 5, 1);
  QuadraticL1Problem prob{h, b, 0.0};
  CodingResult res = jplrdl::feature_sign_solve(prob);
  CHECK((h * res.alpha - b).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("test-sample coding recovers a lifted atom") {
  auto gen = testsup::rng(59);
  Matrix p = jplrdl::orthonormalize(testsup::gaussian(gen, 12, 6));
  StructuredDictionary dict = random_dictionary(gen, 6, {3, 3});
  Vector x = p * dict.atoms.col(1);
  CodingResult res = jplrdl::code_projected_sample(x, p, dict, 1e-8);
  Vector e1 = Vector::Zero(6);
  e1(1) = 1.0;
  CHECK((dict.atoms * res.alpha - dict.atoms.col(1)).norm() < 1e-6);
  CHECK((res.alpha - e1).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("overcomplete test-sample coding stays bounded and certified") {
  // more atoms than projected dimensions makes the Gram singular; the
  // active-set solves must still terminate at a sign-stationary point with
  // finite coefficients
  auto gen = testsup::rng(63);
  Matrix p = jplrdl::orthonormalize(testsup::gaussian(gen, 11, 5));
  StructuredDictionary dict = random_dictionary(gen, 5, {6, 6});
  for (int trial = 0; trial < 6; ++trial) {
    Vector x = testsup::gaussian(gen, 11, 1);
    const double xi = 0.05 * (1 + trial);
    CodingResult res = jplrdl::code_projected_sample(x, p, dict, xi);
    REQUIRE(res.alpha.allFinite());

    Matrix h = dict.atoms.transpose() * dict.atoms;
    Vector b = dict.atoms.transpose() * p.transpose() * x;
    Vector g = 2.0 * (h * res.alpha - b);
    for (int j = 0; j < 12; ++j) {
      if (res.alpha(j) != 0.0) {
        CHECK(std::abs(g(j) + xi * (res.alpha(j) > 0 ? 1.0 : -1.0)) <= 1e-8);
      } else {
        CHECK(std::abs(g(j)) <= xi + 1e-8);
      }
    }
  }
}

TEST_CASE("test-sample coding collapses to zero under a huge penalty") {
  auto gen = testsup::rng(60);
  Matrix p = jplrdl::orthonormalize(testsup::gaussian(gen, 10, 5));
  StructuredDictionary dict = random_dictionary(gen, 5, {4});
  Vector x = testsup::gaussian(gen, 10, 1);
  double xi = 2.0 * (dict.atoms.transpose() * p.transpose() * x).cwiseAbs().maxCoeff() + 1.0;
  CodingResult res = jplrdl::code_projected_sample(x, p, dict, xi);
  CHECK(res.alpha.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("test-sample coding with orthonormal atoms soft-thresholds") {
  auto gen = testsup::rng(61);
  Matrix p = jplrdl::orthonormalize(testsup::gaussian(gen, 9, 4));
  StructuredDictionary dict;
  dict.atoms = jplrdl::orthonormalize(testsup::gaussian(gen, 4, 4));
  dict.ranges = {{0, 2}, {2, 2}};
  Vector x = testsup::gaussian(gen, 9, 1);
  const double xi = 0.3;
  CodingResult res = jplrdl::code_projected_sample(x, p, dict, xi);
  Vector b = dict.atoms.transpose() * p.transpose() * x;
  for (int j = 0; j < 4; ++j) {
    double expect = (b(j) > 0 ? 1.0 : -1.0) * std::max(std::abs(b(j)) - xi / 2.0, 0.0);
    CHECK(res.alpha(j) == Catch::Approx(expect).margin(1e-10));
  }
}

TEST_CASE("coding sweep updates columns in place and rejects bad labels") {
  auto gen = testsup::rng(62);
  StructuredDictionary dict = random_dictionary(gen, 8, {3, 3});
  Matrix px = testsup::gaussian(gen, 8, 6);
  std::vector<int> labels = {0, 0, 0, 1, 1, 1};
  Matrix l_c = Matrix::Zero(6, 6);
  Matrix a = Matrix::Zero(6, 6);
  TrainConfig cfg;
  jplrdl::coding_sweep(px, dict, labels, l_c, cfg, a);
  for (int p = 0; p < 6; ++p) {
    QuadraticL1Problem prob =
        jplrdl::assemble_training_problem(px.col(p), dict, labels[p], a, l_c, p, cfg);
    Vector g = 2.0 * (prob.hessian * a.col(p) - prob.linear);
    for (int j = 0; j < 6; ++j) {
      if (a(j, p) != 0.0) {
        CHECK(std::abs(g(j) + cfg.lambda1 * (a(j, p) > 0 ? 1.0 : -1.0)) <= 1e-8);
      } else {
        CHECK(std::abs(g(j)) <= cfg.lambda1 + 1e-8);
      }
    }
  }
  std::vector<int> bad = {0, 0, 0, 1, 1, 7};
  CHECK_THROWS_AS(jplrdl::coding_sweep(px, dict, bad, l_c, cfg, a), std::invalid_argument);
}
