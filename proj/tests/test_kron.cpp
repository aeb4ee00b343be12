#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "lyapbound/kron.hpp"
#include "lyapbound/sim.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

using namespace lyapbound;

namespace {

Matrix random_matrix(Index n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  Matrix m(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) m(i, j) = nd(rng);
  }
  return m;
}

Vector random_vector(Index n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = nd(rng);
  return v;
}

Matrix random_hurwitz(Index n, unsigned seed) {
  Matrix m = random_matrix(n, seed);
  const Eigen::EigenSolver<Matrix> es(m);
  const double shift = es.eigenvalues().real().maxCoeff();
  m -= (shift + 0.3 + 0.000931 * seed) * Matrix::Identity(n, n);
  return m;
}

}  // namespace

TEST_CASE("kron product of column vectors") {
  Vector x(2), y(2);
  x << 1.0, 2.0;
  y << 3.0, 4.0;
  const Matrix z = kron_product(x, y);
  REQUIRE(z.rows() == 4);
  REQUIRE(z.cols() == 1);
  CHECK(z(0, 0) == 3.0);
  CHECK(z(1, 0) == 4.0);
  CHECK(z(2, 0) == 6.0);
  CHECK(z(3, 0) == 8.0);
}

TEST_CASE("kron product block layout") {
  Matrix a(2, 2), b(2, 2);
  a << 1.0, 2.0, 3.0, 4.0;
  b << 0.0, 5.0, 6.0, 7.0;
  const Matrix z = kron_product(a, b);
  REQUIRE(z.rows() == 4);
  REQUIRE(z.cols() == 4);
  CHECK(z.topLeftCorner(2, 2) == Matrix(1.0 * b));
  CHECK(z.topRightCorner(2, 2) == Matrix(2.0 * b));
  CHECK(z.bottomLeftCorner(2, 2) == Matrix(3.0 * b));
  CHECK(z.bottomRightCorner(2, 2) == Matrix(4.0 * b));
}

TEST_CASE("kron power base cases") {
  const Matrix a = random_matrix(3, 1);
  CHECK((kron_power(a, 1) - a).norm() == 0.0);
  CHECK((kron_power(a, 2) - kron_product(a, a)).norm() == 0.0);
  CHECK((kron_power(a, 3) - kron_product(a, kron_product(a, a))).norm() ==
        0.0);
}

TEST_CASE("mixed-product property") {
  const Matrix a = random_matrix(3, 2);
  const Matrix b = random_matrix(3, 3);
  const Matrix lhs = kron_product(a, a) * kron_product(b, b);
  const Matrix rhs = kron_product(Matrix(a * b), Matrix(a * b));
  CHECK((lhs - rhs).norm() <= 1e-12 * rhs.norm());
}

TEST_CASE("lift_vector matches kron power of the column") {
  const Vector x = random_vector(3, 4);
  const Vector lifted = lift_vector(x, 3);
  REQUIRE(lifted.size() == 27);
  const Matrix direct = kron_product(x, kron_product(x, x));
  CHECK((lifted - direct.col(0)).norm() <= 1e-14 * lifted.norm());
}

TEST_CASE("hierarchy matrix is linear in A") {
  const Matrix a = random_matrix(3, 5);
  const Matrix b = random_matrix(3, 6);
  for (int i = 1; i <= 3; ++i) {
    const Matrix lhs = hierarchy_matrix(a + 2.5 * b, i);
    const Matrix rhs = hierarchy_matrix(a, i) + 2.5 * hierarchy_matrix(b, i);
    CHECK((lhs - rhs).norm() <= 1e-12 * std::max(1.0, rhs.norm()));
  }
}

TEST_CASE("hierarchy matrix level one is A itself") {
  const Matrix a = random_matrix(4, 7);
  CHECK((hierarchy_matrix(a, 1) - a).norm() == 0.0);
}

TEST_CASE("hierarchy spectrum consists of i-fold eigenvalue sums") {
  Matrix a(2, 2);
  a << -1.0, 0.0, 0.0, -3.0;
  const Matrix h3 = hierarchy_matrix(a, 3);
  Eigen::EigenSolver<Matrix> es(h3);
  std::vector<double> eig(h3.rows());
  for (Index k = 0; k < h3.rows(); ++k) eig[k] = es.eigenvalues()(k).real();
  std::sort(eig.begin(), eig.end());
  // sums of three picks from {-1, -3}: -9, -7, -5, -3 with multiplicities
  const std::vector<double> expected = {-9.0, -7.0, -7.0, -7.0,
                                        -5.0, -5.0, -5.0, -3.0};
  for (std::size_t k = 0; k < expected.size(); ++k) {
    CHECK(eig[k] == doctest::Approx(expected[k]).epsilon(1e-12));
  }
}

TEST_CASE("lifted flow property on the hierarchy") {
  // e^{L_i t} (x0 tensor ... tensor x0) = x(t) tensor ... tensor x(t)
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> pick_n(2, 3);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = pick_n(rng);
    const Matrix a = random_hurwitz(n, 100 + trial);
    const Vector x0 = random_vector(n, 200 + trial);
    const double t = 0.37 + 0.05 * trial;
    const Vector xt = expm(a, t) * x0;
    for (int i = 1; i <= 3; ++i) {
      const Vector lifted_flow =
          expm(hierarchy_matrix(a, i), t) * lift_vector(x0, i);
      const Vector flow_lifted = lift_vector(xt, i);
      const double rel = (lifted_flow - flow_lifted).norm() /
                         std::max(1e-300, flow_lifted.norm());
      CHECK(rel <= 1e-6);
    }
  }
}

TEST_CASE("build_level carries consistent pieces") {
  LtiSystem sys;
  sys.a = random_hurwitz(2, 31);
  sys.b = random_vector(2, 32);
  sys.c = random_vector(2, 33).transpose();
  const HierarchyLevel lvl = build_level(sys, 3);
  CHECK(lvl.level == 3);
  CHECK(lvl.dim == 8);
  CHECK((lvl.a_mat - hierarchy_matrix(sys.a, 3)).norm() == 0.0);
  CHECK((lvl.b_vec - lift_vector(sys.b, 3)).norm() == 0.0);
  CHECK((lvl.c_vec.transpose() -
         lift_vector(sys.c.transpose(), 3)).norm() == 0.0);
}

TEST_CASE("error paths") {
  const Matrix a = random_matrix(2, 41);
  CHECK_THROWS_AS(kron_power(a, 0), DimensionError);
  CHECK_THROWS_AS(kron_power(a, -2), DimensionError);
  CHECK_THROWS_AS(hierarchy_matrix(random_matrix(3, 42).topRows(2), 2),
                  DimensionError);
}

TEST_CASE("dimension cap") {
  const Matrix a = random_matrix(4, 51);
  CHECK_THROWS_AS(kron_power(a, 7), DimensionCapError);   // 4^7 > 4096
  CHECK_NOTHROW(kron_power(Matrix(Matrix::Identity(2, 2)), 12));  // 4096
  CHECK_THROWS_AS(hierarchy_matrix(a, 7), DimensionCapError);
  CHECK_THROWS_AS(lift_vector(random_vector(4, 52), 7), DimensionCapError);
  CHECK_THROWS_AS(kron_power(a, 4, 100), DimensionCapError);
}
