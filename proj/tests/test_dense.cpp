#include <doctest.h>

#include <cmath>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "mpexp/dense.hpp"
#include "mpexp/errors.hpp"

using namespace mpexp;

TEST_CASE("expm examples") {
  CHECK(dense_expm(DenseMatrix::Zero(3, 3)) == DenseMatrix::Identity(3, 3));

  const DenseMatrix nil = (DenseMatrix(2, 2) << 0, 1, 0, 0).finished();
  CHECK((dense_expm(nil) - (DenseMatrix(2, 2) << 1, 1, 0, 1).finished()).norm() < 1e-15);

  const DenseMatrix d = Eigen::Vector3d(-1.0, 0.5, -30.0).asDiagonal();
  const DenseMatrix ed = dense_expm(d);
  CHECK(ed(0, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(ed(1, 1) == doctest::Approx(std::exp(0.5)).epsilon(1e-15));
  CHECK(ed(2, 2) == doctest::Approx(std::exp(-30.0)).epsilon(1e-13));
  CHECK(ed(0, 1) == 0.0);

  for (double th : {0.1, 1.0, 10.0}) {
    const DenseMatrix r = (DenseMatrix(2, 2) << 0, -th, th, 0).finished();
    const DenseMatrix er = dense_expm(r);
    CHECK(er(0, 0) == doctest::Approx(std::cos(th)).epsilon(1e-13));
    CHECK(er(1, 0) == doctest::Approx(std::sin(th)).epsilon(1e-13));
  }
  CHECK(dense_expm(DenseMatrix(0, 0)).size() == 0);
}

TEST_CASE("expm rejects non-finite input") {
  DenseMatrix m = DenseMatrix::Zero(2, 2);
  m(0, 1) = std::nan("");
  CHECK_THROWS_AS(dense_expm(m), Error);
  m(0, 1) = INFINITY;
  CHECK_THROWS_AS(dense_expm(m), Error);
}

TEST_CASE("norm1") {
  const DenseMatrix m = (DenseMatrix(2, 2) << 1, -2, 3, 4).finished();
  CHECK(norm1(m) == 6.0);
}

TEST_CASE("expm agrees with an independent implementation") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  // Norms across every Padé degree and several squarings.
  for (double scale : {1e-3, 0.05, 0.5, 1.5, 4.0, 20.0, 200.0}) {
    for (int trial = 0; trial < 5; ++trial) {
      const int n = 2 + trial * 7;
      DenseMatrix m(n, n);
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) m(i, j) = u(rng);
      m *= scale / norm1(m);
      m.diagonal().array() -= scale / 2;  // keep entries of exp(m) within a few decades
      const DenseMatrix ref = m.exp();
      CAPTURE(scale);
      CHECK((dense_expm(m) - ref).norm() <= 1e-12 * std::max(1.0, ref.norm()) * std::max(1.0, scale));
    }
  }
}

TEST_CASE("expm semigroup property") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  DenseMatrix m(8, 8);
  for (Index i = 0; i < 8; ++i)
    for (Index j = 0; j < 8; ++j) m(i, j) = u(rng);
  const DenseMatrix e = dense_expm(m);
  const DenseMatrix h = dense_expm(0.5 * m);
  CHECK((h * h - e).norm() <= 1e-13 * e.norm());
  CHECK((dense_expm(-m) * e - DenseMatrix::Identity(8, 8)).norm() <= 1e-12);
}
