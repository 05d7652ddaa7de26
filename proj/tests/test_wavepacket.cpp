#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>

#include "hagprop/wavepacket.hpp"

using namespace hagprop;

namespace {

WavepacketParams unit_params(int d = 1, double hbar = 1.0) {
  WavepacketParams p;
  p.A = Matrix::Identity(d, d);
  p.B = Matrix::Identity(d, d);
  p.a = RealVector::Zero(d);
  p.eta = RealVector::Zero(d);
  p.hbar = hbar;
  return p;
}

}  // namespace

TEST_CASE("compatibility defects") {
  WavepacketParams p = unit_params(2);
  auto [d1, d2] = validate(p);
  CHECK(d1 == 0.0);
  CHECK(d2 == 0.0);

  p.A = 2.0 * Matrix::Identity(2, 2);
  auto [e1, e2] = validate(p);
  CHECK(e1 == 0.0);
  CHECK(e2 == doctest::Approx(2.0 * std::sqrt(2.0)));  // ||2I|| Frobenius in d=2

  // A = I, B = I + iC with C real symmetric stays compatible
  WavepacketParams q = unit_params(2);
  RealMatrix C(2, 2);
  C << 0.3, -0.2, -0.2, 0.9;
  q.B = Matrix::Identity(2, 2) + Complex(0, 1) * C.cast<Complex>();
  auto [f1, f2] = validate(q);
  CHECK(f1 < 1e-14);
  CHECK(f2 < 1e-14);
}

TEST_CASE("random valid pairs satisfy the conditions") {
  std::mt19937_64 rng(7);
  for (int d : {1, 2, 3})
    for (int rep = 0; rep < 4; ++rep) {
      WavepacketParams p = random_valid_params(d, 0.5, rng);
      CHECK(is_valid(p, 1e-10));
      CHECK(std::abs(p.A.determinant()) > 1e-8);
    }
}

TEST_CASE("phi_0 pointwise values") {
  WavepacketParams p = unit_params();
  Eigen::MatrixXd X(2, 1);
  X << 0.0, 1.0;
  Vector v = eval_phi0(p, X);
  const double pref = std::pow(std::numbers::pi, -0.25);
  CHECK(std::abs(v(0) - pref) < 1e-15);
  CHECK(std::abs(v(1) - pref * std::exp(-0.5)) < 1e-15);
}

TEST_CASE("phi_0 quadrature norm at small hbar") {
  WavepacketParams p = unit_params(1, 0.01);
  Matrix G = quadrature_gram(p, 0, 12);
  CHECK(std::abs(G(0, 0).real() - 1.0) < 1e-10);
  CHECK(std::abs(G(0, 0).imag()) < 1e-14);
}

TEST_CASE("ladder recurrence reproduces Hermite functions") {
  WavepacketParams p = unit_params();
  Eigen::MatrixXd X(81, 1);
  for (int i = 0; i < 81; ++i) X(i, 0) = -4.0 + 0.1 * i;
  BasisBlock b(p, X, 10);
  for (int j = 0; j <= 10; ++j)
    for (int i = 0; i < 81; ++i)
      CHECK(std::abs(b.values()(i, j) - hermite_function(j, X(i, 0))) < 1e-10);

  // phi_1 = sqrt(2) x phi_0 and phi_2 = (2x^2-1)/sqrt(2) phi_0
  for (int i = 0; i < 81; ++i) {
    double x = X(i, 0);
    CHECK(std::abs(b.values()(i, 1) - std::sqrt(2.0) * x * b.values()(i, 0)) < 1e-12);
    CHECK(std::abs(b.values()(i, 2) - (2 * x * x - 1) / std::sqrt(2.0) * b.values()(i, 0)) <
          1e-12);
  }
}

TEST_CASE("raise_all extends the block consistently") {
  std::mt19937_64 rng(11);
  WavepacketParams p = random_valid_params(1, 0.4, rng);
  Eigen::MatrixXd X(21, 1);
  for (int i = 0; i < 21; ++i) X(i, 0) = -2.0 + 0.2 * i;
  BasisBlock b(p, X, 3);
  BasisBlock b5(p, X, 4);
  b.raise_all();
  CHECK(b.degree() == 4);
  CHECK((b.values() - b5.values()).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("Gram matrix orthonormal for generic valid parameters") {
  std::mt19937_64 rng(23);
  for (double hbar : {1.0, 0.1}) {
    WavepacketParams p = random_valid_params(1, hbar, rng);
    int J = 6;
    Matrix G = quadrature_gram(p, J, 2 * J + 8);
    CHECK((G - Matrix::Identity(G.rows(), G.cols())).norm() < 1e-8);
  }
}

TEST_CASE("d=2 Gram matrix under rotated tensor quadrature") {
  std::mt19937_64 rng(31);
  WavepacketParams p = random_valid_params(2, 0.5, rng);
  Matrix G = quadrature_gram(p, 3, 16);
  CHECK((G - Matrix::Identity(G.rows(), G.cols())).norm() < 1e-8);
}

TEST_CASE("hermite-polynomial route agrees at d=1") {
  std::mt19937_64 rng(5);
  WavepacketParams p = random_valid_params(1, 0.3, rng);
  p.a(0) = 0.2;
  p.eta(0) = -0.4;
  RealVector x(9);
  for (int i = 0; i < 9; ++i) x(i) = -1.0 + 0.25 * i;
  Eigen::MatrixXd X(9, 1);
  X.col(0) = x;
  BasisBlock b(p, X, 7);
  for (int j = 0; j <= 7; ++j) {
    Vector ref = eval_phi_hermite_route(p, x, j);
    for (int i = 0; i < 9; ++i) CHECK(std::abs(b.values()(i, j) - ref(i)) < 1e-11);
  }
}

TEST_CASE("position matrix: harmonic oscillator bands") {
  WavepacketParams p = unit_params();
  MultiIndexTable t(1, 8);
  Matrix W = position_matrix(p, t, {1});
  for (int j = 0; j <= 7; ++j) {
    CHECK(std::abs(W(j, j + 1) - std::sqrt((j + 1) / 2.0)) < 1e-14);
    CHECK(std::abs(W(j + 1, j) - std::sqrt((j + 1) / 2.0)) < 1e-14);
  }
  CHECK(W(0, 5) == Complex(0, 0));  // band structure is exact
}

TEST_CASE("position matrix matches quadrature for m=2, hbar=0.25") {
  WavepacketParams p = unit_params(1, 0.25);
  MultiIndexTable t(1, 6);
  Matrix W2 = position_matrix(p, t, {2});
  for (int j = 0; j <= 4; ++j)
    for (int q = 0; q <= 4; ++q) {
      Complex ref = quadrature_position_element(p, j, q, 2, 40);
      CHECK(std::abs(W2(j, q) - ref) < 1e-8);
    }
}

TEST_CASE("position matrix matches quadrature for random valid params") {
  std::mt19937_64 rng(77);
  WavepacketParams p = random_valid_params(1, 0.3, rng);
  MultiIndexTable t(1, 6);
  for (int m : {1, 2, 3}) {
    Matrix W = position_matrix(p, t, {m});
    for (int j = 0; j <= 3; ++j)
      for (int q = 0; q <= 3; ++q)
        CHECK(std::abs(W(j, q) - quadrature_position_element(p, j, q, m, 48)) < 1e-8);
  }
}

TEST_CASE("derivative matrix: harmonic value and band structure") {
  WavepacketParams p = unit_params();
  MultiIndexTable t(1, 8);
  Matrix D = derivative_matrix(p, t, {1});
  CHECK(std::abs(D(0, 1) - 1.0 / std::sqrt(2.0)) < 1e-14);
  CHECK(D(2, 6) == Complex(0, 0));
}

TEST_CASE("derivative matrix matches quadrature for random params") {
  std::mt19937_64 rng(13);
  WavepacketParams p = random_valid_params(1, 0.6, rng);
  MultiIndexTable t(1, 5);
  Matrix D = derivative_matrix(p, t, {1});
  for (int j = 0; j <= 3; ++j)
    for (int q = 0; q <= 3; ++q)
      CHECK(std::abs(D(j, q) - quadrature_derivative_element(p, j, q, 40)) < 1e-8);
}

TEST_CASE("derivative matrix anti-adjoint at eta = 0") {
  std::mt19937_64 rng(3);
  WavepacketParams p = random_valid_params(1, 0.5, rng);
  MultiIndexTable t(1, 7);
  Matrix D = derivative_matrix(p, t, {1});
  // interior block only: the last band of a truncated table is clipped
  for (int j = 0; j <= 5; ++j)
    for (int q = 0; q <= 5; ++q)
      CHECK(std::abs(D(j, q) + std::conj(D(q, j))) < 1e-12);
}

TEST_CASE("projector norm bound") {
  WavepacketParams p = unit_params();
  MultiIndexTable t(1, 10);
  auto [lhs, rhs] = projector_norm_check(p, t, 0, {1});
  CHECK(lhs == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(rhs == doctest::Approx(std::sqrt(2.0)));

  auto [l0, r0] = projector_norm_check(p, t, 3, {0});
  CHECK(l0 == 1.0);
  CHECK(r0 == 1.0);

  WavepacketParams q = unit_params(1, 0.04);
  auto [l2, r2] = projector_norm_check(q, t, 4, {2});
  CHECK(l2 <= r2);

  std::mt19937_64 rng(9);
  for (int rep = 0; rep < 3; ++rep) {
    WavepacketParams r = random_valid_params(1, 0.3, rng);
    for (int n = 0; n <= 6; ++n)
      for (int m = 0; m <= 3; ++m) {
        auto [lh, rh] = projector_norm_check(r, t, n, {m});
        CHECK(lh <= rh * (1 + 1e-12));
      }
  }
}

TEST_CASE("support growth: position matrix maps degree n into degree n+|m|") {
  std::mt19937_64 rng(41);
  WavepacketParams p = random_valid_params(1, 0.7, rng);
  MultiIndexTable t(1, 12);
  Matrix W = position_matrix(p, t, {3});
  Vector v = Vector::Zero(t.size());
  v(2) = 1.0;  // degree 2
  Vector w = W * v;
  for (std::size_t k = 0; k < t.size(); ++k)
    if (degree(t[k]) > 5) CHECK(std::abs(w(k)) == 0.0);
}
