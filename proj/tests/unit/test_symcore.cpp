#include <doctest.h>

#include <cmath>
#include <random>

#include "../support/oracles.hpp"
#include "nsdpcq/errors.hpp"
#include "nsdpcq/symcore.hpp"

using namespace nsdpcq;

namespace {

SymMat random_sym(int m, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Matrix a(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) a(i, j) = nd(rng);
  return SymMat(Matrix(0.5 * (a + a.transpose())));
}

Matrix diag_of(std::initializer_list<double> v) {
  Vector d(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) d(i++) = x;
  return d.asDiagonal();
}

}  // namespace

TEST_CASE("SymMat mirrors the upper triangle") {
  Matrix a(2, 2);
  a << 1, 2, 99, 3;
  const SymMat s(a);
  CHECK(s(1, 0) == 2.0);
  CHECK(s(0, 1) == 2.0);
  SymMat t(3);
  t.set(2, 0, 5.0);
  CHECK(t(0, 2) == 5.0);
  CHECK_THROWS_AS(SymMat(0), DimensionError);
  CHECK(inner(SymMat::identity(3), SymMat::identity(3)) == doctest::Approx(3.0));
}

TEST_CASE("eigh on a diagonal matrix sorts descending") {
  const Spectral s = eigh(SymMat(diag_of({3, 1, 2})));
  CHECK(s.values(0) == doctest::Approx(3));
  CHECK(s.values(1) == doctest::Approx(2));
  CHECK(s.values(2) == doctest::Approx(1));
  CHECK(std::abs(s.vectors(0, 0)) == doctest::Approx(1));
  CHECK(std::abs(s.vectors(2, 1)) == doctest::Approx(1));
  CHECK(std::abs(s.vectors(1, 2)) == doctest::Approx(1));
}

TEST_CASE("eigh of the exchange matrix matches the 2x2 closed form") {
  Matrix a(2, 2);
  a << 0, 1, 1, 0;
  const Spectral s = eigh(SymMat(a));
  const auto [l1, l2] = oracle::eig2(0, 1, 0);
  CHECK(s.values(0) == doctest::Approx(l1).epsilon(1e-12));
  CHECK(s.values(1) == doctest::Approx(l2).epsilon(1e-12));
}

TEST_CASE("eigh of the identity reconstructs") {
  const Spectral s = eigh(SymMat::identity(4));
  CHECK((s.values.array() - 1.0).abs().maxCoeff() < 1e-14);
  const Matrix rec = s.vectors * s.values.asDiagonal() * s.vectors.transpose();
  CHECK((rec - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("eigh is deterministic and agrees with the reference solver") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 1 + trial % 8;
    const SymMat a = random_sym(m, rng);
    const Spectral s1 = eigh(a), s2 = eigh(a);
    CHECK((s1.vectors - s2.vectors).cwiseAbs().maxCoeff() == 0.0);
    const oracle::Eig ref = oracle::eig(a.dense());
    CHECK((s1.values - ref.values).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(orthogonality_defect(s1.vectors) < 1e-10);
    const Matrix rec = s1.vectors * s1.values.asDiagonal() * s1.vectors.transpose();
    CHECK((rec - a.dense()).cwiseAbs().maxCoeff() < 1e-10 * (1 + a.norm_inf()));
  }
}

TEST_CASE("proj_psd examples") {
  const SymMat p = proj_psd(SymMat(diag_of({1, -2})));
  CHECK((p.dense() - diag_of({1, 0})).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(proj_psd(SymMat(3)).norm_fro() == 0.0);
  Matrix a(2, 2);
  a << 0, 1, 1, 0;
  Matrix want(2, 2);
  want << 0.5, 0.5, 0.5, 0.5;
  CHECK((proj_psd(SymMat(a)).dense() - want).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((proj_psd(SymMat(a)).dense() - oracle::proj_psd(a)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("Moreau decomposition and idempotence on random input") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const SymMat a = random_sym(1 + trial % 8, rng);
    const SymMat pp = proj_psd(a), pn = proj_psd(-a);
    CHECK((pp - pn - a).norm_inf() < 1e-8);
    CHECK(std::abs(inner(pp, pn)) < 1e-8);
    CHECK((proj_psd(pp) - pp).norm_inf() < 1e-8);
  }
}

TEST_CASE("numerical_rank examples") {
  CHECK(numerical_rank(SymMat(diag_of({5, 1e-14, 0})), 1e-8) == 1);
  CHECK(numerical_rank(SymMat::identity(3), 1e-8) == 3);
  Matrix v(3, 2);
  v << 0, 0, 0.5, 0.5, 0.5, 0.5;
  CHECK(numerical_rank(SymMat(Matrix(v.transpose() * v))) == 1);
  CHECK(oracle::rank(v) == 1);
}

TEST_CASE("kernel_basis examples") {
  const KernelBasis a = kernel_basis(SymMat(diag_of({1, 0})));
  CHECK(a.rank_r == 1);
  REQUIRE(a.kernel_dim() == 1);
  CHECK(std::abs(a.cols(0, 0)) < 1e-14);
  CHECK(std::abs(a.cols(1, 0)) == doctest::Approx(1));
  CHECK(a.provenance == Provenance::Fixed);

  const KernelBasis z = kernel_basis(SymMat(2));
  CHECK(z.rank_r == 0);
  CHECK(z.kernel_dim() == 2);
  CHECK(orthogonality_defect(z.cols) < 1e-12);

  const KernelBasis pd = kernel_basis(SymMat(diag_of({2, 1})));
  CHECK(pd.rank_r == 2);
  CHECK(pd.kernel_dim() == 0);

  CHECK_THROWS_AS(kernel_basis(SymMat(diag_of({1, -1}))), NotFeasibleError);
  try {
    kernel_basis(SymMat(diag_of({1, -0.5})));
  } catch (const NotFeasibleError& e) {
    CHECK(e.min_eigenvalue() == doctest::Approx(-0.5));
  }
}

TEST_CASE("kernel_basis satisfies the kernel invariants on random PSD input") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 1 + trial % 6;
    const int r = static_cast<int>(rng() % static_cast<unsigned>(m + 1));
    const Matrix u = oracle::random_orthogonal(m, rng);
    Vector d = Vector::Zero(m);
    for (int i = 0; i < r; ++i) d(i) = 1.0 + static_cast<double>(rng() % 5);
    const SymMat g(Matrix(u * d.asDiagonal() * u.transpose()));
    const KernelBasis kb = kernel_basis(g);
    CHECK(kb.rank_r == r);
    CHECK(kb.kernel_dim() == m - r);
    if (kb.kernel_dim() == 0) continue;
    CHECK(orthogonality_defect(kb.cols) <= 1e-10);
    CHECK((g.dense() * kb.cols).cwiseAbs().maxCoeff() <= kernel_tolerance(g));
  }
}

TEST_CASE("rotate_basis examples") {
  const KernelBasis e = kernel_basis(SymMat(2));
  const KernelBasis same = rotate_basis(e, Matrix::Identity(2, 2));
  CHECK((same.cols - e.cols).cwiseAbs().maxCoeff() == 0.0);
  CHECK(same.provenance == Provenance::Sampled);
  const KernelBasis neg = rotate_basis(e, -Matrix::Identity(2, 2));
  CHECK((neg.cols + e.cols).cwiseAbs().maxCoeff() == 0.0);
  CHECK(neg.rank_r == e.rank_r);

  KernelBasis eye = e;
  eye.cols = Matrix::Identity(2, 2);
  const double h = 1.0 / std::sqrt(2.0);
  Matrix c(2, 2);
  c << h, h, -h, h;
  const KernelBasis rot = rotate_basis(eye, c);
  for (int j = 0; j < 2; ++j) {
    CHECK(std::abs(rot.cols(0, j)) == doctest::Approx(h));
    CHECK(std::abs(rot.cols(1, j)) == doctest::Approx(h));
  }
  CHECK(rot.cols(1, 0) * rot.cols(1, 1) < 0);

  CHECK_THROWS_AS(rotate_basis(eye, Matrix::Constant(2, 2, 1.0)), NumericError);
  CHECK_THROWS_AS(rotate_basis(eye, Matrix::Identity(3, 3)), DimensionError);
}

TEST_CASE("rotate_basis preserves kernel membership") {
  std::mt19937_64 rng(5);
  Matrix d = Matrix::Zero(4, 4);
  d(0, 0) = 2;
  const Matrix u = oracle::random_orthogonal(4, rng);
  const SymMat g(Matrix(u * d * u.transpose()));
  const KernelBasis kb = kernel_basis(g);
  for (int t = 0; t < 20; ++t) {
    const KernelBasis r = rotate_basis(kb, haar_orthogonal(kb.kernel_dim(), rng));
    CHECK((g.dense() * r.cols).cwiseAbs().maxCoeff() <= kernel_tolerance(g));
    CHECK(orthogonality_defect(r.cols) <= 1e-10);
  }
}

TEST_CASE("svec is an isometry and smat inverts it") {
  std::mt19937_64 rng(9);
  const SymMat a = random_sym(4, rng), b = random_sym(4, rng);
  CHECK(svec(a.dense()).dot(svec(b.dense())) == doctest::Approx(inner(a, b)).epsilon(1e-12));
  CHECK((smat(svec(a.dense()), 4) - a.dense()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("orthonormal_complement and Gram-Schmidt") {
  Matrix a(3, 1);
  a << 1, 1, 0;
  a /= a.norm();
  const Matrix c = orthonormal_complement(a, 3);
  CHECK(c.cols() == 2);
  CHECK((a.transpose() * c).cwiseAbs().maxCoeff() < 1e-12);
  Matrix g(3, 2);
  g << 1, 1, 0, 1, 0, 0;
  modified_gram_schmidt(g);
  CHECK(orthogonality_defect(g) < 1e-14);
  CHECK(g(0, 0) == doctest::Approx(1));
}
