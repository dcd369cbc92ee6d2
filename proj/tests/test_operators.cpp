#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "spinsim/operators.hpp"
#include "spinsim/spin.hpp"

using namespace spinsim;

namespace {

Matrix random_matrix(Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix m(d, d);
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) m(i, j) = Complex(g(rng), g(rng));
  }
  return m;
}

Matrix random_hermitian(Index d, std::mt19937_64& rng) {
  const Matrix a = random_matrix(d, rng);
  return 0.5 * (a + a.adjoint());
}

}  // namespace

TEST(Adjoint, ConjugateTranspose) {
  EXPECT_EQ(adjoint(identity(3)), identity(3));
  Matrix m(2, 2);
  m << 0.0, kI, 0.0, 0.0;
  Matrix expected(2, 2);
  expected << 0.0, 0.0, -kI, 0.0;
  EXPECT_EQ(adjoint(m), expected);
  std::mt19937_64 rng(1);
  const Matrix r = random_matrix(4, rng);
  EXPECT_EQ(adjoint(adjoint(r)), r);
}

TEST(Commutator, SpinAlgebra) {
  std::mt19937_64 rng(2);
  const Matrix r = random_matrix(3, rng);
  EXPECT_EQ(max_abs(commutator(r, r)), 0.0);
  for (double s : {0.5, 1.0, 1.5, 2.5}) {
    const auto ops = spin_operators(s);
    EXPECT_LT(max_abs_diff(commutator(ops.x, ops.y), kI * ops.z), 1e-12) << "I = " << s;
  }
  Matrix a = Matrix::Zero(2, 2), b = Matrix::Zero(2, 2);
  a.diagonal() << 1.0, 2.0;
  b.diagonal() << 3.0, -4.0;
  EXPECT_EQ(max_abs(commutator(a, b)), 0.0);
  const Matrix s = random_matrix(3, rng);
  EXPECT_EQ(commutator(r, s), -commutator(s, r));
}

TEST(Commutator, DimensionMismatchThrows) {
  EXPECT_THROW(commutator(identity(2), identity(3)), DimensionError);
}

TEST(MatrixExp, KnownValues) {
  EXPECT_LT(max_abs_diff(matrix_exp(zeros(3)), identity(3)), 1e-15);
  Matrix sx(2, 2);
  sx << 0.0, 1.0, 1.0, 0.0;
  EXPECT_LT(max_abs_diff(matrix_exp(-kI * std::numbers::pi * sx), -identity(2)), 1e-12);
  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << Complex(0.3, 0.0), Complex(-1.2, 0.7);
  const Matrix e = matrix_exp(d);
  EXPECT_LT(std::abs(e(0, 0) - std::exp(Complex(0.3, 0.0))) / std::abs(std::exp(Complex(0.3, 0.0))), 1e-12);
  EXPECT_LT(std::abs(e(1, 1) - std::exp(Complex(-1.2, 0.7))) / std::abs(std::exp(Complex(-1.2, 0.7))), 1e-12);
  EXPECT_EQ(e(0, 1), 0.0);
}

TEST(MatrixExp, MatchesTaylorOracle) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Index d = 2 + trial % 5;
    const Matrix h = random_hermitian(d, rng);
    EXPECT_LT(max_abs_diff(matrix_exp(-kI * h), oracle::taylor_expm(-kI * h)), 1e-11);
    const Matrix general = 0.3 * random_matrix(d, rng);
    EXPECT_LT(max_abs_diff(matrix_exp(general), oracle::taylor_expm(general)), 1e-10);
  }
}

TEST(MatrixExp, AntiHermitianIsUnitary) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix h = random_hermitian(1 + trial % 8, rng);
    const double t = 100.0 * (trial + 1);
    EXPECT_TRUE(is_unitary(matrix_exp(-kI * t * h)));
    EXPECT_LE(unitarity_defect(propagator(h, t)), 1e-8);
  }
}

TEST(TensorProduct, KroneckerConvention) {
  EXPECT_EQ(tensor_product(identity(2), identity(3)), identity(6));
  std::mt19937_64 rng(5);
  const Matrix a = random_matrix(2, rng), b = random_matrix(3, rng), c = random_matrix(2, rng);
  EXPECT_LT(std::abs(trace(tensor_product(a, b)) - trace(a) * trace(b)), 1e-12);
  EXPECT_LT(max_abs_diff(tensor_product(tensor_product(a, b), c), tensor_product(a, tensor_product(b, c))), 1e-14);
  EXPECT_EQ(tensor_product(a, b)(1 * 3 + 2, 0 * 3 + 1), a(1, 0) * b(2, 1));

  const auto iz = spin_operators(0.5).z;
  Matrix expected = Matrix::Zero(4, 4);
  expected.diagonal() << 1.0, 0.0, 0.0, -1.0;
  EXPECT_EQ(tensor_product(iz, identity(2)) + tensor_product(identity(2), iz), expected);
}

TEST(PartialTrace, ProductStatesAndTrace) {
  std::mt19937_64 rng(6);
  const Matrix r1 = oracle::random_density_matrix(2, rng);
  const Matrix r2 = oracle::random_density_matrix(3, rng);
  EXPECT_LT(max_abs_diff(partial_trace(tensor_product(r1, r2), {2, 3}, 1), r1), 1e-14);
  EXPECT_LT(max_abs_diff(partial_trace(tensor_product(r1, r2), {2, 3}, 0), r2), 1e-14);
  EXPECT_LT(max_abs_diff(partial_trace(identity(4) / 4.0, {2, 2}, 0), identity(2) / 2.0), 1e-15);
  const Matrix m = random_matrix(6, rng);
  EXPECT_LT(std::abs(trace(partial_trace(m, {2, 3}, 0)) - trace(m)), 1e-12);
  EXPECT_LT(std::abs(trace(partial_trace(m, {2, 3}, 1)) - trace(m)), 1e-12);

  const Matrix a = random_matrix(2, rng), b = random_matrix(3, rng);
  EXPECT_LT(max_abs_diff(partial_trace(tensor_product(a, b), {2, 3}, 1), a * trace(b)), 1e-12);
  // Middle subsystem of three.
  const Matrix c = random_matrix(2, rng);
  const Matrix abc = tensor_product(tensor_product(a, b), c);
  EXPECT_LT(max_abs_diff(partial_trace(abc, {2, 3, 2}, 1), tensor_product(a, c) * trace(b)), 1e-11);
}

TEST(PartialTrace, InvalidArgumentsThrow) {
  EXPECT_THROW(partial_trace(identity(6), {2, 2}, 0), DimensionError);
  EXPECT_THROW(partial_trace(identity(4), {2, 2}, 2), DimensionError);
  EXPECT_THROW(partial_trace(identity(4), {2, 2}, -1), DimensionError);
}

TEST(Expectation, Basics) {
  std::mt19937_64 rng(7);
  const Matrix o = random_hermitian(3, rng);
  EXPECT_LT(std::abs(expectation(DensityMatrix::maximally_mixed(3), o) - trace(o) / 3.0), 1e-14);
  const DensityMatrix rho(oracle::random_density_matrix(3, rng));
  EXPECT_LT(std::abs(expectation(rho, identity(3)) - 1.0), 1e-12);
  EXPECT_LT(std::abs(expectation(rho, o).imag()), 1e-10);
  EXPECT_LT(std::abs(expectation(DensityMatrix::basis_state(2, 0), spin_operators(0.5).z) - 0.5), 1e-15);
  EXPECT_THROW(expectation(rho.matrix(), identity(2)), DimensionError);
}

TEST(DensityMatrix, ValidatesInvariants) {
  Matrix not_hermitian = identity(2) / 2.0;
  not_hermitian(0, 1) = 0.1;
  EXPECT_THROW(DensityMatrix{not_hermitian}, DomainError);
  EXPECT_THROW(DensityMatrix{identity(2)}, DomainError);
  Matrix negative = Matrix::Zero(2, 2);
  negative.diagonal() << 1.5, -0.5;
  EXPECT_THROW(DensityMatrix{negative}, DomainError);
  EXPECT_NO_THROW(DensityMatrix::normalized(identity(3)));
  EXPECT_THROW(DensityMatrix::basis_state(2, 2), DomainError);
  Vector psi(2);
  psi << 1.0, kI;
  const auto pure = DensityMatrix::pure(psi);
  EXPECT_LT(std::abs(pure.matrix()(0, 1) - Complex(0.0, -0.5)), 1e-15);
}

TEST(FormatMatrix, TwelveSignificantDigits) {
  Matrix m(1, 2);
  m << Complex(1.0 / 3.0, -2.0), Complex(0.0, 0.0);
  EXPECT_EQ(format_matrix(m), "0.333333333333-2i 0+0i\n");
}
