#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "spinsim/magnus.hpp"
#include "spinsim/spin.hpp"

using namespace spinsim;

namespace {

// H(t) = Σ_p C_p t^p. Simplex integrals of monomials are done by hand:
// ∫_{T>t1>t2>t3>0} t1^a t2^b t3^c = T^{a+b+c+3} / ((c+1)(b+c+2)(a+b+c+3)).
struct Polynomial {
  std::vector<Matrix> coeffs;

  Matrix at(double t) const {
    Matrix out = Matrix::Zero(coeffs[0].rows(), coeffs[0].cols());
    double tp = 1.0;
    for (const auto& c : coeffs) {
      out += tp * c;
      tp *= t;
    }
    return out;
  }
};

Matrix exact_omega2(const Polynomial& h, double T) {
  const Complex a = Complex(0.0, -kTwoPi);
  Matrix out = Matrix::Zero(h.coeffs[0].rows(), h.coeffs[0].cols());
  for (std::size_t p = 0; p < h.coeffs.size(); ++p) {
    for (std::size_t q = 0; q < h.coeffs.size(); ++q) {
      const double w = std::pow(T, p + q + 2) / ((q + 1.0) * (p + q + 2.0));
      out += w * commutator(h.coeffs[p], h.coeffs[q]);
    }
  }
  return 0.5 * a * a * out;
}

Matrix exact_omega3(const Polynomial& h, double T) {
  const Complex a = Complex(0.0, -kTwoPi);
  const auto& c = h.coeffs;
  Matrix out = Matrix::Zero(c[0].rows(), c[0].cols());
  for (std::size_t p = 0; p < c.size(); ++p) {
    for (std::size_t q = 0; q < c.size(); ++q) {
      for (std::size_t r = 0; r < c.size(); ++r) {
        const double w = std::pow(T, p + q + r + 3) / ((r + 1.0) * (q + r + 2.0) * (p + q + r + 3.0));
        out += w * (commutator(c[p], commutator(c[q], c[r])) + commutator(c[r], commutator(c[q], c[p])));
      }
    }
  }
  return a * a * a / 6.0 * out;
}

std::vector<Matrix> sample(const Polynomial& h, double T, std::size_t n) {
  std::vector<Matrix> out;
  for (std::size_t k = 0; k < n; ++k) out.push_back(h.at(T * k / (n - 1.0)));
  return out;
}

Polynomial random_polynomial(int degree, Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Polynomial h;
  for (int p = 0; p <= degree; ++p) {
    Matrix m(d, d);
    for (Index i = 0; i < d; ++i) {
      for (Index j = 0; j < d; ++j) m(i, j) = Complex(g(rng), g(rng));
    }
    h.coeffs.push_back(0.5 * (m + m.adjoint()));
  }
  return h;
}

}  // namespace

TEST(Quadrature, SimpsonWeightsIntegrateCubicsExactly) {
  for (std::size_t n : {2u, 3u, 4u, 5u, 6u, 7u, 10u, 11u}) {
    const double T = 1.7;
    const double h = T / (n - 1);
    const auto w = quadrature::simpson_weights(n, h);
    double sum = 0.0, cubic = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double t = k * h;
      sum += w[k];
      cubic += w[k] * (1.0 - 2.0 * t + 3.0 * t * t * t);
    }
    EXPECT_NEAR(sum, T, 1e-14) << n;
    if (n > 2) EXPECT_NEAR(cubic, T - T * T + 0.75 * std::pow(T, 4), 1e-12) << n;
  }
  EXPECT_TRUE(quadrature::simpson_weights(1, 1.0)[0] == 0.0);
}

TEST(Quadrature, RunningIntegral) {
  const double h = 0.1;
  std::vector<double> lin, quad;
  for (int k = 0; k < 12; ++k) {
    lin.push_back(2.0 + 3.0 * k * h);
    quad.push_back(std::pow(k * h, 2));
  }
  const auto L = quadrature::running_integral<double>(lin, h);
  const auto Q = quadrature::running_integral<double>(quad, h);
  for (int k = 0; k < 12; ++k) {
    const double t = k * h;
    EXPECT_NEAR(L[k], 2.0 * t + 1.5 * t * t, 1e-13) << k;
    // The first interval is a trapezoid; from k = 2 on the rules are exact for quadratics.
    if (k != 1) EXPECT_NEAR(Q[k], t * t * t / 3.0, 1e-13) << k;
  }
  EXPECT_NEAR(quadrature::integrate<double>(quad, h), std::pow(1.1, 3) / 3.0, 1e-13);
}

TEST(Magnus, ConstantHamiltonian) {
  const auto ops = spin_operators(1.0);
  const Matrix h = 0.3 * ops.x + 1.1 * ops.z;
  const std::vector<Matrix> s(9, h);
  EXPECT_LT(max_abs_diff(magnus_term_1(s, 2.0), Complex(0.0, -kTwoPi * 2.0) * h), 1e-13);
  EXPECT_LT(max_abs(magnus_term_2(s, 2.0)), 1e-13);
  EXPECT_LT(max_abs(magnus_term_3(s, 2.0)), 1e-12);
}

TEST(Magnus, LinearTrajectoryMatchesClosedForm) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    const Polynomial h = random_polynomial(1, 2 + trial % 3, rng);
    const double T = 0.3;
    for (std::size_t n : {3u, 4u, 9u, 40u}) {
      const auto s = sample(h, T, n);
      const MagnusTerms m = magnus_terms(detail::span_sampler(s), n, T, 3);
      EXPECT_TRUE(is_anti_hermitian(m.omega1, 1e-12));
      EXPECT_TRUE(is_anti_hermitian(m.omega2, 1e-12));
      EXPECT_TRUE(is_anti_hermitian(m.omega3, 1e-12));
      const Matrix exact1 = Complex(0.0, -kTwoPi) * (T * h.coeffs[0] + 0.5 * T * T * h.coeffs[1]);
      EXPECT_LT(max_abs_diff(m.omega1, exact1), 1e-12);
      EXPECT_LT(max_abs_diff(m.omega2, exact_omega2(h, T)), 1e-11) << n;
      if (n >= 40) EXPECT_LT(max_abs_diff(m.omega3, exact_omega3(h, T)), 1e-4 * max_abs(exact_omega3(h, T))) << n;
    }
  }
}

TEST(Magnus, CubicTrajectoryConverges) {
  std::mt19937_64 rng(22);
  const Polynomial h = random_polynomial(3, 3, rng);
  const double T = 0.25;
  const Matrix o2 = exact_omega2(h, T), o3 = exact_omega3(h, T);
  double prev2 = 1e300, prev3 = 1e300;
  for (std::size_t n : {5u, 9u, 17u, 33u, 65u}) {
    const auto s = sample(h, T, n);
    const double e2 = max_abs_diff(magnus_term_2(s, T), o2);
    const double e3 = max_abs_diff(magnus_term_3(s, T), o3);
    EXPECT_LT(e2, prev2 * 0.5 + 1e-13) << n;
    EXPECT_LT(e3, prev3 * 0.5 + 1e-13) << n;
    prev2 = e2;
    prev3 = e3;
  }
  EXPECT_LT(prev2, 1e-6 * max_abs(o2));
  EXPECT_LT(prev3, 1e-5 * max_abs(o3));
}

TEST(Magnus, FullPeriodCosineIntegratesToZero) {
  const Matrix x = spin_operators(1.5).x;
  const double nu = 3.0;
  std::vector<Matrix> s;
  const std::size_t n = 201;
  for (std::size_t k = 0; k < n; ++k) s.push_back(std::cos(kTwoPi * nu * k / (nu * (n - 1.0))) * x);
  EXPECT_LT(max_abs(magnus_term_1(s, 1.0 / nu)), 1e-12);
}

TEST(Magnus, TransverseTrajectorySecondTermAlongZ) {
  // H = a(t)Ix + b(t)Iy gives [H1, H2] = i(a1 b2 - b1 a2) Iz.
  const auto ops = spin_operators(0.5);
  const auto a = [](double t) { return 0.4 + std::sin(3.0 * t); };
  const auto b = [](double t) { return std::cos(5.0 * t) - 0.2 * t; };
  const double T = 0.8;
  const std::size_t n = 801;
  std::vector<Matrix> s;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = T * k / (n - 1.0);
    s.push_back(a(t) * ops.x + b(t) * ops.y);
  }
  // Scalar double integral by a fine midpoint sum over the simplex, Richardson-extrapolated.
  const auto simplex = [&](int m) {
    const double h = T / m;
    double acc = 0.0;
    for (int i = 0; i < m; ++i) {
      const double t1 = (i + 0.5) * h;
      for (int j = 0; j < i; ++j) {
        const double t2 = (j + 0.5) * h;
        acc += a(t1) * b(t2) - b(t1) * a(t2);
      }
    }
    return acc * h * h;
  };
  const double integral = (4.0 * simplex(4000) - simplex(2000)) / 3.0;
  const Matrix expected = 0.5 * std::pow(Complex(0.0, -kTwoPi), 2) * Complex(0.0, integral) * ops.z;
  EXPECT_LT(max_abs_diff(magnus_term_2(s, T), expected), 1e-6 * max_abs(expected));
}

TEST(Magnus, ExpansionApproachesTimeOrderedProduct) {
  const auto ops = spin_operators(0.5);
  const double nu = 1.0;
  const auto h = [&](double t) -> Matrix { return 0.1 * std::cos(kTwoPi * nu * t) * ops.x + 0.05 * t * ops.z; };
  const double T = 1.0;
  const Matrix exact = oracle::time_ordered_product(h, T, 20000);
  std::vector<Matrix> s;
  const std::size_t n = 401;
  for (std::size_t k = 0; k < n; ++k) s.push_back(h(T * k / (n - 1.0)));
  double prev = 1e300;
  for (int order = 1; order <= 3; ++order) {
    const Matrix u = matrix_exp(magnus_terms(detail::span_sampler(s), n, T, order).sum());
    const double err = oracle::operator_norm(u - exact);
    EXPECT_LT(err, prev) << order;
    prev = err;
  }
  EXPECT_LT(prev, 1e-5);
}

TEST(Magnus, Errors) {
  const std::vector<Matrix> two(2, identity(2));
  EXPECT_THROW(magnus_term_1(two, 1.0), DomainError);
  const std::vector<Matrix> three(3, identity(2));
  EXPECT_THROW(magnus_terms(detail::span_sampler(three), 3, 1.0, 4), DomainError);
  EXPECT_THROW(magnus_terms(detail::span_sampler(three), 3, 1.0, 0), DomainError);
  EXPECT_THROW(magnus_term_1(three, -1.0), DomainError);
  const std::vector<Matrix> mixed{identity(2), identity(3), identity(2)};
  EXPECT_THROW(magnus_term_1(mixed, 1.0), DimensionError);
}
