#pragma once

// Magnus expansion of a sampled Hamiltonian trajectory H̃(t_k), t_k = k·t_P/(n-1).
// Each term carries the propagator phase: with A(t) = -i2π H̃(t) (MHz, μs),
//   Ω1 = ∫ A,  Ω2 = ½ ∫∫_{t1>t2} [A1, A2],
//   Ω3 = ⅙ ∫∫∫_{t1>t2>t3} ([A1,[A2,A3]] + [A3,[A2,A1]]),
// and U = exp(Ω1 + Ω2 + Ω3).
//
// The nested integrals are rewritten in terms of running integrals,
//   Ω2 ∝ ∫ [H(t), Q(t)],                       Q(t) = ∫_0^t H
//   Ω3 ∝ ∫ [H(t), P(t)] + [Q_T, L_T] - ∫ [H(t), L(t)],
//        P(t) = ∫_0^t [H, Q],  L(t) = ∫_0^t [H, Q_T - Q],
// so the trajectory is streamed twice (once for Q_T) and never stored.

#include <functional>
#include <span>
#include <vector>

#include "spinsim/operators.hpp"

namespace spinsim {

namespace quadrature {

/// Composite Simpson weights for n uniformly spaced samples; an odd number
/// of intervals closes with Simpson's 3/8 rule, a single interval with the
/// trapezoid rule.
inline std::vector<double> simpson_weights(std::size_t n, double h) {
  std::vector<double> w(n, 0.0);
  if (n < 2) return w;
  const std::size_t intervals = n - 1;
  if (intervals == 1) {
    w[0] = w[1] = 0.5 * h;
    return w;
  }
  const std::size_t simpson_end = intervals % 2 == 0 ? intervals : intervals - 3;
  for (std::size_t k = 0; k + 2 <= simpson_end; k += 2) {
    w[k] += h / 3.0;
    w[k + 1] += 4.0 * h / 3.0;
    w[k + 2] += h / 3.0;
  }
  if (simpson_end != intervals) {
    const std::size_t k = simpson_end;
    w[k] += 3.0 * h / 8.0;
    w[k + 1] += 9.0 * h / 8.0;
    w[k + 2] += 9.0 * h / 8.0;
    w[k + 3] += 3.0 * h / 8.0;
  }
  return w;
}

/// Streaming F_k = ∫_0^{t_k} f. Even k use composite Simpson, odd k ≥ 3 add
/// one interval with the backward three-point rule (-1, 8, 5)/12; the first
/// interval falls back to the trapezoid rule.
template <typename T>
class RunningIntegral {
 public:
  explicit RunningIntegral(double h) : h_(h) {}

  const T& push(const T& f) {
    switch (count_) {
      case 0:
        value_ = T(0.0 * f);
        break;
      case 1:
        prev_value_ = value_;
        value_ = T(0.5 * h_ * (f_prev_ + f));
        break;
      default:
        if (count_ % 2 == 0) {
          T next = T(prev_value_ + (h_ / 3.0) * (f_prev2_ + 4.0 * f_prev_ + f));
          prev_value_ = value_;
          value_ = std::move(next);
        } else {
          prev_value_ = value_;
          value_ = T(value_ + (h_ / 12.0) * (-f_prev2_ + 8.0 * f_prev_ + 5.0 * f));
        }
    }
    if (count_ >= 1) f_prev2_ = f_prev_;
    f_prev_ = f;
    ++count_;
    return value_;
  }

  const T& value() const noexcept { return value_; }

 private:
  double h_;
  std::size_t count_ = 0;
  T f_prev2_{}, f_prev_{}, value_{}, prev_value_{};
};

template <typename T>
T integrate(std::span<const T> f, double h) {
  const auto w = simpson_weights(f.size(), h);
  T acc = T(w[0] * f[0]);
  for (std::size_t k = 1; k < f.size(); ++k) acc += w[k] * f[k];
  return acc;
}

template <typename T>
std::vector<T> running_integral(std::span<const T> f, double h) {
  RunningIntegral<T> ri(h);
  std::vector<T> out;
  out.reserve(f.size());
  for (const auto& x : f) out.push_back(ri.push(x));
  return out;
}

}  // namespace quadrature

inline constexpr std::size_t kMinMagnusSamples = 3;

/// Returns H̃(t_k) for sample index k.
using TrajectorySampler = std::function<Matrix(std::size_t)>;

struct MagnusTerms {
  Matrix omega1, omega2, omega3;  // omega2/omega3 are zero when not requested

  Matrix sum() const { return omega1 + omega2 + omega3; }
};

namespace detail {

inline Matrix anti_hermitian_part(const Matrix& m) { return 0.5 * (m - m.adjoint()); }

inline void check_grid(std::size_t n, double t_p) {
  if (n < kMinMagnusSamples) {
    throw DomainError("magnus: at least 3 samples of the trajectory are required, got " +
                      std::to_string(n));
  }
  if (!(t_p >= 0.0)) throw DomainError("magnus: pulse duration must be >= 0");
}

}  // namespace detail

/// Magnus terms up to `order` (1..3) from n samples on a uniform grid over [0, t_P].
inline MagnusTerms magnus_terms(const TrajectorySampler& sample, std::size_t n, double t_p,
                                int order) {
  if (order < 1 || order > 3) throw DomainError("magnus: order must be 1, 2 or 3");
  detail::check_grid(n, t_p);
  const double h = t_p / static_cast<double>(n - 1);
  const auto w = quadrature::simpson_weights(n, h);

  // Pass 1: Ω1 and the running-integral endpoint Q_T.
  Matrix first = sample(0);
  const Index d = first.rows();
  const Matrix zero = Matrix::Zero(d, d);
  Matrix acc1 = w[0] * first;
  quadrature::RunningIntegral<Matrix> q_pass1(h);
  q_pass1.push(first);
  for (std::size_t k = 1; k < n; ++k) {
    const Matrix hk = sample(k);
    if (hk.rows() != d || hk.cols() != d) throw DimensionError("magnus: inconsistent sample dimensions");
    acc1 += w[k] * hk;
    if (order >= 3) q_pass1.push(hk);
  }

  MagnusTerms out{detail::anti_hermitian_part(Complex(0.0, -kTwoPi) * acc1), zero, zero};
  if (order == 1) return out;

  // Pass 2: Ω2, and Ω3 when requested.
  const Matrix q_total = order >= 3 ? q_pass1.value() : zero;
  quadrature::RunningIntegral<Matrix> q(h), p(h), l(h);
  Matrix acc2 = zero, acc3 = zero;
  for (std::size_t k = 0; k < n; ++k) {
    const Matrix hk = k == 0 ? first : sample(k);
    const Matrix& qk = q.push(hk);
    const Matrix c = hk * qk - qk * hk;
    acc2 += w[k] * c;
    if (order >= 3) {
      const Matrix& pk = p.push(c);
      const Matrix rest = q_total - qk;
      const Matrix& lk = l.push(Matrix(hk * rest - rest * hk));
      acc3 += w[k] * (hk * (pk - lk) - (pk - lk) * hk);
    }
  }
  const double c2 = -kTwoPi * kTwoPi;  // (-i2π)²
  out.omega2 = detail::anti_hermitian_part(0.5 * c2 * acc2);
  if (order >= 3) {
    const Matrix& l_total = l.value();
    acc3 += q_total * l_total - l_total * q_total;
    const Complex c3 = std::pow(Complex(0.0, -kTwoPi), 3);
    out.omega3 = detail::anti_hermitian_part((c3 / 6.0) * acc3);
  }
  return out;
}

namespace detail {

inline TrajectorySampler span_sampler(std::span<const Matrix> samples) {
  return [samples](std::size_t k) { return samples[k]; };
}

}  // namespace detail

/// -i2π ∫_0^{t_P} H̃(t) dt.
inline Matrix magnus_term_1(std::span<const Matrix> samples, double t_p) {
  return magnus_terms(detail::span_sampler(samples), samples.size(), t_p, 1).omega1;
}

/// (-i2π)² · ½ ∫_0^{t_P} dt1 ∫_0^{t1} dt2 [H̃(t1), H̃(t2)].
inline Matrix magnus_term_2(std::span<const Matrix> samples, double t_p) {
  return magnus_terms(detail::span_sampler(samples), samples.size(), t_p, 2).omega2;
}

/// (-i2π)³ · ⅙ ∫∫∫_{t1>t2>t3} ([H1,[H2,H3]] + [H3,[H2,H1]]).
inline Matrix magnus_term_3(std::span<const Matrix> samples, double t_p) {
  return magnus_terms(detail::span_sampler(samples), samples.size(), t_p, 3).omega3;
}

}  // namespace spinsim
