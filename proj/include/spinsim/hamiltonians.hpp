#pragma once

// Hamiltonian terms in frequency units: every function returns H/h in MHz.
// Times are in μs, fields in tesla, gyromagnetic ratios are γ/2π in MHz/T.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "spinsim/operators.hpp"
#include "spinsim/spin.hpp"

namespace spinsim {

struct ZeemanParams {
  double B0 = 0.0;     // T
  double theta = 0.0;  // rad
  double phi = 0.0;    // rad

  void validate() const {
    if (!(B0 >= 0.0)) throw DomainError("zeeman: B0 must be >= 0");
    if (!(theta >= 0.0 && theta <= std::numbers::pi)) {
      throw DomainError("zeeman: theta must lie in [0, pi]");
    }
  }
  bool operator==(const ZeemanParams&) const = default;
};

/// z-y-z Euler angles taking the EFG principal axes to the lab frame.
struct EulerAngles {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  bool operator==(const EulerAngles&) const = default;
};

struct QuadrupoleParams {
  double coupling_constant = 0.0;  // e²qQ/h, MHz
  double eta = 0.0;
  EulerAngles efg_orientation{};

  void validate() const {
    if (!(eta >= 0.0 && eta <= 1.0)) {
      throw DomainError("quadrupole: eta must lie in [0, 1], got " + std::to_string(eta));
    }
    if (!std::isfinite(coupling_constant)) throw DomainError("quadrupole: coupling must be finite");
  }
  bool operator==(const QuadrupoleParams&) const = default;
};

/// One linearly polarized RF component, field 2·B1·cos(2π ν t - φ) along
/// the axis (axis_theta, axis_phi).
struct PulseComponent {
  double B1 = 0.0;          // T
  double frequency = 0.0;   // MHz
  double phase = 0.0;       // rad
  double axis_theta = std::numbers::pi / 2;
  double axis_phi = 0.0;

  void validate() const {
    if (!(B1 >= 0.0)) throw DomainError("pulse: B1 must be >= 0");
    if (!(frequency >= 0.0)) throw DomainError("pulse: frequency must be >= 0");
  }
  bool operator==(const PulseComponent&) const = default;
};

/// Superposition of linear components: one entry is a linearly polarized
/// pulse, two orthogonal entries with a ±π/2 relative phase are circular.
class Pulse {
 public:
  Pulse() = default;
  explicit Pulse(std::vector<PulseComponent> components) : components_(std::move(components)) {
    if (components_.empty()) throw DomainError("pulse: at least one component is required");
    for (const auto& c : components_) c.validate();
  }

  static Pulse linear(double B1, double frequency, double phase, double axis_theta,
                      double axis_phi) {
    return Pulse({PulseComponent{B1, frequency, phase, axis_theta, axis_phi}});
  }

  const std::vector<PulseComponent>& components() const noexcept { return components_; }
  bool empty() const noexcept { return components_.empty(); }

  double max_frequency() const {
    double f = 0.0;
    for (const auto& c : components_) f = std::max(f, c.frequency);
    return f;
  }

  /// The same field started t0 μs later on a common clock:
  /// cos(2πν(t0 + t) - φ) = cos(2πνt - (φ - 2πνt0)).
  Pulse delayed(double t0) const {
    Pulse out = *this;
    for (auto& c : out.components_) c.phase = std::remainder(c.phase - kTwoPi * c.frequency * t0, kTwoPi);
    return out;
  }

  bool operator==(const Pulse&) const = default;

 private:
  std::vector<PulseComponent> components_;
};

enum class Handedness { sigma_plus, sigma_minus };

/// Two orthogonal linear components in the plane normal to
/// (normal_theta, normal_phi), relative phase +π/2 (σ+) or -π/2 (σ-).
inline Pulse make_circular_pulse(Handedness handedness, double B1, double frequency,
                                 double base_phase = 0.0, double normal_theta = 0.0,
                                 double normal_phi = 0.0) {
  // e1 = n̂(θ+π/2, φ), e2 = n̂ × e1 = n̂(π/2, φ+π/2).
  const double relative = handedness == Handedness::sigma_plus ? std::numbers::pi / 2
                                                               : -std::numbers::pi / 2;
  return Pulse({
      PulseComponent{B1, frequency, base_phase, normal_theta + std::numbers::pi / 2, normal_phi},
      PulseComponent{B1, frequency, base_phase + relative, std::numbers::pi / 2,
                     normal_phi + std::numbers::pi / 2},
  });
}

/// exp(-iαIz) exp(-iβIy) exp(-iγIz).
inline Matrix euler_rotation(const SpinOperators& ops, const EulerAngles& e) {
  return hermitian_exp(ops.z, Complex(0.0, -e.alpha)) * hermitian_exp(ops.y, Complex(0.0, -e.beta)) *
         hermitian_exp(ops.z, Complex(0.0, -e.gamma));
}

/// -(γ/2π) B0 (n̂ · I).
inline Matrix h_zeeman(const NuclearSpin& spin, const ZeemanParams& p) {
  p.validate();
  const auto ops = spin.operators();
  const Eigen::Vector3d n = direction(p.theta, p.phi);
  return (-spin.gyro_ratio_over_2pi() * p.B0) * (n.x() * ops.x + n.y() * ops.y + n.z() * ops.z);
}

/// Zeeman term of every spin in a common static field.
inline Matrix h_zeeman(const MultiSpinSystem& system, const ZeemanParams& p) {
  p.validate();
  return weighted_spin_component(system, direction(p.theta, p.phi), [&](std::size_t site) {
    return -system.spin(site).gyro_ratio_over_2pi() * p.B0;
  });
}

/// e²qQ/(4I(2I-1)h) · (3Iz² - I(I+1) + η/2 (I+² + I-²)) in the EFG principal
/// frame, rotated into the lab frame. Zero for I = 1/2.
inline Matrix h_quadrupole(const NuclearSpin& spin, const QuadrupoleParams& p) {
  p.validate();
  const Index d = spin.dim();
  if (spin.twice_quantum_number() < 2) return Matrix::Zero(d, d);
  const double s = spin.quantum_number();
  const auto ops = spin.operators();
  const double prefactor = p.coupling_constant / (4.0 * s * (2.0 * s - 1.0));
  const Matrix principal =
      prefactor * (3.0 * ops.z * ops.z - s * (s + 1.0) * Matrix::Identity(d, d) +
                   0.5 * p.eta * (ops.plus * ops.plus + ops.minus * ops.minus));
  const Matrix r = euler_rotation(ops, p.efg_orientation);
  const Matrix lab = r * principal * r.adjoint();
  return 0.5 * (lab + lab.adjoint());
}

inline Matrix h_quadrupole(const MultiSpinSystem& system, std::size_t site,
                           const QuadrupoleParams& p) {
  return lift_operator(system, site, h_quadrupole(system.spin(site), p));
}

/// Strictly upper triangular N×N matrix of J couplings in MHz.
class JCouplingMatrix {
 public:
  JCouplingMatrix() = default;
  explicit JCouplingMatrix(Eigen::MatrixXd values) : values_(std::move(values)) {
    if (values_.rows() != values_.cols()) throw DimensionError("j_coupling: matrix must be square");
    for (Index i = 0; i < values_.rows(); ++i) {
      for (Index j = 0; j <= i; ++j) {
        if (values_(i, j) != 0.0) {
          throw DomainError("j_coupling: matrix must be strictly upper triangular (entry " +
                            std::to_string(i) + "," + std::to_string(j) + " is nonzero)");
        }
      }
    }
    if (!values_.allFinite()) throw DomainError("j_coupling: entries must be finite");
  }

  static JCouplingMatrix pair(double j) {
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(2, 2);
    v(0, 1) = j;
    return JCouplingMatrix(v);
  }

  const Eigen::MatrixXd& values() const noexcept { return values_; }
  Index size() const noexcept { return values_.rows(); }

  bool operator==(const JCouplingMatrix& o) const {
    return values_.rows() == o.values_.rows() && values_.cols() == o.values_.cols() &&
           values_ == o.values_;
  }

 private:
  Eigen::MatrixXd values_;
};

/// Σ_{i<j} J_ij Iz_i Iz_j.
inline Matrix h_j_coupling(const MultiSpinSystem& system, const JCouplingMatrix& j) {
  if (j.size() != static_cast<Index>(system.size())) {
    throw DimensionError("h_j_coupling: coupling matrix is " + std::to_string(j.size()) + "x" +
                         std::to_string(j.size()) + " but the system has " +
                         std::to_string(system.size()) + " spins");
  }
  const Index d = system.total_dim();
  Matrix out = Matrix::Zero(d, d);
  std::vector<Matrix> iz;
  for (std::size_t s = 0; s < system.size(); ++s) {
    iz.push_back(lift_operator(system, s, system.spin(s).operators().z));
  }
  for (std::size_t a = 0; a < system.size(); ++a) {
    for (std::size_t b = a + 1; b < system.size(); ++b) {
      const double jab = j.values()(static_cast<Index>(a), static_cast<Index>(b));
      if (jab != 0.0) out += jab * iz[a] * iz[b];
    }
  }
  return out;
}

/// Pulse Hamiltonian with the per-component spin operators precomputed;
/// at(t) = Σ_c cos(2πν_c t - φ_c) · coupling_c.
class PulseDrive {
 public:
  PulseDrive(const MultiSpinSystem& system, const Pulse& pulse) {
    for (const auto& c : pulse.components()) {
      const Eigen::Vector3d n = direction(c.axis_theta, c.axis_phi);
      terms_.push_back({c.frequency, c.phase,
                        weighted_spin_component(system, n, [&](std::size_t site) {
                          return -system.spin(site).gyro_ratio_over_2pi() * 2.0 * c.B1;
                        })});
    }
    dim_ = system.total_dim();
  }

  Matrix at(double t) const {
    Matrix out = Matrix::Zero(dim_, dim_);
    for (const auto& term : terms_) {
      out += std::cos(kTwoPi * term.frequency * t - term.phase) * term.coupling;
    }
    return out;
  }

  struct Term {
    double frequency;
    double phase;
    Matrix coupling;
  };
  const std::vector<Term>& terms() const noexcept { return terms_; }

 private:
  std::vector<Term> terms_;
  Index dim_ = 0;
};

/// Σ_c -(γ/2π) 2B1 cos(2πν t - φ) (n̂_c · I), summed over spins with their own γ.
inline Matrix h_pulse_at(const MultiSpinSystem& system, const Pulse& pulse, double t) {
  if (t < 0.0) throw DomainError("h_pulse_at: t must be >= 0");
  return PulseDrive(system, pulse).at(t);
}

}  // namespace spinsim
