#pragma once

// Thermal initial states and density-matrix evolution under H0 + H1(t).
// Pulses are propagated with a Magnus expansion in a rotating picture
// generated by a static frame Hamiltonian G:
//   W(t) = exp(+i2πGt),  H_G(t) = W(t) (H0 + H1(t) - G) W(t)†,
//   U_lab(t_P) = exp(-i2πG t_P) · exp(Ω1 + ... + Ω_order).
// G = H0 is the interaction picture; G = -ν_RRF n̂·I_total is the rotating
// reference frame.

#include <cmath>
#include <functional>
#include <optional>
#include <string>

#include "spinsim/hamiltonians.hpp"
#include "spinsim/magnus.hpp"
#include "spinsim/operators.hpp"
#include "spinsim/spin.hpp"

namespace spinsim {

namespace constants {
inline constexpr double planck = 6.62607015e-34;     // J s
inline constexpr double boltzmann = 1.380649e-23;    // J / K
}  // namespace constants

enum class ThermalMode { exact_boltzmann, high_temperature_linearized };

struct ThermalParams {
  double temperature = 1e-4;  // K
  ThermalMode mode = ThermalMode::exact_boltzmann;

  void validate() const {
    if (!(temperature > 0.0)) throw DomainError("thermal: temperature must be > 0");
  }
  bool operator==(const ThermalParams&) const = default;
};

/// h·(1 MHz)/(k_B T): converts H/h in MHz into units of k_B T.
inline double inverse_temperature_per_mhz(double temperature) {
  return constants::planck * 1e6 / (constants::boltzmann * temperature);
}

/// exp(-hH0/k_BT)/Z, or (1 - hH0/k_BT)/Z in the linearized mode.
inline DensityMatrix canonical_density_matrix(const Matrix& h0, const ThermalParams& p) {
  p.validate();
  if (!is_hermitian(h0)) throw DomainError("canonical_density_matrix: H0 must be Hermitian");
  const double beta = inverse_temperature_per_mhz(p.temperature);
  const Index d = h0.rows();
  if (p.mode == ThermalMode::exact_boltzmann) {
    const EigenSystem es = eigensystem(h0);
    const double e_min = es.values.minCoeff();
    // Shifted by the ground energy so the largest weight is 1.
    const Matrix unnormalized =
        apply_spectral(es, [&](double e) { return Complex(std::exp(-beta * (e - e_min)), 0.0); });
    const Matrix rho = unnormalized / unnormalized.trace().real();
    return DensityMatrix(0.5 * (rho + rho.adjoint()));
  }
  const Matrix lin = Matrix::Identity(d, d) - beta * h0;
  const double min_eig = eigenvalues(lin).minCoeff();
  if (min_eig < 0.0) {
    throw DomainError("canonical_density_matrix: high-temperature approximation invalid at T = " +
                      std::to_string(p.temperature) + " K (1 - hH0/kT has eigenvalue " +
                      std::to_string(min_eig) + ")");
  }
  const Matrix rho = lin / lin.trace().real();
  return DensityMatrix(0.5 * (rho + rho.adjoint()));
}

enum class Picture { interaction, rotating_frame };

struct EvolutionSettings {
  Picture picture = Picture::interaction;
  double rrf_frequency = 0.0;  // MHz
  double rrf_theta = 0.0;
  double rrf_phi = 0.0;
  int magnus_order = 2;
  int quadrature_points_per_period = 100;

  void validate() const {
    if (magnus_order < 1 || magnus_order > 3) throw DomainError("evolution: magnus_order must be 1, 2 or 3");
    if (quadrature_points_per_period < 8) {
      throw DomainError("evolution: quadrature_points_per_period must be >= 8");
    }
    if (!std::isfinite(rrf_frequency)) throw DomainError("evolution: rrf_frequency must be finite");
  }
  bool operator==(const EvolutionSettings&) const = default;
};

/// exp(+i2πH0t) H1(t) exp(-i2πH0t).
inline Matrix to_interaction_picture(const std::function<Matrix(double)>& h1_at, const Matrix& h0,
                                     double t) {
  if (!is_hermitian(h0)) throw DomainError("to_interaction_picture: H0 must be Hermitian");
  const Matrix u = propagator(h0, t);
  return u.adjoint() * h1_at(t) * u;
}

/// exp(-i2πH0t) ρ exp(+i2πH0t).
inline DensityMatrix free_evolve(const Matrix& h0, const DensityMatrix& rho, double t) {
  if (!(t >= 0.0)) throw DomainError("free_evolve: t must be >= 0");
  if (!is_hermitian(h0)) throw DomainError("free_evolve: H0 must be Hermitian");
  if (h0.rows() != rho.dim()) throw DimensionError("free_evolve: H0 and ρ dimensions differ");
  if (t == 0.0) return rho;
  const Matrix u = propagator(h0, t);
  const Matrix out = u * rho.matrix() * u.adjoint();
  return DensityMatrix(0.5 * (out + out.adjoint()));
}

/// Hard ceiling on the quadrature grid so a mistyped duration fails fast.
inline constexpr std::size_t kMaxQuadratureSamples = 20'000'000;

/// Result of propagating through one pulse.
struct PulsePropagation {
  Matrix unitary;       // Schrödinger-picture U(t_P, 0)
  Matrix exponent;      // Ω1 + ... + Ω_order, in the frame picture
  std::size_t samples;  // quadrature grid size
};

/// Static generator G of the chosen picture.
inline Matrix frame_generator(const MultiSpinSystem& system, const Matrix& h0,
                              const EvolutionSettings& s) {
  if (s.picture == Picture::interaction) return h0;
  return -s.rrf_frequency * total_spin_component(system, direction(s.rrf_theta, s.rrf_phi));
}

/// Number of quadrature samples for a pulse of duration t_P: the integrand
/// contains frequencies up to ν_P + spread(G).
inline std::size_t quadrature_samples(double t_p, double max_frequency, int points_per_period) {
  const double intervals = std::ceil(t_p * max_frequency * points_per_period);
  if (!(intervals < static_cast<double>(kMaxQuadratureSamples))) {
    throw DomainError("evolve: pulse requires more than " + std::to_string(kMaxQuadratureSamples) +
                      " quadrature samples; shorten it or lower quadrature_points_per_period");
  }
  auto n = static_cast<std::size_t>(std::max(2.0, intervals));
  if (n % 2 == 1) ++n;
  return n + 1;
}

/// Lab-frame propagator of a pulse of duration t_P.
inline PulsePropagation pulse_propagator(const MultiSpinSystem& system, const Matrix& h0,
                                         const Pulse& pulse, double t_p,
                                         const EvolutionSettings& settings) {
  settings.validate();
  if (pulse.empty()) throw DomainError("pulse_propagator: empty pulse");
  if (!(t_p >= 0.0)) throw DomainError("pulse_propagator: t_P must be >= 0");
  const Index d = system.total_dim();
  if (h0.rows() != d || h0.cols() != d) throw DimensionError("pulse_propagator: H0 dimension mismatch");
  if (!is_hermitian(h0)) throw DomainError("pulse_propagator: H0 must be Hermitian");
  if (t_p == 0.0) return {Matrix::Identity(d, d), Matrix::Zero(d, d), 0};

  const Matrix g = frame_generator(system, h0, settings);
  const EigenSystem frame = eigensystem(g);
  const Matrix& v = frame.vectors;
  const double spread = frame.values.maxCoeff() - frame.values.minCoeff();

  // Work in the eigenbasis of G, where W(t) is diagonal.
  const PulseDrive drive(system, pulse);
  const Matrix static_part = v.adjoint() * (h0 - g) * v;
  std::vector<PulseDrive::Term> terms;
  for (const auto& term : drive.terms()) {
    terms.push_back({term.frequency, term.phase, v.adjoint() * term.coupling * v});
  }
  Eigen::MatrixXd gaps(d, d);
  for (Index a = 0; a < d; ++a) {
    for (Index b = 0; b < d; ++b) gaps(a, b) = frame.values(a) - frame.values(b);
  }

  const std::size_t n = quadrature_samples(t_p, pulse.max_frequency() + spread,
                                           settings.quadrature_points_per_period);
  const double h = t_p / static_cast<double>(n - 1);
  const TrajectorySampler sample = [&](std::size_t k) {
    const double t = h * static_cast<double>(k);
    Matrix x = static_part;
    for (const auto& term : terms) x += std::cos(kTwoPi * term.frequency * t - term.phase) * term.coupling;
    for (Index a = 0; a < d; ++a) {
      for (Index b = 0; b < d; ++b) x(a, b) *= std::polar(1.0, kTwoPi * gaps(a, b) * t);
    }
    return x;
  };

  const Matrix omega_eig = magnus_terms(sample, n, t_p, settings.magnus_order).sum();
  const Matrix omega = v * omega_eig * v.adjoint();
  const Matrix u_frame = matrix_exp(0.5 * (omega - omega.adjoint()));
  const Matrix u_lab = propagator(g, t_p) * u_frame;
  const double defect = unitarity_defect(u_lab);
  if (defect > 1e-6) {
    throw NumericalError("evolve: propagator violates unitarity (max |U†U - 1| = " +
                         std::to_string(defect) + "); the quadrature is underresolved");
  }
  return {u_lab, omega, n};
}

inline DensityMatrix apply_unitary(const Matrix& u, const DensityMatrix& rho) {
  if (u.rows() != rho.dim()) throw DimensionError("apply_unitary: dimension mismatch");
  const Matrix out = u * rho.matrix() * u.adjoint();
  return DensityMatrix(0.5 * (out + out.adjoint()));
}

/// State after a pulse of duration t_P (or after free evolution when no pulse
/// is given). The result is in the Schrödinger picture.
inline DensityMatrix evolve(const MultiSpinSystem& system, const Matrix& h0,
                            const DensityMatrix& rho0, const std::optional<Pulse>& pulse,
                            double t_p, const EvolutionSettings& settings = {}) {
  settings.validate();
  if (!(t_p >= 0.0)) throw DomainError("evolve: t_P must be >= 0");
  if (rho0.dim() != system.total_dim() || h0.rows() != system.total_dim()) {
    throw DimensionError("evolve: system, H0 and ρ dimensions differ");
  }
  if (t_p == 0.0) return rho0;
  if (!pulse || pulse->empty()) {
    if (max_abs(commutator(rho0.matrix(), h0)) <= kHermitianTolerance) return rho0;
    return free_evolve(h0, rho0, t_p);
  }
  return apply_unitary(pulse_propagator(system, h0, *pulse, t_p, settings).unitary, rho0);
}

}  // namespace spinsim
