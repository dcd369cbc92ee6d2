#pragma once

// Experiment recipes: pulse calibration, pulse sequences, pseudopure-state
// preparation by temporal averaging, and NQR / NMR CNOT gates.

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "spinsim/evolution.hpp"
#include "spinsim/hamiltonians.hpp"
#include "spinsim/operators.hpp"
#include "spinsim/spin.hpp"

namespace spinsim {

/// √(I(I+1) - m(m+1)), the I+ matrix element of the m → m+1 transition.
inline double rotation_factor_alpha(double quantum_number, double m) {
  const NuclearSpin spin(quantum_number, 1.0);
  const double s = spin.quantum_number();
  if (m < -s - 1e-9 || m > s - 1.0 + 1e-9) {
    throw DomainError("rotation_factor_alpha: m = " + std::to_string(m) + " outside [-I, I-1]");
  }
  spin.index_of(m);  // rejects non-half-integer offsets
  return std::sqrt(s * (s + 1.0) - m * (m + 1.0));
}

/// Duration solving γ α B1 t_P = angle, with B1 the co-rotating field
/// amplitude (B1 for a linear pulse of field 2B1 cos, 2B1 for a circular one).
inline double pulse_duration_for_angle(double gyro_ratio_over_2pi, double B1, double alpha,
                                       double angle) {
  if (!(B1 > 0.0)) throw DomainError("pulse_duration_for_angle: B1 must be > 0");
  if (!(alpha > 0.0)) throw DomainError("pulse_duration_for_angle: alpha must be > 0");
  if (!(gyro_ratio_over_2pi > 0.0)) {
    throw DomainError("pulse_duration_for_angle: gyromagnetic ratio must be > 0");
  }
  if (!(angle > 0.0)) throw DomainError("pulse_duration_for_angle: angle must be > 0");
  return angle / (kTwoPi * gyro_ratio_over_2pi * alpha * B1);
}

/// Co-rotating amplitude of a pulse built by make_circular_pulse(…, B1, …).
inline double circular_co_rotating_amplitude(double B1) { return 2.0 * B1; }

struct PulseSequenceStep {
  enum class Kind { pulse, free_evolution, z_rotation };

  Kind kind = Kind::free_evolution;
  Pulse pulse{};          // kind == pulse
  double duration = 0.0;  // μs; zero for z_rotation
  std::size_t site = 0;   // kind == z_rotation
  double angle = 0.0;     // kind == z_rotation, rad

  static PulseSequenceStep apply_pulse(Pulse p, double duration) {
    if (!(duration >= 0.0)) throw DomainError("sequence step: duration must be >= 0");
    return {Kind::pulse, std::move(p), duration, 0, 0.0};
  }
  static PulseSequenceStep free(double duration) {
    if (!(duration >= 0.0)) throw DomainError("sequence step: duration must be >= 0");
    return {Kind::free_evolution, Pulse{}, duration, 0, 0.0};
  }
  /// Instantaneous exp(-i·angle·Iz_site).
  static PulseSequenceStep z_rotation(std::size_t site, double angle) {
    return {Kind::z_rotation, Pulse{}, 0.0, site, angle};
  }
};

/// exp(-i θ Iz) on one site.
inline Matrix z_rotation_unitary(const MultiSpinSystem& system, std::size_t site, double angle) {
  return lift_operator(system, site,
                       hermitian_exp(system.spin(site).operators().z, Complex(0.0, -angle)));
}

/// Applies the steps in order. Pulses share one phase-coherent clock that
/// starts at `clock_start`: a pulse starting at time t0 is the field
/// cos(2πν(t0 + t) - φ).
inline DensityMatrix run_sequence(const MultiSpinSystem& system, const Matrix& h0,
                                  const DensityMatrix& rho0,
                                  const std::vector<PulseSequenceStep>& steps,
                                  const EvolutionSettings& settings = {}, double clock_start = 0.0) {
  DensityMatrix rho = rho0;
  double clock = clock_start;
  for (const auto& step : steps) {
    switch (step.kind) {
      case PulseSequenceStep::Kind::pulse:
        rho = evolve(system, h0, rho, step.pulse.delayed(clock), step.duration, settings);
        break;
      case PulseSequenceStep::Kind::free_evolution:
        rho = free_evolve(h0, rho, step.duration);
        break;
      case PulseSequenceStep::Kind::z_rotation:
        rho = apply_unitary(z_rotation_unitary(system, step.site, step.angle), rho);
        break;
    }
    clock += step.duration;
  }
  return rho;
}

/// Two-qubit computational labels mapped onto the 4-dimensional basis:
/// |00⟩,|01⟩,|10⟩,|11⟩ ↔ |3/2⟩,|1/2⟩,|-1/2⟩,|-3/2⟩ for one spin 3/2, and
/// |ab⟩ ↔ |a⟩⊗|b⟩ with |0⟩ ≡ |1/2⟩ for two spins 1/2. Both reduce to the
/// binary value of the label as the basis index.
struct QubitBasisMap {
  static constexpr std::array<const char*, 4> labels{"00", "01", "10", "11"};

  static Index index_of(const std::string& label) {
    for (std::size_t k = 0; k < labels.size(); ++k) {
      if (label == labels[k]) return static_cast<Index>(k);
    }
    throw DomainError("unknown computational basis label '" + label + "' (expected 00, 01, 10 or 11)");
  }
  static std::string label_of(Index k) {
    if (k < 0 || k >= 4) throw DomainError("computational basis index out of range");
    return labels[static_cast<std::size_t>(k)];
  }
  /// Magnetic quantum number of a label in the spin-3/2 encoding.
  static double spin_three_halves_m(const std::string& label) { return 1.5 - static_cast<double>(index_of(label)); }
};

/// A circularly polarized pulse that exchanges the populations of |m_low⟩
/// and |m_low + Δm⟩ (Δm = 1 single photon, Δm = 2 two photons).
struct ExchangePulse {
  Handedness handedness;
  double frequency;  // MHz
  double duration;   // μs
  double m_low;
  int delta_m;
  double exchanged_fraction = 1.0;  // measured for calibrated pulses

  Pulse pulse(double B1) const { return make_circular_pulse(handedness, B1, frequency); }
};

namespace detail {

inline void require_quadrupolar_three_halves(const MultiSpinSystem& system, const Matrix& h0,
                                             const char* what) {
  if (system.size() != 1 || system.spin(0).twice_quantum_number() != 3) {
    throw DomainError(std::string(what) + ": requires a single spin-3/2 system");
  }
  if (h0.rows() != 4) throw DimensionError(std::string(what) + ": H0 must be 4x4");
  Matrix off = h0;
  off.diagonal().setZero();
  if (max_abs(off) > 1e-9 * std::max(1.0, max_abs(h0))) {
    throw DomainError(std::string(what) +
                      ": H0 must be diagonal in the Iz basis (axial EFG along the quantization axis)");
  }
}

/// Resonant handedness and frequency for the Δm transition starting at m_low:
/// σ+ is resonant when E(m_low + Δm) - E(m_low) = +Δm·ν, σ- when it is -Δm·ν.
inline std::pair<Handedness, double> resonance(const NuclearSpin& spin, const Matrix& h0, double m_low,
                                               int delta_m) {
  const Index hi = spin.index_of(m_low + delta_m);
  const Index lo = spin.index_of(m_low);
  const double gap = h0(hi, hi).real() - h0(lo, lo).real();
  if (gap == 0.0) throw DomainError("transition has zero frequency; no resonant circular pulse exists");
  return {gap > 0.0 ? Handedness::sigma_plus : Handedness::sigma_minus, std::abs(gap) / delta_m};
}

inline double exchanged_fraction(const DensityMatrix& before, const DensityMatrix& after, Index from,
                                 Index to) {
  const double initial_gap = before.population(from) - before.population(to);
  if (initial_gap == 0.0) return 0.0;
  return (after.population(to) - before.population(to)) / initial_gap;
}

}  // namespace detail

/// Single-photon π pulse exchanging |m⟩ and |m+1⟩ of a spin-3/2 quadrupolar
/// nucleus; the duration follows from γαB1t = π with the circular
/// co-rotating amplitude.
inline ExchangePulse single_photon_exchange(const MultiSpinSystem& system, const Matrix& h0,
                                            double m_low, double B1) {
  detail::require_quadrupolar_three_halves(system, h0, "single_photon_exchange");
  const NuclearSpin& spin = system.spin(0);
  const auto [hand, freq] = detail::resonance(spin, h0, m_low, 1);
  const double alpha = rotation_factor_alpha(spin.quantum_number(), m_low);
  const double t = pulse_duration_for_angle(spin.gyro_ratio_over_2pi(), circular_co_rotating_amplitude(B1),
                                            alpha, std::numbers::pi);
  return {hand, freq, t, m_low, 1};
}

/// Grid for the two-photon duration scan: `scan_points` chunk boundaries
/// over (0, scan_max], then golden-section refinement around the first
/// local maximum of the exchanged fraction.
struct TwoPhotonScan {
  double scan_max = 40.0;  // μs
  std::size_t scan_points = 80;
  int refine_iterations = 14;
  bool operator==(const TwoPhotonScan&) const = default;
};

/// Two-photon (Δm = 2) exchange at half the level spacing, duration
/// calibrated numerically starting from `reference` (typically thermal).
inline ExchangePulse two_photon_exchange(const MultiSpinSystem& system, const Matrix& h0,
                                         const DensityMatrix& reference, double m_low, double B1,
                                         const EvolutionSettings& settings, const TwoPhotonScan& scan = {}) {
  detail::require_quadrupolar_three_halves(system, h0, "two_photon_exchange");
  const NuclearSpin& spin = system.spin(0);
  const auto [hand, freq] = detail::resonance(spin, h0, m_low, 2);
  const Pulse pulse = make_circular_pulse(hand, B1, freq);
  const Index from = spin.index_of(m_low);
  const Index to = spin.index_of(m_low + 2);
  if (scan.scan_points < 3 || !(scan.scan_max > 0.0)) throw DomainError("two_photon_exchange: invalid scan grid");

  // Coarse scan: chain chunk propagators on the common clock.
  const double step = scan.scan_max / static_cast<double>(scan.scan_points);
  std::vector<double> fraction(scan.scan_points + 1, 0.0);
  Matrix u = Matrix::Identity(4, 4);
  std::optional<std::size_t> best;
  for (std::size_t k = 1; k <= scan.scan_points; ++k) {
    const double t0 = step * static_cast<double>(k - 1);
    u = pulse_propagator(system, h0, pulse.delayed(t0), step, settings).unitary * u;
    fraction[k] = detail::exchanged_fraction(reference, apply_unitary(u, reference), from, to);
    if (k >= 2 && fraction[k - 1] > 0.5 && fraction[k - 1] >= fraction[k] && fraction[k - 1] >= fraction[k - 2]) {
      best = k - 1;
      break;
    }
  }
  if (!best) {
    throw DomainError("two_photon_exchange: no population exchange maximum within " +
                      std::to_string(scan.scan_max) + " us; increase B1 or the scan range");
  }

  auto measure = [&](double t) {
    return detail::exchanged_fraction(reference, evolve(system, h0, reference, pulse, t, settings), from, to);
  };
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = step * static_cast<double>(*best - 1);
  double hi = step * static_cast<double>(*best + 1);
  double x1 = hi - inv_phi * (hi - lo), x2 = lo + inv_phi * (hi - lo);
  double f1 = measure(x1), f2 = measure(x2);
  for (int it = 0; it < scan.refine_iterations; ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = measure(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = measure(x1);
    }
  }
  const double t_best = f1 >= f2 ? x1 : x2;
  return {hand, freq, t_best, m_low, 2, std::max(f1, f2)};
}

struct PseudopureParams {
  double B1_single = 0.01;      // T, single-photon pulse
  double B1_two_photon = 0.07;  // T, two-photon pulse
  ThermalParams thermal{};
  TwoPhotonScan scan{};
  bool operator==(const PseudopureParams&) const = default;
};

struct PseudopureResult {
  DensityMatrix state;
  DensityMatrix thermal;
  DensityMatrix after_single;
  DensityMatrix after_two_photon;
  ExchangePulse single;
  ExchangePulse two_photon;
};

/// Lower magnetic quantum numbers of the (single-photon, two-photon) pairs
/// whose exchanges, averaged with the thermal state, isolate each target.
inline std::pair<double, double> pseudopure_pairs(Index target) {
  switch (target) {
    case 0: return {-1.5, -1.5};  // |-3/2⟩↔|-1/2⟩, |-3/2⟩↔|1/2⟩
    case 1: return {-1.5, -0.5};  // |-3/2⟩↔|-1/2⟩, |-1/2⟩↔|3/2⟩
    case 2: return {0.5, -1.5};   // |1/2⟩↔|3/2⟩,   |-3/2⟩↔|1/2⟩
    case 3: return {0.5, -0.5};   // |1/2⟩↔|3/2⟩,   |-1/2⟩↔|3/2⟩
    default: throw DomainError("pseudopure: target index out of range");
  }
}

/// Temporal average of (1) the thermal state, (2) the thermal state after a
/// single-photon exchange and (3) after a two-photon exchange.
inline PseudopureResult pseudopure_temporal_average(const MultiSpinSystem& system, const Matrix& h0,
                                                    const std::string& target,
                                                    const PseudopureParams& params = {},
                                                    const EvolutionSettings& settings = {}) {
  detail::require_quadrupolar_three_halves(system, h0, "pseudopure_temporal_average");
  const Index idx = QubitBasisMap::index_of(target);
  const auto [m_single, m_double] = pseudopure_pairs(idx);

  const DensityMatrix thermal = canonical_density_matrix(h0, params.thermal);
  const ExchangePulse single = single_photon_exchange(system, h0, m_single, params.B1_single);
  const DensityMatrix after_single =
      evolve(system, h0, thermal, single.pulse(params.B1_single), single.duration, settings);
  const ExchangePulse two = two_photon_exchange(system, h0, thermal, m_double, params.B1_two_photon,
                                                settings, params.scan);
  const DensityMatrix after_two =
      evolve(system, h0, thermal, two.pulse(params.B1_two_photon), two.duration, settings);

  const Matrix avg = (thermal.matrix() + after_single.matrix() + after_two.matrix()) / 3.0;
  return {DensityMatrix::normalized(0.5 * (avg + avg.adjoint())), thermal, after_single, after_two,
          single, two};
}

/// Decomposition ρ ≈ a·1 + b|ψ⟩⟨ψ|: `a` is the mean of the three closest
/// eigenvalues, `residual` the second-largest |eigenvalue| of ρ - a·1
/// relative to the largest.
struct PseudopureStructure {
  double identity_weight;
  double pure_weight;
  Vector state;
  double residual;
};

inline PseudopureStructure pseudopure_structure(const DensityMatrix& rho) {
  const EigenSystem es = eigensystem(rho.matrix());
  const Index d = es.values.size();
  if (d < 2) throw DomainError("pseudopure_structure: dimension must be >= 2");
  // Distinct eigenvalue sits at one end of the sorted spectrum.
  const double spread_low = es.values(d - 2) - es.values(0);
  const double spread_high = es.values(d - 1) - es.values(1);
  const bool distinct_is_top = spread_low <= spread_high;
  const Index first = distinct_is_top ? 0 : 1;
  const double a = es.values.segment(first, d - 1).mean();
  const Index distinct = distinct_is_top ? d - 1 : 0;

  std::vector<double> mags;
  for (Index k = 0; k < d; ++k) mags.push_back(std::abs(es.values(k) - a));
  std::sort(mags.begin(), mags.end(), std::greater<>());
  return {a, es.values(distinct) - a, es.vectors.col(distinct),
          mags[0] > 0.0 ? mags[1] / mags[0] : 0.0};
}

/// σ- π pulse selective on |-1/2⟩ ↔ |-3/2⟩: CNOT with the first qubit as
/// control in the spin-3/2 encoding.
inline DensityMatrix cnot_nqr(const MultiSpinSystem& system, const Matrix& h0, const DensityMatrix& rho_in,
                              double B1, const EvolutionSettings& settings = {}) {
  const ExchangePulse p = single_photon_exchange(system, h0, -1.5, B1);
  return evolve(system, h0, rho_in, p.pulse(B1), p.duration, settings);
}

struct NmrCnotParams {
  double B1 = 0.1;  // T, linear pulse amplitude
  /// Minimum Larmor separation in units of max(Rabi frequency, J).
  double selectivity_margin = 10.0;
  bool operator==(const NmrCnotParams&) const = default;
};

/// Resonant linear pulse rotating `site` by `angle` about the in-plane axis
/// at azimuth `axis_phi` of its rotating frame. With H0 = -ν0 Iz (ν0 > 0)
/// a pulse of phase φ rotates by -γB1t about n̂(φ), so positive angles use
/// the opposite phase.
inline PulseSequenceStep selective_rotation(const MultiSpinSystem& system, std::size_t site,
                                            double larmor, double axis_phi, double angle, double B1) {
  const double gamma = system.spin(site).gyro_ratio_over_2pi();
  const double phase = angle < 0.0 ? axis_phi : axis_phi + std::numbers::pi;
  const double t = pulse_duration_for_angle(gamma, B1, 1.0, std::abs(angle));
  return PulseSequenceStep::apply_pulse(Pulse::linear(B1, larmor, phase, std::numbers::pi / 2, 0.0), t);
}

/// The five-factor CNOT sequence, in time order:
/// (-π/2)_y on spin 2, U(1/2J), (-π/2)_x on spin 2, (π/2)_z on spin 2,
/// (-π/2)_z on spin 1.
inline std::vector<PulseSequenceStep> cnot_nmr_sequence(const MultiSpinSystem& system,
                                                        const ZeemanParams& zeeman, double j,
                                                        const NmrCnotParams& params) {
  if (system.size() != 2 || system.spin(0).twice_quantum_number() != 1 ||
      system.spin(1).twice_quantum_number() != 1) {
    throw DomainError("cnot_nmr: requires two spin-1/2 nuclei");
  }
  if (!(j > 0.0)) throw DomainError("cnot_nmr: J must be > 0");
  if (!(zeeman.B0 > 0.0) || zeeman.theta != 0.0) {
    throw DomainError("cnot_nmr: requires a static field B0 > 0 along z");
  }
  const double g1 = system.spin(0).gyro_ratio_over_2pi();
  const double g2 = system.spin(1).gyro_ratio_over_2pi();
  if (!(g2 > 0.0)) throw DomainError("cnot_nmr: the target spin needs a positive gyromagnetic ratio");
  const double nu1 = g1 * zeeman.B0;
  const double nu2 = g2 * zeeman.B0;
  const double rabi = g2 * params.B1;
  if (std::abs(nu1 - nu2) < params.selectivity_margin * std::max(rabi, j)) {
    throw DomainError("cnot_nmr: Larmor frequencies " + std::to_string(nu1) + " and " +
                      std::to_string(nu2) + " MHz are too close for selective pulses");
  }
  const double half = std::numbers::pi / 2;
  return {
      selective_rotation(system, 1, nu2, half, -half, params.B1),
      PulseSequenceStep::free(1.0 / (2.0 * j)),
      selective_rotation(system, 1, nu2, 0.0, -half, params.B1),
      PulseSequenceStep::z_rotation(1, half),
      PulseSequenceStep::z_rotation(0, -half),
  };
}

inline DensityMatrix cnot_nmr(const MultiSpinSystem& system, const ZeemanParams& zeeman, double j,
                              const DensityMatrix& rho_in, const NmrCnotParams& params = {},
                              const EvolutionSettings& settings = {}) {
  const auto steps = cnot_nmr_sequence(system, zeeman, j, params);
  const Matrix h0 = h_zeeman(system, zeeman) + h_j_coupling(system, JCouplingMatrix::pair(j));
  return run_sequence(system, h0, rho_in, steps, settings);
}

}  // namespace spinsim
