#pragma once

// Free induction decay and its windowed Fourier transform.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "spinsim/evolution.hpp"
#include "spinsim/operators.hpp"
#include "spinsim/spin.hpp"

namespace spinsim {

struct AcquisitionParams {
  double acquisition_time = 100.0;  // μs
  std::size_t sample_count = 1000;
  double T2 = 100.0;                // μs
  double coil_theta = 0.0;
  double coil_phi = 0.0;
  double reference_frequency = 0.0;  // MHz

  void validate() const {
    if (!(acquisition_time > 0.0)) throw DomainError("acquisition: acquisition_time must be > 0");
    if (sample_count < 16) throw DomainError("acquisition: sample_count must be >= 16");
    if (!(T2 > 0.0)) throw DomainError("acquisition: T2 must be > 0");
  }
  double time_step() const { return acquisition_time / static_cast<double>(sample_count - 1); }
  bool operator==(const AcquisitionParams&) const = default;
};

struct FIDSignal {
  std::vector<double> times;     // μs
  std::vector<Complex> samples;  // arbitrary units
};

struct Spectrum {
  std::vector<double> frequencies;  // MHz
  std::vector<Complex> amplitudes;

  double max_abs() const {
    double m = 0.0;
    for (const auto& a : amplitudes) m = std::max(m, std::abs(a));
    return m;
  }
};

struct Transition {
  double frequency;  // MHz, ≥ 0
  Index upper;       // eigenvalue indices in ascending order
  Index lower;
};

/// All pairwise eigenvalue differences E_upper - E_lower (upper > lower),
/// sorted by frequency.
inline std::vector<Transition> transition_frequencies(const Matrix& h0) {
  if (!is_hermitian(h0)) throw DomainError("transition_frequencies: H0 must be Hermitian");
  const RealVector e = eigenvalues(h0);
  std::vector<Transition> out;
  for (Index a = 0; a < e.size(); ++a) {
    for (Index b = 0; b < a; ++b) out.push_back({e(a) - e(b), a, b});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Transition& x, const Transition& y) { return x.frequency < y.frequency; });
  return out;
}

/// Coil observable R I+_total R†, R = exp(-iφ Iz_total) exp(-iθ Iy_total).
inline Matrix detection_operator(const MultiSpinSystem& system, double theta, double phi) {
  const Matrix iz = total_spin_component(system, {0.0, 0.0, 1.0});
  const Matrix iy = total_spin_component(system, {0.0, 1.0, 0.0});
  const Matrix r = hermitian_exp(iz, Complex(0.0, -phi)) * hermitian_exp(iy, Complex(0.0, -theta));
  return r * total_raising(system) * r.adjoint();
}

/// Smallest sample count whose rate exceeds 4× the largest demodulated
/// transition frequency.
inline std::size_t nyquist_sample_count(const Matrix& h0, double acquisition_time,
                                        double reference_frequency) {
  double f = std::abs(reference_frequency);
  for (const auto& tr : transition_frequencies(h0)) {
    f = std::max({f, std::abs(tr.frequency - reference_frequency),
                  std::abs(-tr.frequency - reference_frequency)});
  }
  const double needed = std::floor(4.0 * f * acquisition_time) + 2.0;
  return std::max<std::size_t>(16, static_cast<std::size_t>(needed));
}

/// S(t) = Tr[ρ(t) M] e^{-t/T2} e^{+i2πν_ref t}, ρ(t) = exp(-i2πH0t) ρ exp(+i2πH0t).
inline FIDSignal fid_signal(const MultiSpinSystem& system, const Matrix& h0,
                            const DensityMatrix& rho, const AcquisitionParams& acq) {
  acq.validate();
  const Index d = system.total_dim();
  if (h0.rows() != d || rho.dim() != d) throw DimensionError("fid_signal: dimension mismatch");
  const std::size_t needed = nyquist_sample_count(h0, acq.acquisition_time, acq.reference_frequency);
  if (acq.sample_count < needed) {
    throw DomainError("fid_signal: sample_count " + std::to_string(acq.sample_count) +
                      " undersamples the signal; at least " + std::to_string(needed) +
                      " samples are needed over " + std::to_string(acq.acquisition_time) + " us");
  }

  // In the H0 eigenbasis ρ(t)_ab = ρ_ab e^{-i2π(E_a - E_b)t}, so
  // Tr[ρ(t) M] = Σ_ab ρ_ab M_ba e^{-i2π(E_a - E_b)t}.
  const EigenSystem es = eigensystem(h0);
  const Matrix rho_e = es.vectors.adjoint() * rho.matrix() * es.vectors;
  const Matrix m_e = es.vectors.adjoint() * detection_operator(system, acq.coil_theta, acq.coil_phi) *
                     es.vectors;
  struct Line {
    double frequency;
    Complex weight;
  };
  std::vector<Line> lines;
  for (Index a = 0; a < d; ++a) {
    for (Index b = 0; b < d; ++b) {
      const Complex w = rho_e(a, b) * m_e(b, a);
      if (w != 0.0) lines.push_back({es.values(a) - es.values(b), w});
    }
  }

  FIDSignal fid;
  fid.times.resize(acq.sample_count);
  fid.samples.resize(acq.sample_count);
  const double dt = acq.time_step();
  for (std::size_t k = 0; k < acq.sample_count; ++k) {
    const double t = dt * static_cast<double>(k);
    Complex s{0.0, 0.0};
    for (const auto& line : lines) s += line.weight * std::polar(1.0, -kTwoPi * line.frequency * t);
    fid.times[k] = t;
    fid.samples[k] = s * std::exp(-t / acq.T2) * std::polar(1.0, kTwoPi * acq.reference_frequency * t);
  }
  return fid;
}

struct SpectrumPair {
  Spectrum positive;
  std::optional<Spectrum> opposite;  // window [-stop, -start]
};

namespace detail {

inline Spectrum transform_window(const FIDSignal& fid, double start, double stop, std::size_t points) {
  const std::size_t n = fid.times.size();
  Spectrum out;
  out.frequencies.resize(points);
  out.amplitudes.resize(points);
  for (std::size_t j = 0; j < points; ++j) {
    const double nu = start + (stop - start) * static_cast<double>(j) / static_cast<double>(points - 1);
    Complex acc{0.0, 0.0};
    for (std::size_t k = 0; k + 1 < n; ++k) {
      const double dt = fid.times[k + 1] - fid.times[k];
      const Complex f0 = fid.samples[k] * std::polar(1.0, -kTwoPi * nu * fid.times[k]);
      const Complex f1 = fid.samples[k + 1] * std::polar(1.0, -kTwoPi * nu * fid.times[k + 1]);
      acc += 0.5 * dt * (f0 + f1);
    }
    out.frequencies[j] = nu;
    out.amplitudes[j] = acc;
  }
  return out;
}

}  // namespace detail

/// S(ν) = ∫_0^{T_acq} S(t) e^{-i2πνt} dt by the trapezoid rule on the FID
/// grid, at `grid_points` frequencies spanning [start, stop].
inline SpectrumPair fourier_transform_signal(const FIDSignal& fid, double frequency_start,
                                             double frequency_stop, std::size_t grid_points,
                                             bool include_opposite = false) {
  if (fid.times.empty() || fid.times.size() != fid.samples.size()) {
    throw DomainError("fourier_transform_signal: empty or inconsistent FID");
  }
  if (!(frequency_start < frequency_stop)) {
    throw DomainError("fourier_transform_signal: frequency_start must be < frequency_stop");
  }
  if (grid_points < 2) throw DomainError("fourier_transform_signal: grid_points must be >= 2");
  SpectrumPair out{detail::transform_window(fid, frequency_start, frequency_stop, grid_points), std::nullopt};
  if (include_opposite) {
    out.opposite = detail::transform_window(fid, -frequency_stop, -frequency_start, grid_points);
  }
  return out;
}

/// Interior local maxima of |S(ν)| at or above `relative_threshold` × max.
inline std::vector<std::size_t> find_peaks(const Spectrum& s, double relative_threshold) {
  std::vector<std::size_t> out;
  const double cutoff = relative_threshold * s.max_abs();
  for (std::size_t j = 1; j + 1 < s.amplitudes.size(); ++j) {
    const double a = std::abs(s.amplitudes[j]);
    if (a >= cutoff && a > std::abs(s.amplitudes[j - 1]) && a >= std::abs(s.amplitudes[j + 1])) {
      out.push_back(j);
    }
  }
  return out;
}

inline std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

inline void write_fid_csv(const FIDSignal& fid, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << "time_us,re,im\n";
  for (std::size_t k = 0; k < fid.times.size(); ++k) {
    out << format_number(fid.times[k]) << ',' << format_number(fid.samples[k].real()) << ','
        << format_number(fid.samples[k].imag()) << '\n';
  }
}

/// Writes the opposite window (if any) first so frequencies ascend.
inline void write_spectrum_csv(const SpectrumPair& spectrum, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << "freq_MHz,re,im,abs\n";
  auto dump = [&out](const Spectrum& s) {
    for (std::size_t j = 0; j < s.frequencies.size(); ++j) {
      const Complex a = s.amplitudes[j];
      out << format_number(s.frequencies[j]) << ',' << format_number(a.real()) << ','
          << format_number(a.imag()) << ',' << format_number(std::abs(a)) << '\n';
    }
  };
  if (spectrum.opposite) dump(*spectrum.opposite);
  dump(spectrum.positive);
}

}  // namespace spinsim
