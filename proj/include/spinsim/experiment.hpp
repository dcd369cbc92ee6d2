#pragma once

// Config-driven runs: system setup, sequence, acquisition, transform, and
// the CSV / report artifacts of a run.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "spinsim/config.hpp"
#include "spinsim/measurement.hpp"
#include "spinsim/protocols.hpp"

namespace spinsim {

inline void write_state_csv(const Matrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << "row,col,re,im\n";
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      out << r << ',' << c << ',' << format_number(m(r, c).real()) << ',' << format_number(m(r, c).imag())
          << '\n';
    }
  }
}

struct StepReport {
  std::string name;
  double duration = 0.0;  // μs of evolution, 0 for instantaneous steps
  std::vector<std::string> details;
};

struct RunReport {
  std::vector<StepReport> steps;
  std::vector<Transition> transitions;
  DensityMatrix initial_state = DensityMatrix::maximally_mixed(1);
  DensityMatrix final_state = DensityMatrix::maximally_mixed(1);
  std::optional<FIDSignal> fid;
  std::optional<SpectrumPair> spectrum;
  double wall_seconds = 0.0;

  std::string text(const ExperimentConfig& cfg) const {
    std::ostringstream out;
    out << "spinsim run report\n\nparameters\n" << to_json(cfg).dump(2) << "\n\ntransitions (MHz)\n";
    for (const auto& t : transitions) {
      out << "  " << format_number(t.frequency) << "  levels " << t.lower << " -> " << t.upper << '\n';
    }
    out << "\nsteps\n";
    if (steps.empty()) out << "  (none)\n";
    for (std::size_t k = 0; k < steps.size(); ++k) {
      out << "  [" << k << "] " << steps[k].name << "  duration_us=" << format_number(steps[k].duration) << '\n';
      for (const auto& d : steps[k].details) out << "      " << d << '\n';
    }
    out << "\nfinal populations\n";
    for (Index k = 0; k < final_state.dim(); ++k) out << "  " << k << "  " << format_number(final_state.population(k)) << '\n';
    if (fid) out << "\nfid samples " << fid->times.size() << '\n';
    out << "\nwall_time_s " << format_number(wall_seconds) << '\n';
    return out.str();
  }
};

namespace detail {

inline std::string describe(const ExchangePulse& p, double B1) {
  std::ostringstream out;
  out << (p.handedness == Handedness::sigma_plus ? "sigma_plus" : "sigma_minus") << " m=" << format_number(p.m_low)
      << "<->" << format_number(p.m_low + p.delta_m) << " frequency_MHz=" << format_number(p.frequency)
      << " B1_T=" << format_number(B1) << " duration_us=" << format_number(p.duration);
  if (p.delta_m == 2) out << " exchanged_fraction=" << format_number(p.exchanged_fraction);
  return out.str();
}

/// Window covering every demodulated line with a 25% margin.
inline TransformConfig default_transform(const Matrix& h0, double reference) {
  double f = 0.0;
  for (const auto& t : transition_frequencies(h0)) f = std::max(f, std::abs(t.frequency - reference));
  return {0.0, f > 0.0 ? 1.25 * f : 1.0, 1000, false};
}

}  // namespace detail

/// Runs the experiment in memory.
inline RunReport simulate(const ExperimentConfig& cfg) {
  const auto started = std::chrono::steady_clock::now();
  RunReport report;
  const MultiSpinSystem system = build_system(cfg.system);
  const Matrix h0 = build_h0(cfg.system, system);
  const EvolutionSettings settings = evolution_settings(cfg.evolution);
  report.transitions = transition_frequencies(h0);
  report.initial_state = build_initial_state(cfg, system, h0);

  DensityMatrix rho = report.initial_state;
  double clock = 0.0;  // pulses and free evolutions share one carrier clock
  for (const auto& step : cfg.sequence) {
    StepReport sr{to_string(step.type), 0.0, {}};
    switch (step.type) {
      case StepType::pulse: {
        const Pulse pulse = build_pulse(step);
        const double t = pulse_duration(step, system);
        rho = run_sequence(system, h0, rho, {PulseSequenceStep::apply_pulse(pulse, t)}, settings, clock);
        clock += t;
        sr.duration = t;
        sr.details.push_back("polarization=" + step.polarization);
        for (const auto& c : pulse.components()) {
          sr.details.push_back("component B1_T=" + format_number(c.B1) + " frequency_MHz=" + format_number(c.frequency) +
                               " phase_rad=" + format_number(c.phase));
        }
        break;
      }
      case StepType::free_evolution:
        rho = free_evolve(h0, rho, *step.duration);
        clock += *step.duration;
        sr.duration = *step.duration;
        break;
      case StepType::z_rotation:
        rho = apply_unitary(z_rotation_unitary(system, step.site, deg(*step.angle_deg)), rho);
        sr.details.push_back("site=" + std::to_string(step.site) + " angle_deg=" + format_number(*step.angle_deg));
        break;
      case StepType::pseudopure: {
        PseudopureParams pp;
        pp.B1_single = step.B1_single;
        pp.B1_two_photon = step.B1_two_photon;
        pp.thermal = {cfg.system.temperature, ThermalMode::exact_boltzmann};
        pp.scan.scan_max = step.scan_max;
        pp.scan.scan_points = step.scan_points;
        const auto res = pseudopure_temporal_average(system, h0, step.target, pp, settings);
        rho = res.state;
        sr.duration = res.single.duration + res.two_photon.duration;
        sr.details.push_back("target=" + step.target + " (replaces the current state)");
        sr.details.push_back("single photon: " + detail::describe(res.single, pp.B1_single));
        sr.details.push_back("two photon: " + detail::describe(res.two_photon, pp.B1_two_photon));
        const auto st = pseudopure_structure(res.state);
        sr.details.push_back("identity_weight=" + format_number(st.identity_weight) +
                             " pure_weight=" + format_number(st.pure_weight) + " residual=" + format_number(st.residual));
        break;
      }
      case StepType::cnot_nqr: {
        const ExchangePulse p = single_photon_exchange(system, h0, -1.5, step.B1);
        rho = evolve(system, h0, rho, p.pulse(step.B1), p.duration, settings);
        sr.duration = p.duration;
        sr.details.push_back(detail::describe(p, step.B1));
        break;
      }
      case StepType::cnot_nmr: {
        const auto steps = cnot_nmr_sequence(system, zeeman_params(*cfg.system.zeeman), (*cfg.system.j_coupling)[0][1],
                                             {step.B1, step.selectivity_margin});
        rho = run_sequence(system, h0, rho, steps, settings);
        for (const auto& s : steps) sr.duration += s.duration;
        for (const auto& s : steps) {
          if (s.kind == PulseSequenceStep::Kind::pulse) {
            const auto& c = s.pulse.components().front();
            sr.details.push_back("rotation pulse frequency_MHz=" + format_number(c.frequency) +
                                 " phase_rad=" + format_number(c.phase) + " duration_us=" + format_number(s.duration));
          } else if (s.kind == PulseSequenceStep::Kind::free_evolution) {
            sr.details.push_back("free evolution duration_us=" + format_number(s.duration));
          } else {
            sr.details.push_back("z rotation site=" + std::to_string(s.site) + " angle_rad=" + format_number(s.angle));
          }
        }
        break;
      }
    }
    report.steps.push_back(std::move(sr));
  }
  report.final_state = rho;

  if (cfg.acquisition) {
    const auto& a = *cfg.acquisition;
    AcquisitionParams acq;
    acq.acquisition_time = a.acquisition_time;
    acq.T2 = a.T2;
    acq.coil_theta = deg(a.coil_theta_deg);
    acq.coil_phi = deg(a.coil_phi_deg);
    acq.reference_frequency = a.reference_frequency;
    acq.sample_count = a.sample_count.value_or(
        std::max<std::size_t>(1000, nyquist_sample_count(h0, a.acquisition_time, a.reference_frequency)));
    report.fid = fid_signal(system, h0, rho, acq);
    const TransformConfig t = cfg.transform.value_or(detail::default_transform(h0, a.reference_frequency));
    report.spectrum = fourier_transform_signal(*report.fid, t.start, t.stop, t.points, t.opposite);
  }
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

/// Runs the experiment and writes initial_state.csv, final_state.csv,
/// fid.csv and spectrum.csv (when an acquisition block is present) and
/// report.txt into out_dir.
inline RunReport run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  RunReport report = simulate(cfg);
  write_state_csv(report.initial_state.matrix(), out_dir / "initial_state.csv");
  write_state_csv(report.final_state.matrix(), out_dir / "final_state.csv");
  if (report.fid) write_fid_csv(*report.fid, (out_dir / "fid.csv").string());
  if (report.spectrum) write_spectrum_csv(*report.spectrum, (out_dir / "spectrum.csv").string());
  std::ofstream out(out_dir / "report.txt", std::ios::binary);
  if (!out) throw Error("cannot open " + (out_dir / "report.txt").string() + " for writing");
  out << report.text(cfg);
  return report;
}

}  // namespace spinsim
