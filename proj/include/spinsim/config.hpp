#pragma once

// Experiment description files: JSON with // comments. Angles are given in
// degrees, times in μs, frequencies in MHz, fields in tesla. Every
// validation failure is reported with its key path; unknown keys are errors.

#include <algorithm>
#include <filesystem>
#include <numbers>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "spinsim/errors.hpp"
#include "spinsim/evolution.hpp"
#include "spinsim/hamiltonians.hpp"
#include "spinsim/measurement.hpp"
#include "spinsim/protocols.hpp"
#include "spinsim/spin.hpp"

namespace spinsim {

using json = nlohmann::ordered_json;

class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> problems)
      : Error(join(problems)), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& p) {
    std::string out = "invalid configuration:";
    for (const auto& s : p) out += "\n  " + s;
    return out;
  }
  std::vector<std::string> problems_;
};

struct QuadrupoleConfig {
  double coupling_MHz = 0.0;
  double eta = 0.0;
  double alpha_deg = 0.0, beta_deg = 0.0, gamma_deg = 0.0;
  bool operator==(const QuadrupoleConfig&) const = default;
};

struct SpinConfig {
  double I = 0.5;
  double gamma_over_2pi = 0.0;  // MHz/T
  std::optional<QuadrupoleConfig> quadrupole;
  bool operator==(const SpinConfig&) const = default;
};

struct ZeemanConfig {
  double B0 = 0.0;
  double theta_deg = 0.0, phi_deg = 0.0;
  bool operator==(const ZeemanConfig&) const = default;
};

enum class InitialKind { canonical, high_T, pure, populations, matrix_file };

struct InitialStateConfig {
  InitialKind kind = InitialKind::canonical;
  std::string label;                 // pure, 4-level systems
  std::optional<std::size_t> index;  // pure
  std::vector<double> populations;   // populations
  std::string path;                  // matrix_file, relative to the config
  bool operator==(const InitialStateConfig&) const = default;
};

struct SystemConfig {
  std::vector<SpinConfig> spins;
  std::optional<ZeemanConfig> zeeman;
  std::optional<std::vector<std::vector<double>>> j_coupling;  // MHz, strictly upper triangular
  InitialStateConfig initial_state{};
  double temperature = 1e-4;  // K
  bool operator==(const SystemConfig&) const = default;
};

struct ComponentConfig {
  double B1 = 0.0, frequency = 0.0, phase_deg = 0.0, axis_theta_deg = 90.0, axis_phi_deg = 0.0;
  bool operator==(const ComponentConfig&) const = default;
};

enum class StepType { pulse, free_evolution, z_rotation, pseudopure, cnot_nqr, cnot_nmr };

struct StepConfig {
  StepType type = StepType::free_evolution;
  // pulse
  std::string polarization = "linear";  // linear, sigma_plus, sigma_minus, components
  double B1 = 0.0, frequency = 0.0, phase_deg = 0.0;
  double axis_theta_deg = 90.0, axis_phi_deg = 0.0;   // linear polarization axis
  double normal_theta_deg = 0.0, normal_phi_deg = 0.0;  // plane normal of a circular pulse
  std::vector<ComponentConfig> components;
  std::optional<double> duration;   // pulse, free_evolution
  std::optional<double> angle_deg;  // pulse (with alpha, site), z_rotation
  double alpha = 1.0;
  std::size_t site = 0;
  // protocols
  std::string target;  // pseudopure
  double B1_single = 0.01, B1_two_photon = 0.07;
  double scan_max = 40.0;
  std::size_t scan_points = 80;
  double selectivity_margin = 10.0;
  bool operator==(const StepConfig&) const = default;
};

struct EvolutionConfig {
  std::string picture = "interaction";
  double rrf_frequency = 0.0, rrf_theta_deg = 0.0, rrf_phi_deg = 0.0;
  int magnus_order = 2;
  int quadrature_points_per_period = 100;
  bool operator==(const EvolutionConfig&) const = default;
};

struct AcquisitionConfig {
  double acquisition_time = 100.0;
  std::optional<std::size_t> sample_count;  // default: enough for the signal
  double T2 = 100.0;
  double coil_theta_deg = 0.0, coil_phi_deg = 0.0;
  double reference_frequency = 0.0;
  bool operator==(const AcquisitionConfig&) const = default;
};

struct TransformConfig {
  double start = 0.0, stop = 1.0;
  std::size_t points = 1000;
  bool opposite = false;
  bool operator==(const TransformConfig&) const = default;
};

struct ExperimentConfig {
  SystemConfig system;
  std::vector<StepConfig> sequence;
  EvolutionConfig evolution{};
  std::optional<AcquisitionConfig> acquisition;
  std::optional<TransformConfig> transform;
  std::filesystem::path base_dir;  // resolves matrix_file paths; not serialized

  bool operator==(const ExperimentConfig& o) const {
    return system == o.system && sequence == o.sequence && evolution == o.evolution &&
           acquisition == o.acquisition && transform == o.transform;
  }
};

inline double deg(double x) { return x * std::numbers::pi / 180.0; }

inline const char* to_string(InitialKind k) {
  switch (k) {
    case InitialKind::canonical: return "canonical";
    case InitialKind::high_T: return "high_T";
    case InitialKind::pure: return "pure";
    case InitialKind::populations: return "populations";
    case InitialKind::matrix_file: return "matrix_file";
  }
  return "";
}

inline const char* to_string(StepType t) {
  switch (t) {
    case StepType::pulse: return "pulse";
    case StepType::free_evolution: return "free_evolution";
    case StepType::z_rotation: return "z_rotation";
    case StepType::pseudopure: return "pseudopure";
    case StepType::cnot_nqr: return "cnot_nqr";
    case StepType::cnot_nmr: return "cnot_nmr";
  }
  return "";
}

// ---- model construction -------------------------------------------------

inline MultiSpinSystem build_system(const SystemConfig& s) {
  std::vector<NuclearSpin> spins;
  for (const auto& sp : s.spins) spins.emplace_back(sp.I, sp.gamma_over_2pi);
  return MultiSpinSystem(std::move(spins));
}

inline QuadrupoleParams quadrupole_params(const QuadrupoleConfig& q) {
  return {q.coupling_MHz, q.eta, {deg(q.alpha_deg), deg(q.beta_deg), deg(q.gamma_deg)}};
}

inline ZeemanParams zeeman_params(const ZeemanConfig& z) { return {z.B0, deg(z.theta_deg), deg(z.phi_deg)}; }

inline JCouplingMatrix j_coupling_matrix(const std::vector<std::vector<double>>& rows) {
  const auto n = static_cast<Index>(rows.size());
  Eigen::MatrixXd v(n, n);
  for (Index i = 0; i < n; ++i) {
    if (static_cast<Index>(rows[i].size()) != n) throw DimensionError("j_coupling must be a square matrix");
    for (Index j = 0; j < n; ++j) v(i, j) = rows[i][j];
  }
  return JCouplingMatrix(v);
}

/// Static Hamiltonian H0 = Zeeman + Σ quadrupole + J.
inline Matrix build_h0(const SystemConfig& s, const MultiSpinSystem& system) {
  const Index d = system.total_dim();
  Matrix h0 = Matrix::Zero(d, d);
  if (s.zeeman) h0 += h_zeeman(system, zeeman_params(*s.zeeman));
  for (std::size_t k = 0; k < s.spins.size(); ++k) {
    if (s.spins[k].quadrupole) h0 += h_quadrupole(system, k, quadrupole_params(*s.spins[k].quadrupole));
  }
  if (s.j_coupling) h0 += h_j_coupling(system, j_coupling_matrix(*s.j_coupling));
  return h0;
}

inline EvolutionSettings evolution_settings(const EvolutionConfig& e) {
  EvolutionSettings s;
  if (e.picture == "interaction") {
    s.picture = Picture::interaction;
  } else if (e.picture == "rotating_frame") {
    s.picture = Picture::rotating_frame;
  } else {
    throw DomainError("picture must be 'interaction' or 'rotating_frame'");
  }
  s.rrf_frequency = e.rrf_frequency;
  s.rrf_theta = deg(e.rrf_theta_deg);
  s.rrf_phi = deg(e.rrf_phi_deg);
  s.magnus_order = e.magnus_order;
  s.quadrature_points_per_period = e.quadrature_points_per_period;
  s.validate();
  return s;
}

inline bool is_circular(const StepConfig& p) {
  return p.polarization == "sigma_plus" || p.polarization == "sigma_minus";
}

inline Pulse build_pulse(const StepConfig& p) {
  if (p.polarization == "linear") {
    return Pulse::linear(p.B1, p.frequency, deg(p.phase_deg), deg(p.axis_theta_deg), deg(p.axis_phi_deg));
  }
  if (is_circular(p)) {
    return make_circular_pulse(p.polarization == "sigma_plus" ? Handedness::sigma_plus : Handedness::sigma_minus,
                               p.B1, p.frequency, deg(p.phase_deg), deg(p.normal_theta_deg),
                               deg(p.normal_phi_deg));
  }
  if (p.polarization == "components") {
    std::vector<PulseComponent> comps;
    for (const auto& c : p.components) {
      comps.push_back({c.B1, c.frequency, deg(c.phase_deg), deg(c.axis_theta_deg), deg(c.axis_phi_deg)});
    }
    return Pulse(std::move(comps));
  }
  throw DomainError("polarization must be linear, sigma_plus, sigma_minus or components");
}

/// Explicit duration, or the one giving `angle_deg` on a transition with
/// factor `alpha` of spin `site` (co-rotating amplitude B1 linear, 2B1 circular).
inline double pulse_duration(const StepConfig& p, const MultiSpinSystem& system) {
  if (p.duration) return *p.duration;
  if (p.site >= system.size()) throw DomainError("site out of range");
  const double amplitude = is_circular(p) ? circular_co_rotating_amplitude(p.B1) : p.B1;
  return pulse_duration_for_angle(system.spin(p.site).gyro_ratio_over_2pi(), amplitude, p.alpha,
                                  deg(*p.angle_deg));
}

/// Reads a `row,col,re,im` CSV (as written by write_state_csv).
inline Matrix read_state_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open state file " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("row,col,re,im", 0) != 0) throw Error(path.string() + ": expected header row,col,re,im");
  struct Entry {
    long row, col;
    double re, im;
  };
  std::vector<Entry> entries;
  long n = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    Entry e{};
    if (!(ss >> e.row >> e.col >> e.re >> e.im) || e.row < 0 || e.col < 0) {
      throw Error(path.string() + ":" + std::to_string(line_no) + ": malformed entry");
    }
    n = std::max({n, e.row + 1, e.col + 1});
    entries.push_back(e);
  }
  if (n == 0) throw Error(path.string() + ": no entries");
  Matrix m = Matrix::Zero(n, n);
  for (const auto& e : entries) m(e.row, e.col) = Complex(e.re, e.im);
  return m;
}

inline DensityMatrix build_initial_state(const ExperimentConfig& cfg, const MultiSpinSystem& system,
                                         const Matrix& h0) {
  const auto& s = cfg.system.initial_state;
  const Index d = system.total_dim();
  switch (s.kind) {
    case InitialKind::canonical:
      return canonical_density_matrix(h0, {cfg.system.temperature, ThermalMode::exact_boltzmann});
    case InitialKind::high_T:
      return canonical_density_matrix(h0, {cfg.system.temperature, ThermalMode::high_temperature_linearized});
    case InitialKind::pure: {
      Index k = 0;
      if (s.index) {
        k = static_cast<Index>(*s.index);
      } else {
        if (d != 4) throw DomainError("pure state labels need a 4-level system; use 'index'");
        k = QubitBasisMap::index_of(s.label);
      }
      if (k >= d) throw DomainError("pure state index " + std::to_string(k) + " >= dimension " + std::to_string(d));
      return DensityMatrix::basis_state(d, k);
    }
    case InitialKind::populations: {
      if (static_cast<Index>(s.populations.size()) != d) {
        throw DimensionError("populations has " + std::to_string(s.populations.size()) +
                             " entries but the system dimension is " + std::to_string(d));
      }
      Matrix m = Matrix::Zero(d, d);
      for (Index k = 0; k < d; ++k) m(k, k) = s.populations[static_cast<std::size_t>(k)];
      return DensityMatrix(m);
    }
    case InitialKind::matrix_file: {
      const auto path = std::filesystem::path(s.path).is_absolute() ? std::filesystem::path(s.path)
                                                                    : cfg.base_dir / s.path;
      const Matrix m = read_state_csv(path);
      if (m.rows() != d) throw DimensionError("state file dimension does not match the system");
      return DensityMatrix(m);
    }
  }
  throw DomainError("unknown initial state kind");
}

// ---- parsing ------------------------------------------------------------

namespace detail {

class Reader {
 public:
  std::vector<std::string> errors;

  void fail(const std::string& path, const std::string& msg) { errors.push_back(path + ": " + msg); }

  bool object(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) {
      fail(path, "expected an object");
      return false;
    }
    for (const auto& [key, _] : j.items()) {
      bool known = false;
      for (const char* a : allowed) known = known || key == a;
      if (!known) fail(path + "." + key, "unknown key");
    }
    return true;
  }

  void number(const json& j, const char* key, const std::string& path, double& out, bool required = false) {
    if (!j.contains(key)) {
      if (required) fail(path + "." + key, "required");
      return;
    }
    const auto& v = j.at(key);
    if (!v.is_number()) {
      fail(path + "." + key, "expected a number");
      return;
    }
    out = v.get<double>();
    if (!std::isfinite(out)) fail(path + "." + key, "must be finite");
  }

  void number(const json& j, const char* key, const std::string& path, std::optional<double>& out) {
    if (!j.contains(key)) return;
    double v = 0.0;
    number(j, key, path, v);
    out = v;
  }

  template <typename Int>
  void integer(const json& j, const char* key, const std::string& path, Int& out, bool required = false) {
    if (!j.contains(key)) {
      if (required) fail(path + "." + key, "required");
      return;
    }
    const auto& v = j.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && v.get<long long>() < 0)) {
      fail(path + "." + key, "expected a non-negative integer");
      return;
    }
    out = static_cast<Int>(v.get<long long>());
  }

  void integer(const json& j, const char* key, const std::string& path, std::optional<std::size_t>& out) {
    if (!j.contains(key)) return;
    std::size_t v = 0;
    integer(j, key, path, v);
    out = v;
  }

  void string(const json& j, const char* key, const std::string& path, std::string& out, bool required = false) {
    if (!j.contains(key)) {
      if (required) fail(path + "." + key, "required");
      return;
    }
    if (!j.at(key).is_string()) {
      fail(path + "." + key, "expected a string");
      return;
    }
    out = j.at(key).get<std::string>();
  }

  void boolean(const json& j, const char* key, const std::string& path, bool& out) {
    if (!j.contains(key)) return;
    if (!j.at(key).is_boolean()) {
      fail(path + "." + key, "expected true or false");
      return;
    }
    out = j.at(key).get<bool>();
  }

  std::vector<double> numbers(const json& v, const std::string& path) {
    std::vector<double> out;
    if (!v.is_array()) {
      fail(path, "expected an array of numbers");
      return out;
    }
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (!v[k].is_number()) {
        fail(path + "[" + std::to_string(k) + "]", "expected a number");
        continue;
      }
      out.push_back(v[k].get<double>());
    }
    return out;
  }

  // Runs a model constructor and records its failure under `path`.
  template <typename F>
  void check(const std::string& path, F&& f) {
    try {
      f();
    } catch (const std::exception& e) {
      fail(path, e.what());
    }
  }
};

inline void parse_quadrupole(Reader& r, const json& j, const std::string& path, QuadrupoleConfig& q) {
  if (!r.object(j, path, {"coupling_MHz", "eta", "alpha_deg", "beta_deg", "gamma_deg"})) return;
  r.number(j, "coupling_MHz", path, q.coupling_MHz, true);
  r.number(j, "eta", path, q.eta);
  r.number(j, "alpha_deg", path, q.alpha_deg);
  r.number(j, "beta_deg", path, q.beta_deg);
  r.number(j, "gamma_deg", path, q.gamma_deg);
  r.check(path, [&] { quadrupole_params(q).validate(); });
}

inline void parse_initial_state(Reader& r, const json& j, const std::string& path, InitialStateConfig& s) {
  if (j.is_string()) {
    const auto kind = j.get<std::string>();
    if (kind == "canonical") {
      s.kind = InitialKind::canonical;
    } else if (kind == "high_T") {
      s.kind = InitialKind::high_T;
    } else {
      r.fail(path, "expected 'canonical', 'high_T' or an object");
    }
    return;
  }
  if (!r.object(j, path, {"kind", "label", "index", "populations", "path"})) return;
  std::string kind;
  r.string(j, "kind", path, kind, true);
  if (kind == "canonical") {
    s.kind = InitialKind::canonical;
  } else if (kind == "high_T") {
    s.kind = InitialKind::high_T;
  } else if (kind == "pure") {
    s.kind = InitialKind::pure;
    r.string(j, "label", path, s.label);
    r.integer(j, "index", path, s.index);
    if (s.label.empty() == !s.index.has_value()) r.fail(path, "pure state needs exactly one of 'label' or 'index'");
    if (!s.label.empty()) r.check(path + ".label", [&] { QubitBasisMap::index_of(s.label); });
  } else if (kind == "populations") {
    s.kind = InitialKind::populations;
    if (!j.contains("populations")) {
      r.fail(path + ".populations", "required");
    } else {
      s.populations = r.numbers(j.at("populations"), path + ".populations");
    }
  } else if (kind == "matrix_file") {
    s.kind = InitialKind::matrix_file;
    r.string(j, "path", path, s.path, true);
  } else if (!kind.empty()) {
    r.fail(path + ".kind", "expected canonical, high_T, pure, populations or matrix_file");
  }
}

inline void parse_system(Reader& r, const json& j, const std::string& path, SystemConfig& s) {
  if (!r.object(j, path, {"spins", "zeeman", "j_coupling", "initial_state", "temperature"})) return;
  if (!j.contains("spins") || !j.at("spins").is_array() || j.at("spins").empty()) {
    r.fail(path + ".spins", "required non-empty array");
  } else {
    const auto& spins = j.at("spins");
    for (std::size_t k = 0; k < spins.size(); ++k) {
      const std::string p = path + ".spins[" + std::to_string(k) + "]";
      SpinConfig sc;
      if (r.object(spins[k], p, {"I", "gamma_over_2pi", "quadrupole"})) {
        r.number(spins[k], "I", p, sc.I, true);
        r.number(spins[k], "gamma_over_2pi", p, sc.gamma_over_2pi, true);
        if (spins[k].contains("quadrupole")) {
          sc.quadrupole.emplace();
          parse_quadrupole(r, spins[k].at("quadrupole"), p + ".quadrupole", *sc.quadrupole);
        }
        r.check(p, [&] { NuclearSpin(sc.I, sc.gamma_over_2pi); });
      }
      s.spins.push_back(sc);
    }
  }
  if (j.contains("zeeman")) {
    const std::string p = path + ".zeeman";
    ZeemanConfig z;
    if (r.object(j.at("zeeman"), p, {"B0", "theta_deg", "phi_deg"})) {
      r.number(j.at("zeeman"), "B0", p, z.B0, true);
      r.number(j.at("zeeman"), "theta_deg", p, z.theta_deg);
      r.number(j.at("zeeman"), "phi_deg", p, z.phi_deg);
      r.check(p, [&] { zeeman_params(z).validate(); });
    }
    s.zeeman = z;
  }
  if (j.contains("j_coupling")) {
    const std::string p = path + ".j_coupling";
    const auto& rows = j.at("j_coupling");
    std::vector<std::vector<double>> m;
    if (!rows.is_array()) {
      r.fail(p, "expected a matrix (array of rows)");
    } else {
      for (std::size_t k = 0; k < rows.size(); ++k) m.push_back(r.numbers(rows[k], p + "[" + std::to_string(k) + "]"));
      if (m.size() != s.spins.size()) {
        r.fail(p, "must be " + std::to_string(s.spins.size()) + "x" + std::to_string(s.spins.size()));
      } else {
        r.check(p, [&] { j_coupling_matrix(m); });
      }
    }
    s.j_coupling = m;
  }
  if (j.contains("initial_state")) parse_initial_state(r, j.at("initial_state"), path + ".initial_state", s.initial_state);
  r.number(j, "temperature", path, s.temperature);
  if (!(s.temperature > 0.0)) r.fail(path + ".temperature", "must be > 0");
}

inline void parse_step(Reader& r, const json& j, const std::string& path, StepConfig& s) {
  if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) {
    r.fail(path, "each step needs a string 'type'");
    return;
  }
  const std::string type = j.at("type").get<std::string>();
  if (type == "pulse") {
    s.type = StepType::pulse;
    if (!r.object(j, path, {"type", "polarization", "B1", "frequency", "phase_deg", "axis_theta_deg",
                            "axis_phi_deg", "normal_theta_deg", "normal_phi_deg", "components", "duration",
                            "angle_deg", "alpha", "site"})) {
      return;
    }
    r.string(j, "polarization", path, s.polarization);
    r.number(j, "phase_deg", path, s.phase_deg);
    r.number(j, "axis_theta_deg", path, s.axis_theta_deg);
    r.number(j, "axis_phi_deg", path, s.axis_phi_deg);
    r.number(j, "normal_theta_deg", path, s.normal_theta_deg);
    r.number(j, "normal_phi_deg", path, s.normal_phi_deg);
    r.number(j, "duration", path, s.duration);
    r.number(j, "angle_deg", path, s.angle_deg);
    r.number(j, "alpha", path, s.alpha);
    r.integer(j, "site", path, s.site);
    if (s.polarization == "components") {
      if (!j.contains("components") || !j.at("components").is_array()) {
        r.fail(path + ".components", "required array for polarization 'components'");
      } else {
        const auto& cs = j.at("components");
        for (std::size_t k = 0; k < cs.size(); ++k) {
          const std::string p = path + ".components[" + std::to_string(k) + "]";
          ComponentConfig c;
          if (r.object(cs[k], p, {"B1", "frequency", "phase_deg", "axis_theta_deg", "axis_phi_deg"})) {
            r.number(cs[k], "B1", p, c.B1, true);
            r.number(cs[k], "frequency", p, c.frequency, true);
            r.number(cs[k], "phase_deg", p, c.phase_deg);
            r.number(cs[k], "axis_theta_deg", p, c.axis_theta_deg);
            r.number(cs[k], "axis_phi_deg", p, c.axis_phi_deg);
          }
          s.components.push_back(c);
        }
      }
      if (s.angle_deg) r.fail(path + ".angle_deg", "not supported with explicit components; give 'duration'");
    } else {
      r.number(j, "B1", path, s.B1, true);
      r.number(j, "frequency", path, s.frequency, true);
      if (j.contains("components")) r.fail(path + ".components", "only allowed with polarization 'components'");
    }
    if (s.duration.has_value() == s.angle_deg.has_value()) {
      r.fail(path, "pulse needs exactly one of 'duration' or 'angle_deg'");
    }
    if (s.duration && !(*s.duration >= 0.0)) r.fail(path + ".duration", "must be >= 0");
    if (s.angle_deg && !(*s.angle_deg > 0.0)) r.fail(path + ".angle_deg", "must be > 0");
    if (!(s.alpha > 0.0)) r.fail(path + ".alpha", "must be > 0");
    r.check(path, [&] { build_pulse(s); });
  } else if (type == "free_evolution") {
    s.type = StepType::free_evolution;
    if (!r.object(j, path, {"type", "duration"})) return;
    r.number(j, "duration", path, s.duration);
    if (!s.duration) {
      r.fail(path + ".duration", "required");
    } else if (!(*s.duration >= 0.0)) {
      r.fail(path + ".duration", "must be >= 0");
    }
  } else if (type == "z_rotation") {
    s.type = StepType::z_rotation;
    if (!r.object(j, path, {"type", "site", "angle_deg"})) return;
    r.integer(j, "site", path, s.site);
    r.number(j, "angle_deg", path, s.angle_deg);
    if (!s.angle_deg) r.fail(path + ".angle_deg", "required");
  } else if (type == "pseudopure") {
    s.type = StepType::pseudopure;
    if (!r.object(j, path, {"type", "target", "B1_single", "B1_two_photon", "scan_max", "scan_points"})) return;
    r.string(j, "target", path, s.target, true);
    r.number(j, "B1_single", path, s.B1_single);
    r.number(j, "B1_two_photon", path, s.B1_two_photon);
    r.number(j, "scan_max", path, s.scan_max);
    r.integer(j, "scan_points", path, s.scan_points);
    if (!s.target.empty()) r.check(path + ".target", [&] { QubitBasisMap::index_of(s.target); });
    if (!(s.B1_single > 0.0)) r.fail(path + ".B1_single", "must be > 0");
    if (!(s.B1_two_photon > 0.0)) r.fail(path + ".B1_two_photon", "must be > 0");
    if (!(s.scan_max > 0.0)) r.fail(path + ".scan_max", "must be > 0");
    if (s.scan_points < 3) r.fail(path + ".scan_points", "must be >= 3");
  } else if (type == "cnot_nqr") {
    s.type = StepType::cnot_nqr;
    s.B1 = 0.01;
    if (!r.object(j, path, {"type", "B1"})) return;
    r.number(j, "B1", path, s.B1);
    if (!(s.B1 > 0.0)) r.fail(path + ".B1", "must be > 0");
  } else if (type == "cnot_nmr") {
    s.type = StepType::cnot_nmr;
    s.B1 = 0.1;
    if (!r.object(j, path, {"type", "B1", "selectivity_margin"})) return;
    r.number(j, "B1", path, s.B1);
    r.number(j, "selectivity_margin", path, s.selectivity_margin);
    if (!(s.B1 > 0.0)) r.fail(path + ".B1", "must be > 0");
  } else {
    r.fail(path + ".type",
           "unknown step type '" + type + "' (pulse, free_evolution, z_rotation, pseudopure, cnot_nqr, cnot_nmr)");
  }
}

inline void parse_evolution(Reader& r, const json& j, const std::string& path, EvolutionConfig& e) {
  if (!r.object(j, path, {"picture", "rrf_frequency", "rrf_theta_deg", "rrf_phi_deg", "magnus_order",
                          "quadrature_points_per_period"})) {
    return;
  }
  r.string(j, "picture", path, e.picture);
  r.number(j, "rrf_frequency", path, e.rrf_frequency);
  r.number(j, "rrf_theta_deg", path, e.rrf_theta_deg);
  r.number(j, "rrf_phi_deg", path, e.rrf_phi_deg);
  r.integer(j, "magnus_order", path, e.magnus_order);
  r.integer(j, "quadrature_points_per_period", path, e.quadrature_points_per_period);
  r.check(path, [&] { evolution_settings(e); });
}

inline void parse_acquisition(Reader& r, const json& j, const std::string& path, AcquisitionConfig& a) {
  if (!r.object(j, path, {"acquisition_time", "sample_count", "T2", "coil_theta_deg", "coil_phi_deg",
                          "reference_frequency"})) {
    return;
  }
  r.number(j, "acquisition_time", path, a.acquisition_time);
  r.integer(j, "sample_count", path, a.sample_count);
  r.number(j, "T2", path, a.T2);
  r.number(j, "coil_theta_deg", path, a.coil_theta_deg);
  r.number(j, "coil_phi_deg", path, a.coil_phi_deg);
  r.number(j, "reference_frequency", path, a.reference_frequency);
  if (!(a.acquisition_time > 0.0)) r.fail(path + ".acquisition_time", "must be > 0");
  if (!(a.T2 > 0.0)) r.fail(path + ".T2", "must be > 0");
  if (a.sample_count && *a.sample_count < 16) r.fail(path + ".sample_count", "must be >= 16");
}

inline void parse_transform(Reader& r, const json& j, const std::string& path, TransformConfig& t) {
  if (!r.object(j, path, {"start", "stop", "points", "opposite"})) return;
  r.number(j, "start", path, t.start, true);
  r.number(j, "stop", path, t.stop, true);
  r.integer(j, "points", path, t.points);
  r.boolean(j, "opposite", path, t.opposite);
  if (!(t.start < t.stop)) r.fail(path, "start must be < stop");
  if (t.points < 2) r.fail(path + ".points", "must be >= 2");
}

// Checks that need the assembled system: dimensions, protocol preconditions.
inline void check_model(Reader& r, const ExperimentConfig& cfg) {
  std::optional<MultiSpinSystem> system;
  try {
    system = build_system(cfg.system);
  } catch (const std::exception&) {
    return;  // already reported per spin
  }
  Matrix h0;
  try {
    h0 = build_h0(cfg.system, *system);
  } catch (const std::exception& e) {
    r.fail("system", e.what());
    return;
  }
  r.check("system.initial_state", [&] {
    if (cfg.system.initial_state.kind != InitialKind::matrix_file) build_initial_state(cfg, *system, h0);
  });
  for (std::size_t k = 0; k < cfg.sequence.size(); ++k) {
    const auto& s = cfg.sequence[k];
    const std::string p = "sequence[" + std::to_string(k) + "]";
    switch (s.type) {
      case StepType::pulse:
        if (s.site >= system->size()) {
          r.fail(p + ".site", "out of range for " + std::to_string(system->size()) + " spin(s)");
        } else if (s.angle_deg) {
          r.check(p, [&] { pulse_duration(s, *system); });
        }
        break;
      case StepType::z_rotation:
        if (s.site >= system->size()) r.fail(p + ".site", "out of range for " + std::to_string(system->size()) + " spin(s)");
        break;
      case StepType::pseudopure:
      case StepType::cnot_nqr:
        r.check(p, [&] { require_quadrupolar_three_halves(*system, h0, to_string(s.type)); });
        break;
      case StepType::cnot_nmr:
        r.check(p, [&] {
          if (!cfg.system.zeeman) throw DomainError("cnot_nmr needs a zeeman block");
          if (!cfg.system.j_coupling || cfg.system.j_coupling->size() != 2) {
            throw DomainError("cnot_nmr needs a 2x2 j_coupling block");
          }
          cnot_nmr_sequence(*system, zeeman_params(*cfg.system.zeeman), (*cfg.system.j_coupling)[0][1],
                            {s.B1, s.selectivity_margin});
        });
        break;
      case StepType::free_evolution:
        break;
    }
  }
}

}  // namespace detail

inline ExperimentConfig parse_config_json(const json& root, std::filesystem::path base_dir = {}) {
  detail::Reader r;
  ExperimentConfig cfg;
  cfg.base_dir = std::move(base_dir);
  if (r.object(root, "$", {"system", "sequence", "evolution", "acquisition", "transform"})) {
    if (!root.contains("system")) {
      r.fail("system", "required");
    } else {
      detail::parse_system(r, root.at("system"), "system", cfg.system);
    }
    if (root.contains("sequence")) {
      const auto& seq = root.at("sequence");
      if (!seq.is_array()) {
        r.fail("sequence", "expected an array of steps");
      } else {
        for (std::size_t k = 0; k < seq.size(); ++k) {
          StepConfig s;
          detail::parse_step(r, seq[k], "sequence[" + std::to_string(k) + "]", s);
          cfg.sequence.push_back(s);
        }
      }
    }
    if (root.contains("evolution")) detail::parse_evolution(r, root.at("evolution"), "evolution", cfg.evolution);
    if (root.contains("acquisition")) {
      cfg.acquisition.emplace();
      detail::parse_acquisition(r, root.at("acquisition"), "acquisition", *cfg.acquisition);
    }
    if (root.contains("transform")) {
      cfg.transform.emplace();
      detail::parse_transform(r, root.at("transform"), "transform", *cfg.transform);
    }
  }
  if (r.errors.empty()) detail::check_model(r, cfg);
  if (!r.errors.empty()) throw ConfigError(r.errors);
  return cfg;
}

inline ExperimentConfig parse_config_string(const std::string& text, std::filesystem::path base_dir = {}) {
  json root;
  try {
    root = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("syntax: ") + e.what()});
  }
  return parse_config_json(root, std::move(base_dir));
}

inline ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({path.string() + ": cannot open file"});
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_string(buf.str(), path.parent_path());
}

// ---- serialization ------------------------------------------------------

inline json to_json(const ExperimentConfig& cfg) {
  json sys;
  json spins = json::array();
  for (const auto& s : cfg.system.spins) {
    json js{{"I", s.I}, {"gamma_over_2pi", s.gamma_over_2pi}};
    if (s.quadrupole) {
      const auto& q = *s.quadrupole;
      js["quadrupole"] = {{"coupling_MHz", q.coupling_MHz}, {"eta", q.eta}, {"alpha_deg", q.alpha_deg},
                          {"beta_deg", q.beta_deg}, {"gamma_deg", q.gamma_deg}};
    }
    spins.push_back(js);
  }
  sys["spins"] = spins;
  if (cfg.system.zeeman) {
    const auto& z = *cfg.system.zeeman;
    sys["zeeman"] = {{"B0", z.B0}, {"theta_deg", z.theta_deg}, {"phi_deg", z.phi_deg}};
  }
  if (cfg.system.j_coupling) sys["j_coupling"] = *cfg.system.j_coupling;
  const auto& is = cfg.system.initial_state;
  json init{{"kind", to_string(is.kind)}};
  if (is.kind == InitialKind::pure) {
    if (is.index) {
      init["index"] = *is.index;
    } else {
      init["label"] = is.label;
    }
  }
  if (is.kind == InitialKind::populations) init["populations"] = is.populations;
  if (is.kind == InitialKind::matrix_file) init["path"] = is.path;
  sys["initial_state"] = init;
  sys["temperature"] = cfg.system.temperature;

  json seq = json::array();
  for (const auto& s : cfg.sequence) {
    json js{{"type", to_string(s.type)}};
    switch (s.type) {
      case StepType::pulse:
        js["polarization"] = s.polarization;
        if (s.polarization == "components") {
          json cs = json::array();
          for (const auto& c : s.components) {
            cs.push_back({{"B1", c.B1}, {"frequency", c.frequency}, {"phase_deg", c.phase_deg},
                          {"axis_theta_deg", c.axis_theta_deg}, {"axis_phi_deg", c.axis_phi_deg}});
          }
          js["components"] = cs;
        } else {
          js["B1"] = s.B1;
          js["frequency"] = s.frequency;
        }
        js["phase_deg"] = s.phase_deg;
        js["axis_theta_deg"] = s.axis_theta_deg;
        js["axis_phi_deg"] = s.axis_phi_deg;
        js["normal_theta_deg"] = s.normal_theta_deg;
        js["normal_phi_deg"] = s.normal_phi_deg;
        if (s.duration) js["duration"] = *s.duration;
        if (s.angle_deg) js["angle_deg"] = *s.angle_deg;
        js["alpha"] = s.alpha;
        js["site"] = s.site;
        break;
      case StepType::free_evolution:
        js["duration"] = s.duration.value_or(0.0);
        break;
      case StepType::z_rotation:
        js["site"] = s.site;
        js["angle_deg"] = s.angle_deg.value_or(0.0);
        break;
      case StepType::pseudopure:
        js["target"] = s.target;
        js["B1_single"] = s.B1_single;
        js["B1_two_photon"] = s.B1_two_photon;
        js["scan_max"] = s.scan_max;
        js["scan_points"] = s.scan_points;
        break;
      case StepType::cnot_nqr:
        js["B1"] = s.B1;
        break;
      case StepType::cnot_nmr:
        js["B1"] = s.B1;
        js["selectivity_margin"] = s.selectivity_margin;
        break;
    }
    seq.push_back(js);
  }

  const auto& e = cfg.evolution;
  json out{{"system", sys},
           {"sequence", seq},
           {"evolution",
            {{"picture", e.picture},
             {"rrf_frequency", e.rrf_frequency},
             {"rrf_theta_deg", e.rrf_theta_deg},
             {"rrf_phi_deg", e.rrf_phi_deg},
             {"magnus_order", e.magnus_order},
             {"quadrature_points_per_period", e.quadrature_points_per_period}}}};
  if (cfg.acquisition) {
    const auto& a = *cfg.acquisition;
    json ja{{"acquisition_time", a.acquisition_time}, {"T2", a.T2}, {"coil_theta_deg", a.coil_theta_deg},
            {"coil_phi_deg", a.coil_phi_deg}, {"reference_frequency", a.reference_frequency}};
    if (a.sample_count) ja["sample_count"] = *a.sample_count;
    out["acquisition"] = ja;
  }
  if (cfg.transform) {
    const auto& t = *cfg.transform;
    out["transform"] = {{"start", t.start}, {"stop", t.stop}, {"points", t.points}, {"opposite", t.opposite}};
  }
  return out;
}

}  // namespace spinsim
