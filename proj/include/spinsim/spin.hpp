#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "spinsim/operators.hpp"

namespace spinsim {

/// Largest supported spin quantum number is 9/2.
inline constexpr int kMaxTwiceSpin = 9;

/// Unit vector with polar angle theta and azimuth phi.
inline Eigen::Vector3d direction(double theta, double phi) {
  return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

namespace detail {

inline int twice_spin(double quantum_number) {
  const double two_i = 2.0 * quantum_number;
  const double rounded = std::round(two_i);
  if (!std::isfinite(two_i) || std::abs(two_i - rounded) > 1e-9 || rounded < 1.0 ||
      rounded > kMaxTwiceSpin) {
    throw DomainError("spin quantum number must be a half-integer in [1/2, 9/2], got " +
                      std::to_string(quantum_number));
  }
  return static_cast<int>(rounded);
}

}  // namespace detail

/// Angular momentum matrices in the basis |m⟩, m = I, I-1, ..., -I
/// (first basis vector is m = +I). Units of ħ are factored out.
struct SpinOperators {
  Matrix x, y, z, plus, minus, squared;
};

inline SpinOperators spin_operators(double quantum_number) {
  const int two_i = detail::twice_spin(quantum_number);
  const Index d = two_i + 1;
  const double s = 0.5 * two_i;

  SpinOperators ops;
  ops.z = Matrix::Zero(d, d);
  ops.plus = Matrix::Zero(d, d);
  for (Index k = 0; k < d; ++k) {
    const double m = s - static_cast<double>(k);
    ops.z(k, k) = m;
    // I+ |m⟩ lands on |m+1⟩, which sits at index k-1.
    if (k > 0) ops.plus(k - 1, k) = std::sqrt(s * (s + 1.0) - m * (m + 1.0));
  }
  ops.minus = ops.plus.adjoint();
  ops.x = 0.5 * (ops.plus + ops.minus);
  ops.y = (-0.5 * kI) * (ops.plus - ops.minus);
  ops.squared = ops.x * ops.x + ops.y * ops.y + ops.z * ops.z;
  return ops;
}

/// Spin-I nucleus with gyromagnetic ratio γ/2π in MHz/T.
class NuclearSpin {
 public:
  NuclearSpin(double quantum_number, double gyro_ratio_over_2pi)
      : two_i_(detail::twice_spin(quantum_number)), gamma_(gyro_ratio_over_2pi) {
    if (!std::isfinite(gamma_)) throw DomainError("gyromagnetic ratio must be finite");
  }

  double quantum_number() const noexcept { return 0.5 * two_i_; }
  int twice_quantum_number() const noexcept { return two_i_; }
  double gyro_ratio_over_2pi() const noexcept { return gamma_; }
  Index dim() const noexcept { return two_i_ + 1; }

  /// Magnetic quantum number of basis vector k.
  double m_of(Index k) const { return quantum_number() - static_cast<double>(k); }
  /// Basis index of magnetic quantum number m.
  Index index_of(double m) const {
    const double k = quantum_number() - m;
    const double r = std::round(k);
    if (std::abs(k - r) > 1e-9 || r < 0 || r >= static_cast<double>(dim())) {
      throw DomainError("magnetic quantum number " + std::to_string(m) + " not in spin " +
                        std::to_string(quantum_number()));
    }
    return static_cast<Index>(r);
  }

  SpinOperators operators() const { return spin_operators(quantum_number()); }

  bool operator==(const NuclearSpin&) const = default;

 private:
  int two_i_;
  double gamma_;
};

/// Ordered list of nuclei on the product space ⊗_k C^{2I_k+1} (first spin is
/// the slow Kronecker index).
class MultiSpinSystem {
 public:
  explicit MultiSpinSystem(std::vector<NuclearSpin> spins) : spins_(std::move(spins)) {
    if (spins_.empty()) throw DomainError("MultiSpinSystem: at least one spin is required");
    total_dim_ = 1;
    for (const auto& s : spins_) {
      dims_.push_back(s.dim());
      total_dim_ *= s.dim();
    }
  }

  MultiSpinSystem(const NuclearSpin& single) : MultiSpinSystem(std::vector<NuclearSpin>{single}) {}

  const std::vector<NuclearSpin>& spins() const noexcept { return spins_; }
  const NuclearSpin& spin(std::size_t site) const { return spins_.at(site); }
  std::size_t size() const noexcept { return spins_.size(); }
  const std::vector<Index>& dims() const noexcept { return dims_; }
  Index total_dim() const noexcept { return total_dim_; }

 private:
  std::vector<NuclearSpin> spins_;
  std::vector<Index> dims_;
  Index total_dim_ = 1;
};

/// 1 ⊗ ... ⊗ op ⊗ ... ⊗ 1 with op at position `site`.
inline Matrix lift_operator(const MultiSpinSystem& system, std::size_t site, const Matrix& op) {
  if (site >= system.size()) {
    throw DimensionError("lift_operator: site " + std::to_string(site) + " out of range for " +
                         std::to_string(system.size()) + " spins");
  }
  const Index d = system.dims()[site];
  if (op.rows() != d || op.cols() != d) {
    throw DimensionError("lift_operator: operator dimension " + std::to_string(op.rows()) +
                         " does not match spin dimension " + std::to_string(d));
  }
  Index before = 1;
  for (std::size_t k = 0; k < site; ++k) before *= system.dims()[k];
  const Index after = system.total_dim() / (before * d);
  return tensor_product(tensor_product(identity(before), op), identity(after));
}

/// Σ_sites weight(site) · (n̂ · I_site).
template <typename Weight>
Matrix weighted_spin_component(const MultiSpinSystem& system, const Eigen::Vector3d& n,
                               Weight&& weight) {
  Matrix out = Matrix::Zero(system.total_dim(), system.total_dim());
  for (std::size_t site = 0; site < system.size(); ++site) {
    const auto ops = system.spin(site).operators();
    const Matrix local = n.x() * ops.x + n.y() * ops.y + n.z() * ops.z;
    out += weight(site) * lift_operator(system, site, local);
  }
  return out;
}

/// Total spin component n̂ · Σ_k I_k.
inline Matrix total_spin_component(const MultiSpinSystem& system, const Eigen::Vector3d& n) {
  return weighted_spin_component(system, n, [](std::size_t) { return 1.0; });
}

/// Σ_k I+_k.
inline Matrix total_raising(const MultiSpinSystem& system) {
  Matrix out = Matrix::Zero(system.total_dim(), system.total_dim());
  for (std::size_t site = 0; site < system.size(); ++site) {
    out += lift_operator(system, site, system.spin(site).operators().plus);
  }
  return out;
}

}  // namespace spinsim
