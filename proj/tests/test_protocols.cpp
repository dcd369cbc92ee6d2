#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "spinsim/protocols.hpp"

using namespace spinsim;

namespace {

const MultiSpinSystem kKclo3(NuclearSpin(1.5, 4.17));
const Matrix kKclo3H0 = h_quadrupole(kKclo3, 0, {56.2, 0.0, {}});

const MultiSpinSystem kPair({NuclearSpin(0.5, 42.577), NuclearSpin(0.5, 10.708)});
const ZeemanParams kField{2.35, 0.0, 0.0};
constexpr double kJ = 0.02;

Matrix sequence_unitary(const MultiSpinSystem& sys, const Matrix& h0, const std::vector<PulseSequenceStep>& steps) {
  Matrix u = identity(sys.total_dim());
  double clock = 0.0;
  for (const auto& s : steps) {
    if (s.kind == PulseSequenceStep::Kind::pulse) {
      u = pulse_propagator(sys, h0, s.pulse.delayed(clock), s.duration, {}).unitary * u;
    } else if (s.kind == PulseSequenceStep::Kind::free_evolution) {
      u = oracle::taylor_expm(Complex(0.0, -kTwoPi * s.duration) * h0) * u;
    } else {
      u = z_rotation_unitary(sys, s.site, s.angle) * u;
    }
    clock += s.duration;
  }
  return u;
}

}  // namespace

TEST(Calibration, RotationFactor) {
  EXPECT_NEAR(rotation_factor_alpha(0.5, -0.5), 1.0, 1e-15);
  EXPECT_NEAR(rotation_factor_alpha(1.5, 0.5), std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(rotation_factor_alpha(1.5, -1.5), std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(rotation_factor_alpha(1.5, -0.5), 2.0, 1e-15);
  EXPECT_THROW(rotation_factor_alpha(1.5, 1.5), DomainError);
  EXPECT_THROW(rotation_factor_alpha(0.5, -1.5), DomainError);
}

TEST(Calibration, PulseDuration) {
  const double t = pulse_duration_for_angle(4.17, 0.01, std::sqrt(3.0), std::numbers::pi);
  EXPECT_NEAR(t, 0.5 / (4.17 * std::sqrt(3.0) * 0.01), 1e-12);
  EXPECT_NEAR(t, 6.923, 1e-3);
  EXPECT_NEAR(pulse_duration_for_angle(4.17, 0.01, std::sqrt(3.0), std::numbers::pi / 2), t / 2, 1e-12);
  EXPECT_NEAR(pulse_duration_for_angle(4.17, 0.01, 2 * std::sqrt(3.0), std::numbers::pi), t / 2, 1e-12);
  EXPECT_THROW(pulse_duration_for_angle(4.17, 0.0, 1.0, 1.0), DomainError);
  EXPECT_THROW(pulse_duration_for_angle(4.17, 0.01, 0.0, 1.0), DomainError);
  EXPECT_THROW(pulse_duration_for_angle(4.17, 0.01, 1.0, 0.0), DomainError);
}

TEST(Calibration, TransferFollowsSinSquared) {
  const MultiSpinSystem sys(NuclearSpin(0.5, 10.0));
  const Matrix h0 = h_zeeman(sys, {1.0, 0.0, 0.0});  // 10 MHz
  const auto up = DensityMatrix::basis_state(2, 0);
  for (double angle : {std::numbers::pi / 3, std::numbers::pi / 2, 2 * std::numbers::pi / 3, std::numbers::pi}) {
    const double t = pulse_duration_for_angle(10.0, 0.01, 1.0, angle);
    const auto rho = evolve(sys, h0, up, Pulse::linear(0.01, 10.0, 0.0, std::numbers::pi / 2, 0.0), t);
    EXPECT_NEAR(rho.population(1), std::pow(std::sin(angle / 2), 2), 1e-2) << angle;
  }
}

TEST(RunSequence, EmptyAndComposition) {
  const MultiSpinSystem sys(NuclearSpin(0.5, 10.0));
  const Matrix h0 = h_zeeman(sys, {1.0, 0.0, 0.0});
  const auto up = DensityMatrix::basis_state(2, 0);
  EXPECT_EQ(run_sequence(sys, h0, up, {}).matrix(), up.matrix());

  const Pulse p = Pulse::linear(0.01, 10.0, 0.0, std::numbers::pi / 2, 0.0);
  const double half = pulse_duration_for_angle(10.0, 0.01, 1.0, std::numbers::pi / 2);
  const auto two = run_sequence(sys, h0, up, {PulseSequenceStep::apply_pulse(p, half), PulseSequenceStep::apply_pulse(p, half)});
  const auto one = evolve(sys, h0, up, p, 2 * half);
  EXPECT_GT(two.population(1), 0.99);
  EXPECT_LT(max_abs_diff(two.matrix(), one.matrix()), 1e-6);
  EXPECT_THROW(PulseSequenceStep::free(-1.0), DomainError);
}

TEST(RunSequence, ZRotation) {
  const auto u = z_rotation_unitary(kPair, 1, std::numbers::pi / 2);
  EXPECT_TRUE(is_unitary(u));
  EXPECT_NEAR(std::arg(u(0, 0) / u(1, 1)), -std::numbers::pi / 2, 1e-14);
  EXPECT_LT(max_abs(commutator(u, h_zeeman(kPair, kField))), 1e-12);
}

TEST(QubitMap, Labels) {
  for (Index k = 0; k < 4; ++k) EXPECT_EQ(QubitBasisMap::index_of(QubitBasisMap::label_of(k)), k);
  EXPECT_DOUBLE_EQ(QubitBasisMap::spin_three_halves_m("10"), -0.5);
  EXPECT_THROW(QubitBasisMap::index_of("2"), DomainError);
  EXPECT_THROW(QubitBasisMap::label_of(4), DomainError);
}

TEST(Exchange, SinglePhotonSelectsHandedness) {
  const auto low = single_photon_exchange(kKclo3, kKclo3H0, -1.5, 0.01);
  const auto high = single_photon_exchange(kKclo3, kKclo3H0, 0.5, 0.01);
  EXPECT_EQ(low.handedness, Handedness::sigma_minus);
  EXPECT_EQ(high.handedness, Handedness::sigma_plus);
  EXPECT_NEAR(low.frequency, 28.1, 1e-12);
  EXPECT_NEAR(low.duration, 6.923 / 2, 1e-3);
  EXPECT_THROW(single_photon_exchange(kKclo3, kKclo3H0, -0.5, 0.01), DomainError);
  EXPECT_THROW(single_photon_exchange(kPair, identity(4), -1.5, 0.01), DomainError);
}

TEST(Pseudopure, StructureForOneTarget) {
  const auto res = pseudopure_temporal_average(kKclo3, kKclo3H0, "01");
  EXPECT_NEAR(trace(res.state.matrix()).real(), 1.0, 1e-12);
  const auto st = pseudopure_structure(res.state);
  EXPECT_LT(st.residual, 1e-2);
  EXPECT_GT(std::abs(st.state(1)), 0.99);
  EXPECT_GT(res.two_photon.exchanged_fraction, 0.95);
  EXPECT_THROW(pseudopure_temporal_average(kKclo3, kKclo3H0, "12"), DomainError);
}

TEST(Pseudopure, StructureOfSyntheticState) {
  Matrix m = 0.2 * identity(4);
  m(2, 2) += 0.2;
  const auto st = pseudopure_structure(DensityMatrix(m));
  EXPECT_NEAR(st.identity_weight, 0.2, 1e-14);
  EXPECT_NEAR(st.pure_weight, 0.2, 1e-14);
  EXPECT_NEAR(std::abs(st.state(2)), 1.0, 1e-14);
  EXPECT_LT(st.residual, 1e-12);
}

TEST(CnotNqr, TruthTableAndInvolution) {
  const std::array<Index, 4> expected{0, 1, 3, 2};
  for (Index k = 0; k < 4; ++k) {
    const auto out = cnot_nqr(kKclo3, kKclo3H0, DensityMatrix::basis_state(4, k), 0.01);
    EXPECT_GT(out.population(expected[k]), 0.99) << QubitBasisMap::label_of(k);
  }
  Matrix diag = Matrix::Zero(4, 4);
  diag.diagonal() << 0.4, 0.3, 0.2, 0.1;
  const DensityMatrix in(diag);
  const auto twice = cnot_nqr(kKclo3, kKclo3H0, cnot_nqr(kKclo3, kKclo3H0, in, 0.01), 0.01);
  EXPECT_LT((twice.populations() - in.populations()).cwiseAbs().maxCoeff(), 2e-2);
}

TEST(CnotNmr, TruthTable) {
  const std::array<Index, 4> expected{0, 1, 3, 2};
  for (Index k = 0; k < 4; ++k) {
    const auto out = cnot_nmr(kPair, kField, kJ, DensityMatrix::basis_state(4, k));
    EXPECT_GE(out.population(expected[k]), 0.95) << QubitBasisMap::label_of(k);
  }
}

TEST(CnotNmr, SequenceShapeAndInverse) {
  const auto steps = cnot_nmr_sequence(kPair, kField, kJ, {});
  ASSERT_EQ(steps.size(), 5u);
  EXPECT_EQ(steps[1].kind, PulseSequenceStep::Kind::free_evolution);
  EXPECT_NEAR(steps[1].duration, 25.0, 1e-12);
  EXPECT_NEAR(steps[0].pulse.components()[0].frequency, 10.708 * 2.35, 1e-12);

  const Matrix h0 = h_zeeman(kPair, kField) + h_j_coupling(kPair, JCouplingMatrix::pair(kJ));
  const Matrix u = sequence_unitary(kPair, h0, steps);
  std::mt19937_64 rng(42);
  const Matrix rho = oracle::random_density_matrix(4, rng);
  EXPECT_LT(max_abs_diff(u.adjoint() * (u * rho * u.adjoint()) * u, rho), 1e-6);
  const auto direct = run_sequence(kPair, h0, DensityMatrix(rho), steps);
  EXPECT_LT(max_abs_diff(direct.matrix(), u * rho * u.adjoint()), 1e-6);
}

TEST(CnotNmr, Errors) {
  const MultiSpinSystem same({NuclearSpin(0.5, 10.0), NuclearSpin(0.5, 10.0)});
  EXPECT_THROW(cnot_nmr_sequence(same, kField, kJ, {}), DomainError);
  EXPECT_THROW(cnot_nmr_sequence(kPair, kField, 0.0, {}), DomainError);
  EXPECT_THROW(cnot_nmr_sequence(kPair, {2.35, 0.3, 0.0}, kJ, {}), DomainError);
  EXPECT_THROW(cnot_nmr_sequence(kKclo3, kField, kJ, {}), DomainError);
}
