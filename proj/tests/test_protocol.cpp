#include <gtest/gtest.h>

#include <random>

#include "ces/errors.hpp"
#include "ces/measures.hpp"
#include "ces/protocol.hpp"
#include "oracles.hpp"

using namespace ces;

namespace {

// Singlet fidelity of the final state, written out by hand.
double fidelity_oracle(const NoiseParams& n, double dt) {
  const double v = n.v0 * std::exp(-(dt / n.tau_e_us) * (dt / n.tau_e_us));
  const double stored = (1.0 - n.p_white) * (1.0 + v) / 2.0 + n.p_white / 4.0;
  return n.eta_pump * stored + (1.0 - n.eta_pump) / 4.0;
}

}  // namespace

TEST(AtomPhoton, IsMaximallyEntangledWithExpectedDiagonal) {
  const DensityMatrix rho = atom_photon_state();
  EXPECT_TRUE(validate_density(rho).valid());
  EXPECT_NEAR(rho.purity(), 1.0, 1e-14);
  const double diag[4] = {0.5, 0.0, 0.0, 0.5};
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(rho(k, k).real(), diag[k], 1e-15);
  EXPECT_NEAR(rho(0, 3).real(), -0.5, 1e-15);
  EXPECT_NEAR(concurrence(rho), 1.0, 1e-12);
}

TEST(Mapping, IdealSequenceYieldsSinglet) {
  const DensityMatrix pair = map_to_photon_pair(atom_photon_state());
  EXPECT_LT(max_abs(pair.matrix() - states::singlet_density().matrix()), 1e-15);
  EXPECT_THROW(map_to_photon_pair(DensityMatrix::maximally_mixed(2)), DimensionError);
}

TEST(Mapping, IsAPermutationOfTheBasis) {
  // |a=0 (m=-1), p> -> photon1 = p, photon2 = sigma-.
  for (int a = 0; a < 2; ++a)
    for (int p = 0; p < 2; ++p) {
      CMatrix m = CMatrix::Zero(4, 4);
      m(2 * a + p, 2 * a + p) = 1.0;
      const CMatrix out = map_to_photon_pair(DensityMatrix(m)).matrix();
      const int target = 2 * p + (1 - a);
      EXPECT_NEAR(out(target, target).real(), 1.0, 1e-15);
    }
}

TEST(CoherenceFactor, GaussianDecay) {
  NoiseParams n;
  n.v0 = 0.9;
  n.tau_e_us = 5.7;
  EXPECT_NEAR(coherence_factor(n, 0.0), 0.9, 1e-15);
  EXPECT_NEAR(coherence_factor(n, 5.7), 0.9 * std::exp(-1.0), 1e-15);
}

TEST(FinalState, FidelityMatchesClosedForm) {
  for (double v0 : {1.0, 0.9}) {
    for (double pw : {0.0, 0.1}) {
      for (double eta : {1.0, 0.8}) {
        NoiseParams n;
        n.v0 = v0;
        n.p_white = pw;
        n.eta_pump = eta;
        for (double dt : {0.0, 0.8, 4.0, 12.0}) {
          EXPECT_NEAR(fidelity_singlet(final_state(n, dt)), fidelity_oracle(n, dt), 1e-14);
        }
      }
    }
  }
}

TEST(FinalState, DephasingAloneDecaysToOneHalf) {
  NoiseParams n;  // v0 = 1, p_white = 0, eta_pump = 1
  EXPECT_NEAR(fidelity_singlet(final_state(n, 0.0)), 1.0, 1e-14);
  EXPECT_NEAR(fidelity_singlet(final_state(n, 200.0)), 0.5, 1e-12);
  // Population terms survive, coherences vanish.
  const DensityMatrix late = final_state(n, 200.0);
  EXPECT_NEAR(late(1, 1).real(), 0.5, 1e-14);
  EXPECT_NEAR(std::abs(late(1, 2)), 0.0, 1e-12);
}

TEST(Channels, PreservePhysicalityOnRandomInputs) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const DensityMatrix rho(oracle::random_state(4, rng));
    NoiseParams n;
    n.v0 = u(rng);
    n.p_white = u(rng);
    n.eta_pump = u(rng);
    const double dt = 10.0 * u(rng);
    for (const DensityMatrix& out : {apply_storage_noise(rho, n, dt), pumping_channel(rho, u(rng)),
                                     map_to_photon_pair(rho)}) {
      const DensityDiagnostics d = validate_density(out);
      EXPECT_TRUE(d.valid()) << d.min_eigenvalue << " " << d.trace_defect;
    }
  }
}

TEST(Channels, PumpingIsLinearMixWithIdentity) {
  const DensityMatrix s = states::singlet_density();
  const CMatrix out = pumping_channel(s, 0.8).matrix();
  EXPECT_LT(max_abs(out - states::werner(0.8).matrix()), 1e-15);
}

TEST(NoiseParams, ValidationNamesField) {
  NoiseParams n;
  n.v0 = 1.5;
  try {
    n.validate();
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("noise.v0"), std::string::npos);
  }
  n.v0 = 1.0;
  n.tau_e_us = 0.0;
  EXPECT_THROW(n.validate(), ValidationError);
}

TEST(RateBudget, DefaultsMatchQuotedScale) {
  const RateReport r = rate_budget(EfficiencyParams{});
  EXPECT_NEAR(r.p_pair_detect, 0.086 * 0.086 * 0.04, 1e-18);
  EXPECT_NEAR(r.pairs_produced_per_s, 50e3 * 0.086 * 0.086, 1e-9);
  EXPECT_NEAR(r.pairs_detected_per_s, r.pairs_produced_per_s * 0.04, 1e-9);
}

TEST(RateBudget, UnitEfficiencyDetectsEverything) {
  EfficiencyParams e;
  e.eta_det = 1.0;
  const RateReport r = rate_budget(e);
  EXPECT_DOUBLE_EQ(r.pairs_detected_per_s, r.pairs_produced_per_s);
}

TEST(RateBudget, LinearInRepetitionRate) {
  EfficiencyParams e;
  const RateReport base = rate_budget(e);
  e.rep_rate_khz *= 2.0;
  const RateReport doubled = rate_budget(e);
  EXPECT_DOUBLE_EQ(doubled.pairs_produced_per_s, 2.0 * base.pairs_produced_per_s);
  EXPECT_DOUBLE_EQ(doubled.pairs_detected_per_s, 2.0 * base.pairs_detected_per_s);
  EXPECT_DOUBLE_EQ(doubled.p_pair_detect, base.p_pair_detect);
}
