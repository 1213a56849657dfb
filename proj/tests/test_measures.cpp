#include <gtest/gtest.h>

#include <random>

#include "ces/errors.hpp"
#include "ces/measures.hpp"
#include "oracles.hpp"

using namespace ces;

TEST(Measures, SingletIsMaximal) {
  const EntanglementReport r = report(states::singlet_density());
  EXPECT_NEAR(r.fidelity_singlet, 1.0, 1e-14);
  EXPECT_NEAR(r.concurrence, 1.0, 1e-12);
  EXPECT_NEAR(r.eof, 1.0, 1e-12);
  EXPECT_NEAR(r.negativity, 0.5, 1e-14);
  EXPECT_NEAR(r.log_negativity, 1.0, 1e-14);
  EXPECT_NEAR(r.s_max, 2.0 * std::sqrt(2.0), 1e-12);
}

TEST(Measures, ProductAndMixedStatesAreSeparable) {
  const EntanglementReport mixed = report(DensityMatrix::maximally_mixed(4));
  EXPECT_NEAR(mixed.fidelity_singlet, 0.25, 1e-15);
  EXPECT_NEAR(mixed.concurrence, 0.0, 1e-12);
  EXPECT_NEAR(mixed.negativity, 0.0, 1e-15);
  const CMatrix up = states::sigma_plus().amplitudes() * states::sigma_plus().amplitudes().adjoint();
  const EntanglementReport product = report(DensityMatrix(tensor(up, up)));
  EXPECT_NEAR(product.concurrence, 0.0, 1e-7);
  EXPECT_NEAR(product.log_negativity, 0.0, 1e-12);
}

TEST(Measures, WernerClosedForms) {
  for (double p : {0.2, 1.0 / 3.0, 0.6, 0.85}) {
    const EntanglementReport r = report(states::werner(p));
    const double f = (1.0 + 3.0 * p) / 4.0;
    const double c = std::max(0.0, (3.0 * p - 1.0) / 2.0);
    const double n = std::max(0.0, (3.0 * p - 1.0) / 4.0);
    EXPECT_NEAR(r.fidelity_singlet, f, 1e-14);
    EXPECT_NEAR(r.concurrence, c, 1e-7);
    EXPECT_NEAR(r.negativity, n, 1e-14);
    EXPECT_NEAR(r.log_negativity, std::log2(2.0 * n + 1.0), 1e-14);
    const double x = 0.5 * (1.0 + std::sqrt(1.0 - c * c));
    EXPECT_NEAR(r.eof, oracle::binary_entropy(x), 1e-6);
  }
}

TEST(Measures, MatchIndependentOraclesOnRandomStates) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 40; ++trial) {
    const CMatrix rho = trial % 3 == 0 ? oracle::random_pure(4, rng) : oracle::random_state(4, rng);
    const DensityMatrix dm(rho);
    // Pure states are rank one, where the matrix square root loses accuracy.
    const double tol = trial % 3 == 0 ? 1e-6 : 1e-10;
    EXPECT_NEAR(concurrence(dm), oracle::concurrence(rho), tol);
    EXPECT_NEAR(log_negativity(dm).negativity, oracle::negativity(rho), 1e-12);
    EXPECT_NEAR(fidelity_singlet(dm),
                oracle::expectation(rho, states::singlet().amplitudes()), 1e-14);
  }
}

TEST(Measures, LocalUnitaryInvariance) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 20; ++trial) {
    const CMatrix rho = oracle::random_state(4, rng);
    const CMatrix u = tensor(oracle::random_unitary(2, rng), oracle::random_unitary(2, rng));
    const EntanglementReport a = report(DensityMatrix(rho));
    const EntanglementReport b = report(DensityMatrix(u * rho * u.adjoint()));
    EXPECT_NEAR(a.concurrence, b.concurrence, 1e-10);
    EXPECT_NEAR(a.eof, b.eof, 1e-9);
    EXPECT_NEAR(a.negativity, b.negativity, 1e-12);
    EXPECT_NEAR(a.s_max, b.s_max, 1e-12);
  }
}

TEST(Measures, PureStateIdentities) {
  // For pure states C = 2 |det of the coefficient matrix| and N = C / 2.
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    std::normal_distribution<double> g;
    CVector psi(4);
    for (int k = 0; k < 4; ++k) psi(k) = Complex(g(rng), g(rng));
    psi.normalize();
    const double c = 2.0 * std::abs(psi(0) * psi(3) - psi(1) * psi(2));
    const DensityMatrix rho(psi * psi.adjoint());
    EXPECT_NEAR(concurrence(rho), c, 1e-6);
    EXPECT_NEAR(log_negativity(rho).negativity, c / 2.0, 1e-12);
  }
}

TEST(Measures, RejectInvalidInput) {
  EXPECT_THROW(report(DensityMatrix::maximally_mixed(2)), DimensionError);
  CMatrix bad = CMatrix::Identity(4, 4) / 4.0;
  bad(0, 0) = -0.1;
  bad(1, 1) = 0.6;
  EXPECT_THROW(concurrence(DensityMatrix(bad)), ValidationError);
}

TEST(Measures, EofFromConcurrenceEndpoints) {
  EXPECT_DOUBLE_EQ(eof_from_concurrence(0.0), 0.0);
  EXPECT_NEAR(eof_from_concurrence(1.0), 1.0, 1e-15);
  double prev = 0.0;
  for (double c = 0.05; c <= 1.0; c += 0.05) {
    const double e = eof_from_concurrence(c);
    EXPECT_GT(e, prev);
    prev = e;
  }
}
