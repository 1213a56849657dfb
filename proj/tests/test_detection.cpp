#include <gtest/gtest.h>

#include <random>
#include <set>

#include "ces/detection.hpp"
#include "ces/errors.hpp"
#include "ces/measures.hpp"
#include "ces/protocol.hpp"
#include "oracles.hpp"

using namespace ces;

namespace {

DetectorParams noisy_detector() {
  DetectorParams d;
  d.eta_det = 0.35;
  d.dark_rate = 0.02;
  d.window_fraction = 0.7;
  d.late_emission_error = 0.3;
  d.late_threshold = 0.4;
  d.pulse_decay = 2.0;
  return d;
}

CMatrix port_projector(double theta, int port) {
  const CVector k = oracle::linear_ket(theta + 90.0 * port);
  return k * k.adjoint();
}

// Probability per sequence of an ordered coincidence (photon 1 port i,
// photon 2 port j) with photon 1 in arm A, found by enumerating every branch
// of the detection chain.
std::array<double, 4> enumerate_chain(const CMatrix& rho, double a, double b,
                                      const DetectorParams& d) {
  auto cdf = [&](double t) {
    return (1.0 - std::exp(-d.pulse_decay * t)) / (1.0 - std::exp(-d.pulse_decay));
  };
  const double early = cdf(std::min(d.late_threshold, d.window_fraction));
  const double in_window = cdf(d.window_fraction);
  struct TimeClass {
    double prob;
    bool in_window;
    double depol;
  };
  const TimeClass classes[3] = {{early, true, 0.0},
                                {in_window - early, true, d.late_emission_error},
                                {1.0 - in_window, false, 0.0}};
  CMatrix reduced1 = CMatrix::Zero(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) reduced1(i, j) += rho(2 * i + k, 2 * j + k);

  std::array<double, 4> p{};
  for (const TimeClass& tc : classes) {
    for (int depol = 0; depol < 2; ++depol) {
      const double pd = depol ? tc.depol : 1.0 - tc.depol;
      if (pd == 0.0) continue;
      const CMatrix state = depol ? ces::tensor(reduced1, CMatrix::Identity(2, 2) / 2.0) : rho;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          const CMatrix p1 = port_projector(a, i);
          const CMatrix p2 = port_projector(b, j);
          const double joint = (state * ces::tensor(p1, p2)).trace().real();
          const double m1 = (state * ces::tensor(p1, CMatrix::Identity(2, 2))).trace().real();
          const double m2 = (state * ces::tensor(CMatrix::Identity(2, 2), p2)).trace().real();
          // Arm 1: dark (port uniform) overrides; else photon with eta.
          const double dark1 = d.dark_rate;
          const double phot1 = (1.0 - d.dark_rate) * d.eta_det;
          const double dark2 = d.dark_rate * d.window_fraction;
          const double phot2 = (1.0 - dark2) * d.eta_det * (tc.in_window ? 1.0 : 0.0);
          const double cell = phot1 * phot2 * joint + phot1 * dark2 * m1 * 0.5 +
                              dark1 * phot2 * 0.5 * m2 + dark1 * dark2 * 0.25;
          p[2 * i + j] += 0.25 * tc.prob * pd * cell;  // 1/4: photon 1 in A, photon 2 in B
        }
    }
  }
  return p;
}

void expect_counts_near(const std::array<std::uint64_t, 4>& counts, const std::array<double, 4>& p,
                        std::uint64_t n) {
  for (int k = 0; k < 4; ++k) {
    const double mean = p[k] * static_cast<double>(n);
    const double sd = std::sqrt(mean * (1.0 - p[k]));
    EXPECT_NEAR(static_cast<double>(counts[k]), mean, 5.0 * sd + 1e-9) << "cell " << k;
  }
}

}  // namespace

TEST(Angles, NormalizeAndCompare) {
  EXPECT_DOUBLE_EQ(normalize_angle(-22.5), 157.5);
  EXPECT_DOUBLE_EQ(normalize_angle(180.0), 0.0);
  EXPECT_DOUBLE_EQ(normalize_angle(405.0), 45.0);
  EXPECT_TRUE(same_angle(-22.5, 157.5));
  EXPECT_TRUE(same_angle(179.9999999999, 0.0));
  EXPECT_FALSE(same_angle(0.0, 90.0));
  EXPECT_EQ(MeasurementSetting(0, -22.5), MeasurementSetting(180, 157.5));
}

TEST(Basis, LabelsRoundTrip) {
  for (Basis b : kBases) EXPECT_EQ(parse_basis(std::string(1, basis_label(b))), b);
  EXPECT_EQ(parse_basis("RL"), Basis::RL);
  EXPECT_EQ(parse_basis("A"), Basis::DA);
  EXPECT_THROW(parse_basis("X"), DataError);
}

TEST(Projectors, AnalyzerPortsAreComplementaryRankOne) {
  for (double theta : {0.0, 22.5, 45.0, 100.0}) {
    const ProjectorPair p = analyzer_projectors(theta);
    EXPECT_LT(max_abs(p.up.matrix() + p.down.matrix() - CMatrix::Identity(2, 2)), 1e-15);
    EXPECT_LT(max_abs(p.up.matrix() * p.up.matrix() - p.up.matrix()), 1e-15);
    EXPECT_LT(max_abs(p.up.matrix() - port_projector(theta, 0)), 1e-15);
  }
}

TEST(Projectors, CircularBasisIsTheSigmaBasis) {
  // The quarter-wave plate turns R/L into the circular (sigma) eigenbasis.
  const ProjectorPair rl = basis_projectors(Basis::RL);
  const CMatrix minus = states::sigma_minus().amplitudes() * states::sigma_minus().amplitudes().adjoint();
  EXPECT_LT(max_abs(rl.up.matrix() - minus), 1e-15);
  const CMatrix q = quarter_wave_plate();
  EXPECT_LT(max_abs(q.adjoint() * q - CMatrix::Identity(2, 2)), 1e-15);
}

TEST(Projectors, TomographyBasesAreMutuallyUnbiased) {
  for (Basis a : kBases)
    for (Basis b : kBases) {
      if (a == b) continue;
      const double overlap =
          (basis_projectors(a).up.matrix() * basis_projectors(b).up.matrix()).trace().real();
      EXPECT_NEAR(overlap, 0.5, 1e-15);
    }
}

TEST(OutcomeProbabilities, MatchJonesVectorOracle) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const CMatrix rho = oracle::random_state(4, rng);
    const double a = 17.0 * trial, b = 33.0 + 11.0 * trial;
    const OutcomeProbabilities p = outcome_probabilities(DensityMatrix(rho), {a, b});
    double total = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        const CVector ket = oracle::kron(oracle::linear_ket(a + 90 * i), oracle::linear_ket(b + 90 * j));
        EXPECT_NEAR(p[2 * i + j], oracle::expectation(rho, ket), 1e-14);
        total += p[2 * i + j];
      }
    EXPECT_NEAR(total, 1.0, 1e-14);
  }
}

TEST(DetectedState, IdealDetectorIsIdentity) {
  std::mt19937_64 rng(6);
  const DensityMatrix rho(oracle::random_state(4, rng));
  EXPECT_LT(max_abs(detected_state(rho, DetectorParams{}).matrix() - rho.matrix()), 1e-15);
  EXPECT_DOUBLE_EQ(coincidence_probability(DetectorParams{}), 1.0);
}

TEST(DetectedState, MatchesBranchEnumeration) {
  std::mt19937_64 rng(8);
  const DetectorParams det = noisy_detector();
  for (int trial = 0; trial < 5; ++trial) {
    const DensityMatrix rho(oracle::random_state(4, rng));
    const DensityMatrix seen = detected_state(rho, det);
    EXPECT_TRUE(validate_density(seen).valid());
    const double pc = coincidence_probability(det);
    for (double a : {0.0, 30.0})
      for (double b : {22.5, 120.0}) {
        const auto ref = enumerate_chain(rho.matrix(), a, b, det);
        const auto p = outcome_probabilities(seen, {a, b});
        for (int k = 0; k < 4; ++k) EXPECT_NEAR(0.25 * pc * p[k], ref[k], 1e-15);
      }
  }
}

TEST(DetectedState, DepolarizePhoton2KeepsMarginal) {
  std::mt19937_64 rng(10);
  const DensityMatrix rho(oracle::random_state(4, rng));
  const DensityMatrix out = depolarize_photon2(rho, 0.4);
  EXPECT_LT(max_abs(partial_trace(out, 1).matrix() - partial_trace(rho, 1).matrix()), 1e-15);
  EXPECT_TRUE(validate_density(out).valid());
}

TEST(DetectorParams, WindowAcceptanceAndValidation) {
  DetectorParams d;
  d.pulse_decay = 2.0;
  d.window_fraction = 0.4;
  EXPECT_NEAR(d.window_acceptance(), (1 - std::exp(-0.8)) / (1 - std::exp(-2.0)), 1e-15);
  EXPECT_NEAR(d.late_fraction(), 0.0, 1e-15);
  d.window_fraction = 1.0;
  EXPECT_NEAR(d.late_fraction(), (std::exp(-0.8) - std::exp(-2.0)) / (1 - std::exp(-2.0)), 1e-15);
  // Inverse CDF sampling is consistent with the CDF.
  for (double u : {0.0, 0.1, 0.5, 0.9}) EXPECT_NEAR(d.emission_cdf(d.emission_time(u)), u, 1e-14);
  d.window_fraction = 0.0;
  EXPECT_THROW(d.validate(), ValidationError);
  d.window_fraction = 1.0;
  d.dark_rate = -0.1;
  EXPECT_THROW(d.validate(), ValidationError);
}

TEST(Simulate, IdealSingletIsPerfectlyAnticorrelatedAtEqualAngles) {
  const CountRecord r =
      simulate_counts(states::singlet_density(), {30.0, 30.0}, 100000, DetectorParams{}, 1);
  EXPECT_EQ(r.n_uu, 0u);
  EXPECT_EQ(r.n_dd, 0u);
  EXPECT_EQ(r.sequences(), 100000u);
  // Half the sequences put both photons on one arm.
  EXPECT_NEAR(static_cast<double>(r.n_discarded), 50000.0, 5.0 * std::sqrt(25000.0));
}

TEST(Simulate, SplitRecordsPartitionSequences) {
  const SplitCounts s = simulate_split_counts(states::werner(0.9), {0.0, 22.5}, 200000,
                                              noisy_detector(), 5);
  EXPECT_EQ(s.photon1_in_a.sequences() + s.photon1_in_b.sequences(), 200000u);
  EXPECT_EQ(s.photon1_in_a.setting, MeasurementSetting(0.0, 22.5));
  EXPECT_EQ(s.photon1_in_b.setting, MeasurementSetting(22.5, 0.0));
  const CountRecord pooled =
      simulate_counts(states::werner(0.9), {0.0, 22.5}, 200000, noisy_detector(), 5);
  EXPECT_EQ(pooled.coincidences(), s.photon1_in_a.coincidences() + s.photon1_in_b.coincidences());
}

TEST(Simulate, CountsAgreeWithBranchEnumeration) {
  std::mt19937_64 rng(12);
  const CMatrix rho = oracle::random_state(4, rng);
  const DetectorParams det = noisy_detector();
  const std::uint64_t n = 2000000;
  const SplitCounts s = simulate_split_counts(DensityMatrix(rho), {10.0, 70.0}, n, det, 77);
  expect_counts_near(s.photon1_in_a.cells(), enumerate_chain(rho, 10.0, 70.0, det), n);
  // Photon 1 behind arm B sees the arm-B analyzer.
  expect_counts_near(s.photon1_in_b.cells(), enumerate_chain(rho, 70.0, 10.0, det), n);
}

TEST(Simulate, DeterministicForSeedAndIndependentOfThreads) {
  const DensityMatrix rho = states::werner(0.8);
  const DetectorParams det = noisy_detector();
  SimulationOptions one;
  one.threads = 1;
  one.batch_size = 4096;
  const SplitCounts ref = simulate_split_counts(rho, {0.0, 22.5}, 100000, det, 31, one);
  for (unsigned threads : {2u, 3u, 8u}) {
    SimulationOptions many = one;
    many.threads = threads;
    const SplitCounts s = simulate_split_counts(rho, {0.0, 22.5}, 100000, det, 31, many);
    EXPECT_EQ(s.photon1_in_a, ref.photon1_in_a) << threads;
    EXPECT_EQ(s.photon1_in_b, ref.photon1_in_b) << threads;
  }
  const SplitCounts other = simulate_split_counts(rho, {0.0, 22.5}, 100000, det, 32, one);
  EXPECT_FALSE(other.photon1_in_a == ref.photon1_in_a);
}

TEST(Simulate, RejectsEmptyRuns) {
  EXPECT_THROW(simulate_counts(states::singlet_density(), {0, 0}, 0, DetectorParams{}, 1),
               ValidationError);
}

TEST(Tomography, DatasetCoversNineBasisPairs) {
  const TomographyDataset ds =
      simulate_tomography_dataset(states::werner(0.7), 20000, noisy_detector(), 3);
  ASSERT_EQ(ds.records.size(), 9u);
  std::set<std::pair<int, int>> pairs;
  for (const TomographyRecord& r : ds.records) {
    pairs.insert({static_cast<int>(r.basis_a), static_cast<int>(r.basis_b)});
    EXPECT_EQ(r.counts.sequences(), 20000u);
  }
  EXPECT_EQ(pairs.size(), 9u);
}

TEST(Tomography, WindowReducesCoincidencesByAcceptance) {
  DetectorParams wide;
  wide.eta_det = 0.5;
  DetectorParams narrow = wide;
  narrow.window_fraction = 0.4;
  const std::uint64_t n = 400000;
  const double full = static_cast<double>(
      simulate_tomography_dataset(states::singlet_density(), n, wide, 9).total_coincidences());
  const double cut = static_cast<double>(
      simulate_tomography_dataset(states::singlet_density(), n, narrow, 9).total_coincidences());
  const double expected = narrow.window_acceptance();
  // Binomial thinning: sd of the ratio is about sqrt(a (1 - a) / full).
  EXPECT_NEAR(cut / full, expected, 5.0 * std::sqrt(expected * (1 - expected) / full));
}
