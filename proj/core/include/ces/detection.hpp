#pragma once

// Monte-Carlo model of the polarization detection chain.
//
// Both photons leave the cavity in the same mode and a 50/50 non-polarizing
// beam splitter routes each one independently to arm A or arm B. Each arm has
// a polarization analyzer (optionally preceded by a quarter-wave plate) and
// two detectors on the PBS ports "up" and "down". A sequence contributes a
// coincidence only when the photons take different arms and both arms click.
//
// Photon 2 is emitted at a random time t in [0, 1) (fraction of the mapping
// pulse) drawn from a truncated exponential with rate `pulse_decay`. Photons
// with t >= window_fraction fall outside the detection gate. Photons with
// t >= late_threshold are depolarized with probability late_emission_error.
// Dark counts fire per gate with probability dark_rate (scaled by the gate
// length for photon 2) on a uniformly random port and override the photon.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ces/quantum.hpp"

namespace ces {

/// Maps an angle in degrees onto [0, 180).
double normalize_angle(double deg);
bool same_angle(double a_deg, double b_deg, double tol = 1e-9);

struct MeasurementSetting {
  double alpha_deg = 0.0;  // analyzer angle, arm A (or photon 1)
  double beta_deg = 0.0;   // analyzer angle, arm B (or photon 2)

  MeasurementSetting() = default;
  MeasurementSetting(double alpha, double beta);

  bool operator==(const MeasurementSetting& other) const;
};

/// Tomography bases, labelled by their "up" port: H (H/V), D (D/A), R (R/L).
enum class Basis { HV, DA, RL };
inline constexpr std::array<Basis, 3> kBases{Basis::HV, Basis::DA, Basis::RL};

char basis_label(Basis b);
Basis parse_basis(const std::string& label);

struct DetectorParams {
  double eta_det = 1.0;
  double dark_rate = 0.0;
  double window_fraction = 1.0;
  double late_emission_error = 0.0;
  double late_threshold = 0.4;
  double pulse_decay = 2.0;

  void validate() const;

  /// P(photon-2 emission time < t).
  double emission_cdf(double t) const;
  double emission_time(double u) const;
  double window_acceptance() const { return emission_cdf(window_fraction); }
  /// P(t >= late_threshold | t < window_fraction).
  double late_fraction() const;
};

struct CountRecord {
  MeasurementSetting setting;
  std::uint64_t n_uu = 0;
  std::uint64_t n_ud = 0;
  std::uint64_t n_du = 0;
  std::uint64_t n_dd = 0;
  std::uint64_t n_discarded = 0;

  std::uint64_t coincidences() const { return n_uu + n_ud + n_du + n_dd; }
  std::uint64_t sequences() const { return coincidences() + n_discarded; }
  std::array<std::uint64_t, 4> cells() const { return {n_uu, n_ud, n_du, n_dd}; }

  bool operator==(const CountRecord& other) const = default;
};

struct ProjectorPair {
  HermitianOperator up;
  HermitianOperator down;

  const HermitianOperator& port(int index) const { return index == 0 ? up : down; }
};

/// Projectors onto cos(theta)|H> + sin(theta)|V> and its complement.
ProjectorPair analyzer_projectors(double theta_deg);

/// Quarter-wave retarder mapping H -> (H + iV)/sqrt2, in the sigma basis.
CMatrix quarter_wave_plate();

/// H/V and D/A use the bare analyzer at 0 and 45 degrees; R/L places the
/// quarter-wave plate in front of the 0-degree analyzer.
ProjectorPair basis_projectors(Basis b);
double basis_analyzer_angle(Basis b);

/// Joint port probabilities {uu, ud, du, dd}; first index is photon 1.
using OutcomeProbabilities = std::array<double, 4>;

OutcomeProbabilities outcome_probabilities(const DensityMatrix& rho,
                                           const MeasurementSetting& setting);
OutcomeProbabilities outcome_probabilities(const DensityMatrix& rho, const ProjectorPair& first,
                                           const ProjectorPair& second);

/// rho -> (1 - p) rho + p * tr_2(rho) (x) I/2.
DensityMatrix depolarize_photon2(const DensityMatrix& rho, double p);

/// Conditional two-photon state seen by the analyzers given a coincidence,
/// i.e. the exact mean of the Monte-Carlo detection model (photon-ordered).
DensityMatrix detected_state(const DensityMatrix& rho, const DetectorParams& det);

/// P(both arms click | photons on different arms).
double coincidence_probability(const DetectorParams& det);

struct SimulationOptions {
  unsigned threads = 0;                // 0 = hardware concurrency
  std::uint64_t batch_size = 1 << 16;  // sequences per random stream
};

/// Counts indexed by arm A port x arm B port; both photon orders pooled.
CountRecord simulate_counts(const DensityMatrix& rho, const MeasurementSetting& setting,
                            std::uint64_t n_sequences, const DetectorParams& det,
                            std::uint64_t seed, const SimulationOptions& opts = {});

/// The same run split by which arm received photon 1. Each record is
/// indexed photon 1 port x photon 2 port and carries the setting as seen by
/// (photon 1, photon 2): photon1_in_a has (alpha, beta), photon1_in_b has
/// (beta, alpha). Sequences are attributed to the record of photon 1's arm,
/// so the two records partition all sequences.
struct SplitCounts {
  CountRecord photon1_in_a;
  CountRecord photon1_in_b;
};

SplitCounts simulate_split_counts(const DensityMatrix& rho, const MeasurementSetting& setting,
                                  std::uint64_t n_sequences, const DetectorParams& det,
                                  std::uint64_t seed, const SimulationOptions& opts = {});

struct TomographyRecord {
  Basis basis_a = Basis::HV;  // photon 1
  Basis basis_b = Basis::HV;  // photon 2
  CountRecord counts;
};

struct TomographyDataset {
  std::vector<TomographyRecord> records;

  std::uint64_t total_coincidences() const;
};

/// Runs the 9 basis pairs {H/V, D/A, R/L}^2 with n_per_basis sequences each.
/// Only sequences with photon 1 in arm A enter the record counts; the rest
/// are discarded so every record is photon-ordered.
TomographyDataset simulate_tomography_dataset(const DensityMatrix& rho, std::uint64_t n_per_basis,
                                              const DetectorParams& det, std::uint64_t seed,
                                              const SimulationOptions& opts = {});

}  // namespace ces
