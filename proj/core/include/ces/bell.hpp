#pragma once

// CHSH analysis: correlations E(alpha, beta) from coincidence counts or from
// a density matrix, the S combination, and the maximal S a state admits.

#include <array>
#include <span>

#include <Eigen/Dense>

#include "ces/detection.hpp"
#include "ces/quantum.hpp"

namespace ces {

inline constexpr double kTsirelsonBound = 2.8284271247461903;  // 2 * sqrt(2)

struct CorrelationEstimate {
  double value = 0.0;
  double std_err = 0.0;
  std::uint64_t n_total = 0;
};

/// E = (n_uu + n_dd - n_ud - n_du) / N, std_err = sqrt((1 - E^2) / N).
CorrelationEstimate correlation_from_counts(const CountRecord& record);

struct ChshAngles {
  double alpha = 0.0;
  double alpha_prime = 45.0;
  double beta = 22.5;
  double beta_prime = -22.5;

  /// (alpha, beta), (alpha, beta'), (alpha', beta), (alpha', beta').
  std::array<MeasurementSetting, 4> settings() const;
};

struct BellResult {
  double s_value = 0.0;
  double std_err = 0.0;
  ChshAngles angles;
  std::array<double, 4> e_values{};  // in ChshAngles::settings() order
  std::array<double, 4> e_errors{};
};

/// S = |E(a', b') - E(a, b')| + |E(a', b) + E(a, b)| for e in settings() order.
double chsh_combination(const std::array<double, 4>& e);

/// Looks up the four records by setting. Throws DataError if one is missing
/// or has no coincidences.
BellResult chsh_from_counts(std::span<const CountRecord> records, const ChshAngles& angles);

/// Reads (alpha, alpha', beta, beta') from the order of first appearance in
/// four records forming a 2x2 grid of settings.
ChshAngles infer_chsh_angles(std::span<const CountRecord> records);

double analytic_correlation(const DensityMatrix& rho, const MeasurementSetting& setting);
BellResult analytic_chsh(const DensityMatrix& rho, const ChshAngles& angles);

/// T_kl = tr(rho sigma_k (x) sigma_l), k, l in {x, y, z}.
Eigen::Matrix3d correlation_matrix(const DensityMatrix& rho);

struct BlochDirections {
  Eigen::Vector3d a, a_prime, b, b_prime;
};

double chsh_for_directions(const Eigen::Matrix3d& t, const BlochDirections& dirs);

struct ChshBound {
  double s_max = 0.0;           // 2 sqrt(u1 + u2), u = eigenvalues of T^T T
  BlochDirections directions;   // measurement axes attaining s_max
  double achieved_s = 0.0;      // S evaluated at those axes
  BellResult best_linear;       // best S over linear-polarization analyzers
};

/// The closed form is the certificate. When `search_linear` is set the best
/// linear-analyzer angle set is also found by a 1-degree grid over
/// [0,180)^4 followed by local refinement; it reaches s_max only when the
/// optimal measurement plane is the linear-polarization plane.
ChshBound max_chsh_from_state(const DensityMatrix& rho, bool search_linear = true);

BellResult max_linear_chsh(const DensityMatrix& rho);

}  // namespace ces
