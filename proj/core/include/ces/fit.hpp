#pragma once

// Gaussian entanglement-lifetime fit: N(dt) = n0 * exp(-(dt / tau)^2),
// equivalently E_N(dt) = log2(2 n0 exp(-(dt / tau)^2) + 1).

#include <optional>
#include <span>

#include <Eigen/Dense>

namespace ces {

enum class SeriesKind { Negativity, LogNegativity };

struct LifetimePoint {
  double dt_us = 0.0;
  double value = 0.0;
  SeriesKind kind = SeriesKind::Negativity;
  std::optional<double> sigma;
};

struct LifetimeFit {
  double n0 = 0.0;
  double tau_e_us = 0.0;
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();  // (n0, tau)
  double residual_rms = 0.0;                             // in negativity units
  bool converged = false;
  int iterations = 0;
};

double negativity_from_log_negativity(double e_n);
double lifetime_negativity(double n0, double tau_e_us, double dt_us);
double lifetime_log_negativity(double n0, double tau_e_us, double dt_us);

/// Weighted least squares in negativity space (E_N points and their sigmas
/// are converted exactly). Unweighted if any point lacks sigma. Throws
/// DataError for fewer than 3 points or values out of range.
LifetimeFit fit_lifetime(std::span<const LifetimePoint> series);

}  // namespace ces
