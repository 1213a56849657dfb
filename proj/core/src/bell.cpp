#include "ces/bell.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

namespace ces {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Eigen::Vector3d linear_axis(double theta_deg) {
  return {std::cos(2.0 * theta_deg * kDeg), std::sin(2.0 * theta_deg * kDeg), 0.0};
}

double equatorial_norm(const Eigen::Vector3d& v) { return std::hypot(v.x(), v.y()); }

double equatorial_angle_deg(const Eigen::Vector3d& v) {
  return normalize_angle(0.5 * std::atan2(v.y(), v.x()) / kDeg);
}

// Best S over beta, beta' in closed form for fixed (alpha, alpha').
double linear_objective(const Eigen::Matrix3d& t, double alpha, double alpha_prime) {
  const Eigen::Vector3d na = linear_axis(alpha);
  const Eigen::Vector3d nap = linear_axis(alpha_prime);
  return equatorial_norm(t.transpose() * (na + nap)) + equatorial_norm(t.transpose() * (nap - na));
}

Eigen::Vector3d any_orthogonal(const Eigen::Vector3d& v) {
  const Eigen::Vector3d trial =
      std::abs(v.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
  return (trial - trial.dot(v) * v).normalized();
}

BellResult result_from_correlations(const Eigen::Matrix3d& t, const ChshAngles& angles) {
  BellResult r;
  r.angles = angles;
  const auto settings = angles.settings();
  for (int k = 0; k < 4; ++k) {
    r.e_values[k] = linear_axis(settings[k].alpha_deg).dot(t * linear_axis(settings[k].beta_deg));
  }
  r.s_value = chsh_combination(r.e_values);
  return r;
}

}  // namespace

CorrelationEstimate correlation_from_counts(const CountRecord& record) {
  const std::uint64_t n = record.coincidences();
  if (n == 0) throw DataError("correlation_from_counts: record has no coincidences");
  const double total = static_cast<double>(n);
  const double e = (static_cast<double>(record.n_uu) + static_cast<double>(record.n_dd) -
                    static_cast<double>(record.n_ud) - static_cast<double>(record.n_du)) /
                   total;
  return CorrelationEstimate{e, std::sqrt(std::max(0.0, 1.0 - e * e) / total), n};
}

std::array<MeasurementSetting, 4> ChshAngles::settings() const {
  return {MeasurementSetting(alpha, beta), MeasurementSetting(alpha, beta_prime),
          MeasurementSetting(alpha_prime, beta), MeasurementSetting(alpha_prime, beta_prime)};
}

double chsh_combination(const std::array<double, 4>& e) {
  return std::abs(e[3] - e[1]) + std::abs(e[2] + e[0]);
}

BellResult chsh_from_counts(std::span<const CountRecord> records, const ChshAngles& angles) {
  BellResult r;
  r.angles = angles;
  const auto settings = angles.settings();
  double variance = 0.0;
  for (int k = 0; k < 4; ++k) {
    const CountRecord* match = nullptr;
    for (const CountRecord& rec : records) {
      if (rec.setting == settings[k]) {
        match = &rec;
        break;
      }
    }
    if (match == nullptr) {
      std::ostringstream os;
      os << "chsh_from_counts: no record for setting (" << settings[k].alpha_deg << ", "
         << settings[k].beta_deg << ")";
      throw DataError(os.str());
    }
    const CorrelationEstimate e = correlation_from_counts(*match);
    r.e_values[k] = e.value;
    r.e_errors[k] = e.std_err;
    variance += e.std_err * e.std_err;
  }
  r.s_value = chsh_combination(r.e_values);
  r.std_err = std::sqrt(variance);
  return r;
}

ChshAngles infer_chsh_angles(std::span<const CountRecord> records) {
  if (records.size() != 4) throw DataError("CHSH analysis needs exactly 4 records per group");
  std::vector<double> alphas;
  std::vector<double> betas;
  auto add_unique = [](std::vector<double>& v, double x) {
    for (double y : v)
      if (same_angle(x, y)) return;
    v.push_back(x);
  };
  for (const CountRecord& r : records) {
    add_unique(alphas, r.setting.alpha_deg);
    add_unique(betas, r.setting.beta_deg);
  }
  if (alphas.size() != 2 || betas.size() != 2) {
    throw DataError("CHSH records must form a 2x2 grid of analyzer settings");
  }
  ChshAngles a{alphas[0], alphas[1], betas[0], betas[1]};
  for (const MeasurementSetting& s : a.settings()) {
    bool found = false;
    for (const CountRecord& r : records) found = found || r.setting == s;
    if (!found) throw DataError("CHSH records must form a 2x2 grid of analyzer settings");
  }
  return a;
}

double analytic_correlation(const DensityMatrix& rho, const MeasurementSetting& setting) {
  const OutcomeProbabilities p = outcome_probabilities(rho, setting);
  return p[0] + p[3] - p[1] - p[2];
}

BellResult analytic_chsh(const DensityMatrix& rho, const ChshAngles& angles) {
  BellResult r;
  r.angles = angles;
  const auto settings = angles.settings();
  for (int k = 0; k < 4; ++k) r.e_values[k] = analytic_correlation(rho, settings[k]);
  r.s_value = chsh_combination(r.e_values);
  return r;
}

Eigen::Matrix3d correlation_matrix(const DensityMatrix& rho) {
  require_two_qubit(rho);
  const CMatrix paulis[3] = {pauli::x(), pauli::y(), pauli::z()};
  Eigen::Matrix3d t;
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l)
      t(k, l) = (rho.matrix() * tensor(paulis[k], paulis[l])).trace().real();
  return t;
}

double chsh_for_directions(const Eigen::Matrix3d& t, const BlochDirections& d) {
  const double e_ab = d.a.dot(t * d.b);
  const double e_abp = d.a.dot(t * d.b_prime);
  const double e_apb = d.a_prime.dot(t * d.b);
  const double e_apbp = d.a_prime.dot(t * d.b_prime);
  return chsh_combination({e_ab, e_abp, e_apb, e_apbp});
}

ChshBound max_chsh_from_state(const DensityMatrix& rho, bool search_linear) {
  const Eigen::Matrix3d t = correlation_matrix(rho);
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(t, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d s = svd.singularValues();  // descending

  ChshBound bound;
  bound.s_max = 2.0 * std::sqrt(s(0) * s(0) + s(1) * s(1));

  // a +/- a' along the two leading left singular vectors, b and b' along the
  // matching right singular vectors.
  const Eigen::Vector3d u1 = svd.matrixU().col(0);
  const Eigen::Vector3d u2 = svd.matrixU().col(1);
  Eigen::Vector3d v1 = svd.matrixV().col(0);
  Eigen::Vector3d v2 = svd.matrixV().col(1);
  if (s(0) <= 1e-15) v1 = Eigen::Vector3d::UnitZ();
  if (s(1) <= 1e-15) v2 = any_orthogonal(v1);
  const double theta = std::atan2(s(1), s(0));
  bound.directions.a = std::cos(theta) * u1 - std::sin(theta) * u2;
  bound.directions.a_prime = std::cos(theta) * u1 + std::sin(theta) * u2;
  bound.directions.b = v1;
  bound.directions.b_prime = v2;
  bound.achieved_s = chsh_for_directions(t, bound.directions);

  if (search_linear) bound.best_linear = max_linear_chsh(rho);
  return bound;
}

BellResult max_linear_chsh(const DensityMatrix& rho) {
  const Eigen::Matrix3d t = correlation_matrix(rho);

  // 1-degree grid. For fixed (alpha, alpha') the beta and beta' terms
  // decouple, so maximizing each over its own grid equals the full 4-d grid.
  constexpr int kGrid = 180;
  std::vector<Eigen::Vector3d> axes(kGrid);
  for (int k = 0; k < kGrid; ++k) axes[k] = linear_axis(k);

  double best = -1.0;
  double best_alpha = 0.0;
  double best_alpha_prime = 0.0;
  for (int i = 0; i < kGrid; ++i) {
    for (int j = 0; j < kGrid; ++j) {
      const Eigen::Vector3d plus = t.transpose() * (axes[i] + axes[j]);
      const Eigen::Vector3d minus = t.transpose() * (axes[j] - axes[i]);
      double best_plus = 0.0;
      double best_minus = 0.0;
      for (int k = 0; k < kGrid; ++k) {
        best_plus = std::max(best_plus, std::abs(plus.dot(axes[k])));
        best_minus = std::max(best_minus, std::abs(minus.dot(axes[k])));
      }
      if (best_plus + best_minus > best) {
        best = best_plus + best_minus;
        best_alpha = i;
        best_alpha_prime = j;
      }
    }
  }

  // Compass search on (alpha, alpha') with beta, beta' in closed form.
  double value = linear_objective(t, best_alpha, best_alpha_prime);
  for (double step = 0.5; step > 1e-11;) {
    bool improved = false;
    const double moves[4][2] = {{step, 0}, {-step, 0}, {0, step}, {0, -step}};
    for (const auto& m : moves) {
      const double candidate = linear_objective(t, best_alpha + m[0], best_alpha_prime + m[1]);
      if (candidate > value) {
        value = candidate;
        best_alpha += m[0];
        best_alpha_prime += m[1];
        improved = true;
      }
    }
    if (!improved) step *= 0.5;
  }

  const Eigen::Vector3d na = linear_axis(best_alpha);
  const Eigen::Vector3d nap = linear_axis(best_alpha_prime);
  const ChshAngles angles{normalize_angle(best_alpha), normalize_angle(best_alpha_prime),
                          equatorial_angle_deg(t.transpose() * (na + nap)),
                          equatorial_angle_deg(t.transpose() * (nap - na))};
  return result_from_correlations(t, angles);
}

}  // namespace ces
