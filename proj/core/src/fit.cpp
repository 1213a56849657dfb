#include "ces/fit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <unsupported/Eigen/NonLinearOptimization>

#include "ces/errors.hpp"

namespace ces {
namespace {

struct GaussianResiduals {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;

  std::vector<double> dt, n, weight;

  int inputs() const { return 2; }
  int values() const { return static_cast<int>(dt.size()); }

  int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& r) const {
    for (std::size_t i = 0; i < dt.size(); ++i) {
      r(i) = weight[i] * (n[i] - lifetime_negativity(p(0), p(1), dt[i]));
    }
    return 0;
  }

  int df(const Eigen::VectorXd& p, Eigen::MatrixXd& j) const {
    for (std::size_t i = 0; i < dt.size(); ++i) {
      const double x = dt[i] / p(1);
      const double g = std::exp(-x * x);
      j(i, 0) = -weight[i] * g;
      j(i, 1) = -weight[i] * p(0) * g * 2.0 * x * x / p(1);
    }
    return 0;
  }
};

}  // namespace

double negativity_from_log_negativity(double e_n) { return 0.5 * (std::exp2(e_n) - 1.0); }

double lifetime_negativity(double n0, double tau_e_us, double dt_us) {
  const double x = dt_us / tau_e_us;
  return n0 * std::exp(-x * x);
}

double lifetime_log_negativity(double n0, double tau_e_us, double dt_us) {
  return std::log2(2.0 * lifetime_negativity(n0, tau_e_us, dt_us) + 1.0);
}

LifetimeFit fit_lifetime(std::span<const LifetimePoint> series) {
  if (series.size() < 3) throw DataError("fit_lifetime: insufficient data (need >= 3 points)");

  GaussianResiduals f;
  bool weighted = true;
  for (const LifetimePoint& pt : series) weighted = weighted && pt.sigma.has_value();

  for (const LifetimePoint& pt : series) {
    if (!(pt.dt_us >= 0.0) || !std::isfinite(pt.dt_us)) {
      throw DataError("fit_lifetime: dt must be finite and >= 0");
    }
    double n = pt.value;
    double sigma = pt.sigma.value_or(1.0);
    if (pt.kind == SeriesKind::LogNegativity) {
      if (!(pt.value >= 0.0 && pt.value <= 1.0)) {
        throw DataError("fit_lifetime: log-negativity values must lie in [0, 1]");
      }
      n = negativity_from_log_negativity(pt.value);
      sigma *= std::numbers::ln2 * std::exp2(pt.value) / 2.0;
    } else if (!(pt.value >= 0.0 && pt.value <= 0.5)) {
      throw DataError("fit_lifetime: negativity values must lie in [0, 0.5]");
    }
    if (weighted && !(sigma > 0.0)) throw DataError("fit_lifetime: sigma must be positive");
    f.dt.push_back(pt.dt_us);
    f.n.push_back(n);
    f.weight.push_back(weighted ? 1.0 / sigma : 1.0);
  }

  // N0 from the earliest point, tau from the half-decay crossing.
  std::vector<std::size_t> order(f.dt.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return f.dt[a] < f.dt[b]; });
  const double n_first = std::max(f.n[order.front()], 1e-6);
  double half_time = 2.0 * f.dt[order.back()];
  for (std::size_t k = 1; k < order.size(); ++k) {
    const double n_prev = f.n[order[k - 1]];
    const double n_cur = f.n[order[k]];
    if (n_cur <= 0.5 * n_first && n_prev > 0.5 * n_first) {
      const double frac = (n_prev - 0.5 * n_first) / (n_prev - n_cur);
      half_time = f.dt[order[k - 1]] + frac * (f.dt[order[k]] - f.dt[order[k - 1]]);
      break;
    }
  }
  if (!(half_time > 0.0)) half_time = 1.0;

  Eigen::VectorXd p(2);
  p << n_first, half_time / std::sqrt(std::numbers::ln2);

  Eigen::LevenbergMarquardt<GaussianResiduals> lm(f);
  lm.parameters.maxfev = 2000;
  lm.parameters.xtol = 1e-12;
  lm.parameters.ftol = 1e-14;
  const auto status = lm.minimize(p);

  LifetimeFit out;
  out.n0 = p(0);
  out.tau_e_us = std::abs(p(1));
  out.iterations = static_cast<int>(lm.iter);
  out.converged = status != Eigen::LevenbergMarquardtSpace::ImproperInputParameters &&
                  status != Eigen::LevenbergMarquardtSpace::TooManyFunctionEvaluation &&
                  std::isfinite(out.n0) && std::isfinite(out.tau_e_us) && out.tau_e_us > 0.0;

  Eigen::VectorXd r(f.values());
  Eigen::MatrixXd j(f.values(), 2);
  p(1) = out.tau_e_us;
  f(p, r);
  f.df(p, j);
  double rss_unweighted = 0.0;
  for (std::size_t i = 0; i < f.dt.size(); ++i) {
    const double d = f.n[i] - lifetime_negativity(out.n0, out.tau_e_us, f.dt[i]);
    rss_unweighted += d * d;
  }
  out.residual_rms = std::sqrt(rss_unweighted / static_cast<double>(f.dt.size()));

  const Eigen::Matrix2d info = j.transpose() * j;
  Eigen::FullPivLU<Eigen::Matrix2d> lu(info);
  if (lu.isInvertible()) {
    out.covariance = lu.inverse();
    if (!weighted) {
      const int dof = f.values() - 2;
      out.covariance *= dof > 0 ? r.squaredNorm() / dof : 0.0;
    }
  } else {
    out.converged = false;
  }
  return out;
}

}  // namespace ces
