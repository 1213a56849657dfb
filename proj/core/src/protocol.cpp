#include "ces/protocol.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace ces {
namespace {

void check_probability(double value, const char* field) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw ValidationError(std::string(field) + ": must lie in [0, 1], got " +
                          std::to_string(value));
  }
}

}  // namespace

void NoiseParams::validate() const {
  check_probability(v0, "noise.v0");
  check_probability(p_white, "noise.p_white");
  check_probability(eta_pump, "noise.eta_pump");
  if (!(tau_e_us > 0.0) || !std::isfinite(tau_e_us)) {
    throw ValidationError("noise.tau_e_us: must be positive and finite");
  }
}

void EfficiencyParams::validate() const {
  check_probability(p_photon1, "efficiency.p_photon1");
  check_probability(p_photon2, "efficiency.p_photon2");
  check_probability(eta_det, "efficiency.eta_det");
  if (!(rep_rate_khz > 0.0) || !std::isfinite(rep_rate_khz)) {
    throw ValidationError("efficiency.rep_rate_khz: must be positive and finite");
  }
}

DensityMatrix atom_photon_state() {
  // atom |0> = |1,-1>, photon |0> = sigma+; index = 2 * atom + photon.
  CVector psi = CVector::Zero(4);
  psi(0) = std::numbers::sqrt2 / 2.0;
  psi(3) = -std::numbers::sqrt2 / 2.0;
  return DensityMatrix::pure(StateVector(psi));
}

DensityMatrix map_to_photon_pair(const DensityMatrix& rho_atom_photon) {
  if (rho_atom_photon.dim() != 4) {
    throw DimensionError("map_to_photon_pair: expected a 4x4 atom-photon state");
  }
  // (atom a, photon p) -> (photon1 = p, photon2 = 1 - a).
  auto target = [](int k) { return 2 * (k & 1) + (1 - (k >> 1)); };
  CMatrix out(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) out(target(i), target(j)) = rho_atom_photon(i, j);
  return DensityMatrix(out);
}

double coherence_factor(const NoiseParams& noise, double dt_us) {
  const double x = dt_us / noise.tau_e_us;
  return noise.v0 * std::exp(-x * x);
}

DensityMatrix apply_storage_noise(const DensityMatrix& rho_atom_photon, const NoiseParams& noise,
                                  double dt_us) {
  if (rho_atom_photon.dim() != 4) {
    throw DimensionError("apply_storage_noise: expected a 4x4 atom-photon state");
  }
  if (!(dt_us >= 0.0)) throw ValidationError("apply_storage_noise: dt must be >= 0");
  noise.validate();

  const double v = coherence_factor(noise, dt_us);
  CMatrix m = rho_atom_photon.matrix();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if ((i >> 1) != (j >> 1)) m(i, j) *= v;
  m = (1.0 - noise.p_white) * m + noise.p_white * CMatrix::Identity(4, 4) / 4.0;
  return DensityMatrix(m);
}

DensityMatrix pumping_channel(const DensityMatrix& rho, double eta_pump) {
  check_probability(eta_pump, "eta_pump");
  const int d = rho.dim();
  return DensityMatrix(eta_pump * rho.matrix() +
                       (1.0 - eta_pump) * CMatrix::Identity(d, d) / static_cast<double>(d));
}

DensityMatrix final_state(const NoiseParams& noise, double dt_us) {
  const DensityMatrix stored = apply_storage_noise(atom_photon_state(), noise, dt_us);
  return map_to_photon_pair(pumping_channel(stored, noise.eta_pump));
}

RateReport rate_budget(const EfficiencyParams& eff) {
  eff.validate();
  const double rep_rate_hz = eff.rep_rate_khz * 1e3;
  RateReport r;
  r.p_pair_detect = eff.p_photon1 * eff.p_photon2 * eff.eta_det * eff.eta_det;
  r.pairs_produced_per_s = rep_rate_hz * eff.p_photon1 * eff.p_photon2;
  r.pairs_detected_per_s = rep_rate_hz * r.p_pair_detect;
  return r;
}

}  // namespace ces
