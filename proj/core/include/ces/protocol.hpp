#pragma once

// Analytic states of the entanglement sequence: atom-photon entanglement,
// storage in the atomic Zeeman qubit, mapping onto a second photon, plus the
// phenomenological noise channels and the pair-rate budget.

#include "ces/quantum.hpp"

namespace ces {

struct NoiseParams {
  double v0 = 1.0;         // coherence factor at dt = 0
  double tau_e_us = 5.7;   // Gaussian dephasing time
  double p_white = 0.0;    // white-noise admixture
  double eta_pump = 1.0;   // optical pumping success probability

  /// Throws ValidationError naming the offending field.
  void validate() const;
};

struct EfficiencyParams {
  double p_photon1 = 0.086;  // emission probability, entangling pulse
  double p_photon2 = 0.086;  // emission probability, mapping pulse
  double eta_det = 0.2;      // detection efficiency per intracavity photon
  double rep_rate_khz = 50.0;

  void validate() const;
};

struct RateReport {
  double p_pair_detect = 0.0;         // per protocol sequence
  double pairs_produced_per_s = 0.0;
  double pairs_detected_per_s = 0.0;
};

/// (|1,-1>|sigma+> - |1,+1>|sigma->)/sqrt2 in atom (x) photon order.
DensityMatrix atom_photon_state();

/// Transfers the atomic qubit onto photon 2 and reorders the factors to
/// photon1 (x) photon2. |1,-1> emits sigma- and |1,+1> emits sigma+ on the
/// mapping transition, so the ideal input becomes the singlet.
DensityMatrix map_to_photon_pair(const DensityMatrix& rho_atom_photon);

/// v(dt) = v0 * exp(-(dt / tau_e)^2).
double coherence_factor(const NoiseParams& noise, double dt_us);

/// Multiplies atomic coherences by v(dt), then mixes in p_white * I/4.
DensityMatrix apply_storage_noise(const DensityMatrix& rho_atom_photon, const NoiseParams& noise,
                                  double dt_us);

/// eta * rho + (1 - eta) * I/d. A failed pump is modelled as a fully
/// depolarized pair.
DensityMatrix pumping_channel(const DensityMatrix& rho, double eta_pump);

/// map_to_photon_pair(pumping(storage_noise(atom_photon_state()))).
DensityMatrix final_state(const NoiseParams& noise, double dt_us);

RateReport rate_budget(const EfficiencyParams& eff);

}  // namespace ces
