#pragma once

#include "ces/quantum.hpp"

namespace ces {

/// <Psi-| rho |Psi->.
double fidelity_singlet(const DensityMatrix& rho);

/// Wootters concurrence max(0, l1 - l2 - l3 - l4), l the descending square
/// roots of the eigenvalues of rho (sy x sy) rho* (sy x sy).
double concurrence(const DensityMatrix& rho);

/// h((1 + sqrt(1 - C^2)) / 2) with h the binary entropy.
double eof_from_concurrence(double c);
double entanglement_of_formation(const DensityMatrix& rho);

struct NegativityResult {
  double negativity = 0.0;      // sum of |negative eigenvalues| of rho^{T_B}
  double log_negativity = 0.0;  // log2(2 N + 1)
};

NegativityResult log_negativity(const DensityMatrix& rho);

struct EntanglementReport {
  double fidelity_singlet = 0.0;
  double concurrence = 0.0;
  double eof = 0.0;
  double negativity = 0.0;
  double log_negativity = 0.0;
  double s_max = 0.0;
};

EntanglementReport report(const DensityMatrix& rho);

}  // namespace ces
