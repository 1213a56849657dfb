#include "ces/measures.hpp"

#include <algorithm>
#include <cmath>

#include "ces/bell.hpp"

namespace ces {

double fidelity_singlet(const DensityMatrix& rho) {
  require_two_qubit(rho);
  const CVector psi = states::singlet().amplitudes();
  return std::clamp((psi.adjoint() * rho.matrix() * psi)(0, 0).real(), 0.0, 1.0);
}

double concurrence(const DensityMatrix& rho) {
  require_two_qubit(rho);
  const CMatrix yy = tensor(pauli::y(), pauli::y());
  const CMatrix flipped = yy * rho.matrix().conjugate() * yy;

  // sqrt(rho) flipped sqrt(rho) is Hermitian PSD and shares the spectrum of
  // rho * flipped.
  const EigenDecomposition e = eig_hermitian(HermitianOperator(rho.matrix(), 1e-9));
  const Eigen::VectorXd root = e.values.cwiseMax(0.0).cwiseSqrt();
  const CMatrix sqrt_rho = e.vectors * root.cast<Complex>().asDiagonal() * e.vectors.adjoint();
  const CMatrix m = sqrt_rho * flipped * sqrt_rho;
  const EigenDecomposition r = eig_hermitian(HermitianOperator(0.5 * (m + m.adjoint())));

  const Eigen::VectorXd l = r.values.cwiseMax(0.0).cwiseSqrt();
  return std::clamp(l(0) - l(1) - l(2) - l(3), 0.0, 1.0);
}

double eof_from_concurrence(double c) {
  c = std::clamp(c, 0.0, 1.0);
  if (c == 0.0) return 0.0;
  const double x = 0.5 * (1.0 + std::sqrt(std::max(0.0, 1.0 - c * c)));
  auto h = [](double p) { return p <= 0.0 || p >= 1.0 ? 0.0 : -p * std::log2(p); };
  return h(x) + h(1.0 - x);
}

double entanglement_of_formation(const DensityMatrix& rho) {
  return eof_from_concurrence(concurrence(rho));
}

NegativityResult log_negativity(const DensityMatrix& rho) {
  require_two_qubit(rho);
  const EigenDecomposition e = eig_hermitian(partial_transpose(rho, 1));
  double n = 0.0;
  for (Eigen::Index k = 0; k < e.values.size(); ++k) n += std::max(0.0, -e.values(k));
  return NegativityResult{n, std::log2(2.0 * n + 1.0)};
}

EntanglementReport report(const DensityMatrix& rho) {
  require_two_qubit(rho);
  EntanglementReport r;
  r.fidelity_singlet = fidelity_singlet(rho);
  r.concurrence = concurrence(rho);
  r.eof = eof_from_concurrence(r.concurrence);
  const NegativityResult n = log_negativity(rho);
  r.negativity = n.negativity;
  r.log_negativity = n.log_negativity;
  r.s_max = max_chsh_from_state(rho, false).s_max;
  return r;
}

}  // namespace ces
