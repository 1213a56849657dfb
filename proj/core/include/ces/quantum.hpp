#pragma once

// Dense complex linear algebra on small Hilbert spaces (dim <= 8).
//
// Basis conventions shared by every module:
//   photonic qubit  |0> = |sigma+>,  |1> = |sigma->
//   atomic qubit    |0> = |1,-1>,    |1> = |1,+1>
//   two-qubit index = 2 * first + second, i.e. {++, +-, -+, --}
//   |H> = (|sigma+> + |sigma->)/sqrt2,  |V> = -i(|sigma+> - |sigma->)/sqrt2
// With these choices linear polarization at angle theta sits on the
// equator of the Bloch sphere at azimuth 2*theta, and circular
// polarization is the z axis.

#include <complex>
#include <cstddef>

#include <Eigen/Dense>

#include "ces/errors.hpp"

namespace ces {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr int kMaxDim = 8;

class StateVector {
 public:
  explicit StateVector(CVector amplitudes);

  int dim() const { return static_cast<int>(amplitudes_.size()); }
  const CVector& amplitudes() const { return amplitudes_; }
  double norm() const { return amplitudes_.norm(); }

  /// Returns a copy with unit norm. Throws ValidationError for the zero vector.
  StateVector normalized() const;

  static StateVector basis(int dim, int index);

 private:
  CVector amplitudes_;
};

/// Square complex matrix representing a quantum state. Construction only
/// checks the shape; physicality is reported by validate_density() and
/// enforced by require_valid() at the entry of analysis functions.
class DensityMatrix {
 public:
  explicit DensityMatrix(CMatrix entries);

  static DensityMatrix pure(const StateVector& psi);
  static DensityMatrix maximally_mixed(int dim);

  int dim() const { return static_cast<int>(entries_.rows()); }
  const CMatrix& matrix() const { return entries_; }
  Complex operator()(int row, int col) const { return entries_(row, col); }

  double purity() const;

 private:
  CMatrix entries_;
};

/// Square complex matrix that is Hermitian within 1e-10 (max-norm).
class HermitianOperator {
 public:
  explicit HermitianOperator(CMatrix entries, double tolerance = 1e-10);

  int dim() const { return static_cast<int>(entries_.rows()); }
  const CMatrix& matrix() const { return entries_; }

 private:
  CMatrix entries_;
};

/// Kronecker product a (x) b.
CMatrix tensor(const CMatrix& a, const CMatrix& b);
DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b);

/// Partial transpose of a two-qubit operator on subsystem 0 or 1.
HermitianOperator partial_transpose(const DensityMatrix& rho, int subsystem);
CMatrix partial_transpose(const CMatrix& m, int subsystem);

/// Traces out one factor. dim 4 factors as 2x2; dim 8 factors as 2x4,
/// with subsystem 0 the leading qubit and subsystem 1 the 4-dim remainder.
DensityMatrix partial_trace(const DensityMatrix& rho, int traced_subsystem);

/// General bipartite partial trace for a (dim_a * dim_b) operator.
CMatrix partial_trace(const CMatrix& m, int dim_a, int dim_b, int traced_subsystem);

struct EigenDecomposition {
  Eigen::VectorXd values;  // descending
  CMatrix vectors;         // column k belongs to values[k]
};

EigenDecomposition eig_hermitian(const HermitianOperator& m);

struct DensityDiagnostics {
  double hermiticity_defect = 0.0;  // max |rho - rho^dagger|
  double trace_defect = 0.0;        // |tr rho - 1|
  double min_eigenvalue = 0.0;
  bool hermitian = false;
  bool unit_trace = false;
  bool positive = false;

  bool valid() const { return hermitian && unit_trace && positive; }
};

inline constexpr double kHermitianTolerance = 1e-10;
inline constexpr double kTraceTolerance = 1e-10;
inline constexpr double kPsdTolerance = 1e-9;

DensityDiagnostics validate_density(const DensityMatrix& rho);

/// Throws ValidationError describing the first failed invariant.
void require_valid(const DensityMatrix& rho);
void require_two_qubit(const DensityMatrix& rho);

double trace_distance(const CMatrix& a, const CMatrix& b);
double max_abs(const CMatrix& m);

/// Nearest PSD trace-one matrix under the Frobenius norm: eigenvalues are
/// projected onto the probability simplex.
DensityMatrix project_to_physical(const CMatrix& m);

/// SWAP * rho * SWAP for a two-qubit operator.
CMatrix swap_qubits(const CMatrix& m);

namespace pauli {
CMatrix identity();
CMatrix x();
CMatrix y();
CMatrix z();
}  // namespace pauli

namespace states {
StateVector sigma_plus();
StateVector sigma_minus();
StateVector horizontal();
StateVector vertical();
/// cos(theta)|H> + sin(theta)|V>.
StateVector linear(double theta_deg);
/// (|sigma+ sigma-> - |sigma- sigma+>)/sqrt2.
StateVector singlet();
DensityMatrix singlet_density();
/// p * singlet + (1 - p) * I/4.
DensityMatrix werner(double p);
}  // namespace states

}  // namespace ces
