#include "ces/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

namespace ces {
namespace {

bool supported_dim(Eigen::Index d) { return d >= 1 && d <= kMaxDim; }

void require_square(const CMatrix& m, const char* what) {
  if (m.rows() != m.cols() || !supported_dim(m.rows())) {
    std::ostringstream os;
    os << what << ": expected a square matrix with 1 <= dim <= " << kMaxDim << ", got "
       << m.rows() << "x" << m.cols();
    throw DimensionError(os.str());
  }
}

}  // namespace

StateVector::StateVector(CVector amplitudes) : amplitudes_(std::move(amplitudes)) {
  if (!supported_dim(amplitudes_.size())) {
    throw DimensionError("StateVector: dimension out of range");
  }
}

StateVector StateVector::normalized() const {
  const double n = amplitudes_.norm();
  if (n == 0.0) throw ValidationError("StateVector: cannot normalize the zero vector");
  return StateVector(amplitudes_ / n);
}

StateVector StateVector::basis(int dim, int index) {
  if (index < 0 || index >= dim) throw DimensionError("StateVector::basis: index out of range");
  CVector v = CVector::Zero(dim);
  v(index) = 1.0;
  return StateVector(std::move(v));
}

DensityMatrix::DensityMatrix(CMatrix entries) : entries_(std::move(entries)) {
  require_square(entries_, "DensityMatrix");
}

DensityMatrix DensityMatrix::pure(const StateVector& psi) {
  const CVector a = psi.normalized().amplitudes();
  return DensityMatrix(a * a.adjoint());
}

DensityMatrix DensityMatrix::maximally_mixed(int dim) {
  return DensityMatrix(CMatrix::Identity(dim, dim) / static_cast<double>(dim));
}

double DensityMatrix::purity() const { return (entries_ * entries_).trace().real(); }

HermitianOperator::HermitianOperator(CMatrix entries, double tolerance)
    : entries_(std::move(entries)) {
  require_square(entries_, "HermitianOperator");
  const double defect = max_abs(entries_ - entries_.adjoint());
  if (defect > tolerance) {
    std::ostringstream os;
    os << "HermitianOperator: matrix is not Hermitian (defect " << defect << ")";
    throw ValidationError(os.str());
  }
}

CMatrix tensor(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.dim() * b.dim() > kMaxDim) throw DimensionError("tensor: product dimension exceeds 8");
  return DensityMatrix(tensor(a.matrix(), b.matrix()));
}

CMatrix partial_transpose(const CMatrix& m, int subsystem) {
  if (m.rows() != 4 || m.cols() != 4) {
    throw DimensionError("partial_transpose: requires a 4x4 two-qubit operator");
  }
  if (subsystem != 0 && subsystem != 1) {
    throw DimensionError("partial_transpose: subsystem must be 0 or 1");
  }
  CMatrix out(4, 4);
  for (int i1 = 0; i1 < 2; ++i1)
    for (int i2 = 0; i2 < 2; ++i2)
      for (int j1 = 0; j1 < 2; ++j1)
        for (int j2 = 0; j2 < 2; ++j2) {
          const int row = 2 * i1 + i2;
          const int col = 2 * j1 + j2;
          const int src_row = subsystem == 0 ? 2 * j1 + i2 : 2 * i1 + j2;
          const int src_col = subsystem == 0 ? 2 * i1 + j2 : 2 * j1 + i2;
          out(row, col) = m(src_row, src_col);
        }
  return out;
}

HermitianOperator partial_transpose(const DensityMatrix& rho, int subsystem) {
  return HermitianOperator(partial_transpose(rho.matrix(), subsystem), 1e-8);
}

CMatrix partial_trace(const CMatrix& m, int dim_a, int dim_b, int traced_subsystem) {
  if (m.rows() != dim_a * dim_b || m.cols() != dim_a * dim_b) {
    throw DimensionError("partial_trace: operator does not factor as requested");
  }
  if (traced_subsystem != 0 && traced_subsystem != 1) {
    throw DimensionError("partial_trace: subsystem must be 0 or 1");
  }
  if (traced_subsystem == 1) {
    CMatrix out = CMatrix::Zero(dim_a, dim_a);
    for (int i = 0; i < dim_a; ++i)
      for (int j = 0; j < dim_a; ++j)
        for (int k = 0; k < dim_b; ++k) out(i, j) += m(i * dim_b + k, j * dim_b + k);
    return out;
  }
  CMatrix out = CMatrix::Zero(dim_b, dim_b);
  for (int i = 0; i < dim_b; ++i)
    for (int j = 0; j < dim_b; ++j)
      for (int k = 0; k < dim_a; ++k) out(i, j) += m(k * dim_b + i, k * dim_b + j);
  return out;
}

DensityMatrix partial_trace(const DensityMatrix& rho, int traced_subsystem) {
  switch (rho.dim()) {
    case 4:
      return DensityMatrix(partial_trace(rho.matrix(), 2, 2, traced_subsystem));
    case 8:
      return DensityMatrix(partial_trace(rho.matrix(), 2, 4, traced_subsystem));
    default:
      throw DimensionError("partial_trace: dimension must factor as 2x2 or 2x4");
  }
}

EigenDecomposition eig_hermitian(const HermitianOperator& m) {
  // Symmetrize so rounding in the lower triangle cannot leak in.
  const CMatrix h = 0.5 * (m.matrix() + m.matrix().adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(h);
  if (solver.info() != Eigen::Success) {
    throw ValidationError("eig_hermitian: eigensolver failed");
  }
  const Eigen::Index n = h.rows();
  EigenDecomposition out{Eigen::VectorXd(n), CMatrix(n, n)};
  // Eigen returns ascending order.
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = solver.eigenvalues()(n - 1 - k);
    out.vectors.col(k) = solver.eigenvectors().col(n - 1 - k);
  }
  return out;
}

double max_abs(const CMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

DensityDiagnostics validate_density(const DensityMatrix& rho) {
  DensityDiagnostics d;
  const CMatrix& m = rho.matrix();
  d.hermiticity_defect = max_abs(m - m.adjoint());
  d.trace_defect = std::abs(m.trace() - Complex(1.0, 0.0));
  const CMatrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(h, Eigen::EigenvaluesOnly);
  d.min_eigenvalue = solver.eigenvalues().minCoeff();
  d.hermitian = d.hermiticity_defect <= kHermitianTolerance;
  d.unit_trace = d.trace_defect <= kTraceTolerance;
  d.positive = d.min_eigenvalue >= -kPsdTolerance;
  return d;
}

void require_valid(const DensityMatrix& rho) {
  const DensityDiagnostics d = validate_density(rho);
  if (d.valid()) return;
  std::ostringstream os;
  os << "invalid density matrix: ";
  if (!d.hermitian) {
    os << "hermiticity defect " << d.hermiticity_defect;
  } else if (!d.unit_trace) {
    os << "trace defect " << d.trace_defect;
  } else {
    os << "negative eigenvalue " << d.min_eigenvalue;
  }
  throw ValidationError(os.str());
}

void require_two_qubit(const DensityMatrix& rho) {
  if (rho.dim() != 4) throw DimensionError("expected a two-qubit (4x4) density matrix");
  require_valid(rho);
}

double trace_distance(const CMatrix& a, const CMatrix& b) {
  const CMatrix diff = a - b;
  const CMatrix h = 0.5 * (diff + diff.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(h, Eigen::EigenvaluesOnly);
  return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

DensityMatrix project_to_physical(const CMatrix& m) {
  const CMatrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(h);
  const Eigen::VectorXd& ev = solver.eigenvalues();
  const Eigen::Index n = ev.size();

  // Euclidean projection onto {x >= 0, sum x = 1}.
  std::vector<double> sorted(ev.data(), ev.data() + n);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double shift = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    cumulative += sorted[k];
    const double candidate = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - candidate > 0.0) shift = candidate;
  }
  Eigen::VectorXd projected = (ev.array() - shift).cwiseMax(0.0);
  const CMatrix out = solver.eigenvectors() * projected.cast<Complex>().asDiagonal() *
                      solver.eigenvectors().adjoint();
  return DensityMatrix(0.5 * (out + out.adjoint()));
}

CMatrix swap_qubits(const CMatrix& m) {
  if (m.rows() != 4 || m.cols() != 4) throw DimensionError("swap_qubits: requires 4x4");
  static const int perm[4] = {0, 2, 1, 3};
  CMatrix out(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) out(perm[i], perm[j]) = m(i, j);
  return out;
}

namespace pauli {
CMatrix identity() { return CMatrix::Identity(2, 2); }
CMatrix x() {
  CMatrix m(2, 2);
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}
CMatrix y() {
  CMatrix m(2, 2);
  m << 0.0, Complex(0.0, -1.0), Complex(0.0, 1.0), 0.0;
  return m;
}
CMatrix z() {
  CMatrix m(2, 2);
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}
}  // namespace pauli

namespace states {

StateVector sigma_plus() { return StateVector::basis(2, 0); }
StateVector sigma_minus() { return StateVector::basis(2, 1); }

StateVector horizontal() {
  CVector v(2);
  v << std::numbers::sqrt2 / 2.0, std::numbers::sqrt2 / 2.0;
  return StateVector(v);
}

StateVector vertical() {
  const Complex mi(0.0, -std::numbers::sqrt2 / 2.0);
  CVector v(2);
  v << mi, -mi;
  return StateVector(v);
}

StateVector linear(double theta_deg) {
  const double t = theta_deg * std::numbers::pi / 180.0;
  return StateVector(std::cos(t) * horizontal().amplitudes() +
                     std::sin(t) * vertical().amplitudes());
}

StateVector singlet() {
  CVector v = CVector::Zero(4);
  v(1) = std::numbers::sqrt2 / 2.0;
  v(2) = -std::numbers::sqrt2 / 2.0;
  return StateVector(v);
}

DensityMatrix singlet_density() { return DensityMatrix::pure(singlet()); }

DensityMatrix werner(double p) {
  return DensityMatrix(p * singlet_density().matrix() +
                       (1.0 - p) * CMatrix::Identity(4, 4) / 4.0);
}

}  // namespace states
}  // namespace ces
