#include "ces/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <thread>

#include "ces/random.hpp"

namespace ces {
namespace {

constexpr int kParams = 16;
using ParamVector = MleObjective::Params;
using ParamMatrix = Eigen::Matrix<double, kParams, kParams>;

// Rank-1 product projector for one outcome of one basis pair.
struct Projector {
  CMatrix matrix;
  double weight;
};

std::vector<Projector> projectors_for(const WeightTable& table) {
  std::vector<Projector> out;
  out.reserve(table.size() * 4);
  for (const BasisWeights& bw : table) {
    const ProjectorPair a = basis_projectors(bw.basis_a);
    const ProjectorPair b = basis_projectors(bw.basis_b);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        out.push_back({tensor(a.port(i).matrix(), b.port(j).matrix()), bw.weights[2 * i + j]});
  }
  return out;
}

double probability(const CMatrix& rho, const CMatrix& projector) {
  // tr(rho P) without forming the product.
  return rho.cwiseProduct(projector.transpose()).sum().real();
}

CMatrix lower_triangular_from(const ParamVector& x) {
  CMatrix t = CMatrix::Zero(4, 4);
  int k = 4;
  for (int i = 0; i < 4; ++i) {
    t(i, i) = x(i);
    for (int j = 0; j < i; ++j) {
      t(i, j) = Complex(x(k), x(k + 1));
      k += 2;
    }
  }
  return t;
}

ParamVector params_from(const CMatrix& t) {
  ParamVector x;
  int k = 4;
  for (int i = 0; i < 4; ++i) {
    x(i) = t(i, i).real();
    for (int j = 0; j < i; ++j) {
      x(k) = t(i, j).real();
      x(k + 1) = t(i, j).imag();
      k += 2;
    }
  }
  return x;
}

CMatrix density_from(const CMatrix& t) {
  const CMatrix a = t.adjoint() * t;
  return a / a.trace().real();
}

// T lower triangular with T^dagger T = rho, via Cholesky of the
// index-reversed matrix.
CMatrix cholesky_factor(const CMatrix& rho) {
  CMatrix reversed(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) reversed(i, j) = rho(3 - i, 3 - j);
  Eigen::LLT<CMatrix> llt(reversed);
  if (llt.info() != Eigen::Success) throw ValidationError("cholesky_factor: matrix not PD");
  const CMatrix l = llt.matrixL();
  const CMatrix u = l.adjoint();
  CMatrix t(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) t(i, j) = u(3 - i, 3 - j);
  // Make the diagonal real and non-negative; phases are absorbed row-wise.
  for (int i = 0; i < 4; ++i) {
    const double mag = std::abs(t(i, i));
    if (mag > 0.0) t.row(i) *= std::conj(t(i, i)) / mag;
  }
  return t;
}

ReconstructionResult finish(const CMatrix& rho, const WeightTable& table, int iterations,
                            bool converged) {
  DensityMatrix dm(rho);
  ReconstructionResult r{dm, log_likelihood(table, rho), iterations, converged,
                         validate_density(dm)};
  return r;
}

WeightTable drop_empty(const WeightTable& table) {
  WeightTable out;
  for (const BasisWeights& bw : table)
    if (bw.total() > 0.0) out.push_back(bw);
  return out;
}

}  // namespace

MleObjective::MleObjective(const WeightTable& table) {
  for (Projector& p : projectors_for(table)) {
    projectors_.push_back(std::move(p.matrix));
    weights_.push_back(p.weight);
    total_ += p.weight;
  }
}

CMatrix MleObjective::density(const Params& x) { return density_from(lower_triangular_from(x)); }

double MleObjective::value(const Params& x) const {
  const CMatrix t = lower_triangular_from(x);
  const double norm = (t.adjoint() * t).trace().real();
  if (!(norm > 0.0)) return std::numeric_limits<double>::infinity();
  const CMatrix rho = density_from(t);
  double f = 0.0;
  for (std::size_t k = 0; k < projectors_.size(); ++k) {
    if (weights_[k] <= 0.0) continue;
    const double prob = probability(rho, projectors_[k]);
    if (!(prob > 0.0)) return std::numeric_limits<double>::infinity();
    f -= weights_[k] * std::log(prob);
  }
  return f / total_;
}

MleObjective::Params MleObjective::gradient(const Params& x) const {
  const CMatrix t = lower_triangular_from(x);
  const CMatrix a = t.adjoint() * t;
  const double norm = a.trace().real();
  const CMatrix rho = a / norm;
  CMatrix g = CMatrix::Zero(4, 4);
  for (std::size_t k = 0; k < projectors_.size(); ++k) {
    if (weights_[k] <= 0.0) continue;
    const double prob = std::max(probability(rho, projectors_[k]), 1e-300);
    g += (weights_[k] / (total_ * prob)) * projectors_[k];
  }
  const Complex g_rho = (g * rho).trace();
  const CMatrix h = (g - g_rho * CMatrix::Identity(4, 4)) / norm;
  const CMatrix dt = -2.0 * t * h;  // minus: we minimize -L

  Params out;
  int k = 4;
  for (int i = 0; i < 4; ++i) {
    out(i) = dt(i, i).real();
    for (int j = 0; j < i; ++j) {
      out(k) = dt(i, j).real();
      out(k + 1) = dt(i, j).imag();
      k += 2;
    }
  }
  return out;
}

WeightTable weights_from_dataset(const TomographyDataset& ds) {
  WeightTable table;
  table.reserve(ds.records.size());
  for (const TomographyRecord& r : ds.records) {
    const auto c = r.counts.cells();
    table.push_back({r.basis_a, r.basis_b,
                     {static_cast<double>(c[0]), static_cast<double>(c[1]),
                      static_cast<double>(c[2]), static_cast<double>(c[3])}});
  }
  return table;
}

WeightTable exact_weights(const DensityMatrix& rho) {
  WeightTable table;
  for (Basis a : kBases)
    for (Basis b : kBases)
      table.push_back({a, b, outcome_probabilities(rho, basis_projectors(a), basis_projectors(b))});
  return table;
}

double log_likelihood(const WeightTable& table, const CMatrix& rho) {
  double ll = 0.0;
  for (const Projector& p : projectors_for(table)) {
    if (p.weight <= 0.0) continue;
    ll += p.weight * std::log(std::max(probability(rho, p.matrix), 1e-300));
  }
  return ll;
}

void require_full_coverage(const WeightTable& table) {
  std::set<std::pair<int, int>> seen;
  for (const BasisWeights& bw : table) {
    for (double w : bw.weights)
      if (!(w >= 0.0) || !std::isfinite(w)) throw DataError("tomography: negative or invalid weight");
    if (bw.total() > 0.0) {
      seen.insert({static_cast<int>(bw.basis_a), static_cast<int>(bw.basis_b)});
    }
  }
  if (seen.size() != 9) {
    throw DataError("tomography: basis coverage incomplete (" + std::to_string(seen.size()) +
                    " of 9 basis pairs have counts)");
  }
}

ReconstructionResult linear_inversion(const WeightTable& table_in) {
  const WeightTable table = drop_empty(table_in);
  if (table.empty()) throw DataError("linear_inversion: dataset has no counts");

  const CMatrix paulis[4] = {pauli::identity(), pauli::x(), pauli::y(), pauli::z()};
  std::vector<CMatrix> basis_ops;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (i != 0 || j != 0) basis_ops.push_back(tensor(paulis[i], paulis[j]));

  const std::vector<Projector> projectors = projectors_for(table);
  const Eigen::Index rows = static_cast<Eigen::Index>(projectors.size());
  Eigen::MatrixXd design(rows, 15);
  Eigen::VectorXd rhs(rows);
  for (Eigen::Index k = 0; k < rows; ++k) {
    const double basis_total = table[k / 4].total();
    const double freq = projectors[k].weight / basis_total;
    for (int m = 0; m < 15; ++m) design(k, m) = probability(basis_ops[m], projectors[k].matrix);
    rhs(k) = 4.0 * freq - 1.0;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < 15) {
    throw DataError("linear_inversion: basis coverage insufficient (design rank " +
                    std::to_string(qr.rank()) + " < 15)");
  }
  const Eigen::VectorXd r = qr.solve(rhs);
  CMatrix rho = CMatrix::Identity(4, 4);
  for (int m = 0; m < 15; ++m) rho += r(m) * basis_ops[m];
  rho /= 4.0;
  return finish(rho, table, 0, true);
}

ReconstructionResult linear_inversion(const TomographyDataset& ds) {
  return linear_inversion(weights_from_dataset(ds));
}

ReconstructionResult mle_reconstruct(const WeightTable& table, const MleOptions& opts) {
  require_full_coverage(table);
  for (const BasisWeights& bw : table) {
    if (!(bw.total() > 0.0)) throw DataError("mle_reconstruct: a basis pair has zero counts");
  }

  const ReconstructionResult linear = linear_inversion(table);
  // The Cholesky parametrization needs a strictly positive start; mix in a
  // little of the identity only when the projected estimate is near-singular.
  CMatrix start = project_to_physical(linear.rho.matrix()).matrix();
  if (eig_hermitian(HermitianOperator(start)).values.minCoeff() < 1e-6) {
    start = 0.999 * start + 0.001 * CMatrix::Identity(4, 4) / 4.0;
  }

  const MleObjective objective(table);
  ParamVector x = params_from(cholesky_factor(start));
  double f = objective.value(x);
  ParamVector g = objective.gradient(x);
  ParamMatrix h_inv = ParamMatrix::Identity();

  bool converged = false;
  int iter = 0;
  for (; iter < opts.max_iterations; ++iter) {
    if (g.norm() < opts.gradient_tolerance) {
      converged = true;
      break;
    }
    ParamVector dir = -h_inv * g;
    if (g.dot(dir) >= 0.0) {
      h_inv.setIdentity();
      dir = -g;
    }
    const double slope = g.dot(dir);
    double step = 1.0;
    double f_new = objective.value(x + step * dir);
    while (!(f_new <= f + 1e-4 * step * slope) && step > 1e-20) {
      step *= 0.5;
      f_new = objective.value(x + step * dir);
    }
    if (!(f_new <= f + 1e-4 * step * slope)) {
      if (!h_inv.isIdentity()) {
        h_inv.setIdentity();
        continue;
      }
      // No descent possible at working precision.
      converged = g.norm() < std::sqrt(opts.gradient_tolerance);
      break;
    }
    const ParamVector s = step * dir;
    const ParamVector x_new = x + s;
    const ParamVector g_new = objective.gradient(x_new);
    const ParamVector y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-16 * s.norm() * y.norm()) {
      const double rho_k = 1.0 / sy;
      const ParamMatrix id = ParamMatrix::Identity();
      h_inv = (id - rho_k * s * y.transpose()) * h_inv * (id - rho_k * y * s.transpose()) +
              rho_k * s * s.transpose();
    }
    const double rel_change = std::abs(f_new - f) / std::max(std::abs(f), 1e-300);
    x = x_new;
    f = f_new;
    g = g_new;
    // f is flat near the optimum, so a stalled objective alone does not pin
    // rho down; require a nearly vanishing gradient as well.
    if (rel_change < opts.relative_tolerance && g.norm() < std::sqrt(opts.gradient_tolerance)) {
      converged = true;
      ++iter;
      break;
    }
  }
  return finish(density_from(lower_triangular_from(x)), table, iter, converged);
}

ReconstructionResult mle_reconstruct(const TomographyDataset& ds, const MleOptions& opts) {
  return mle_reconstruct(weights_from_dataset(ds), opts);
}

MeasureUncertainties bootstrap_errors(const TomographyDataset& ds, int n_resamples,
                                      std::uint64_t seed, const BootstrapOptions& opts) {
  if (n_resamples < 100) throw ValidationError("bootstrap_errors: need at least 100 resamples");
  const WeightTable observed = weights_from_dataset(ds);
  require_full_coverage(observed);

  struct Outcome {
    bool ok = false;
    bool converged = false;
    EntanglementReport report;
  };
  std::vector<Outcome> outcomes(static_cast<std::size_t>(n_resamples));

  auto resample = [&](int index) {
    const std::uint64_t resample_seed = derive_seed(seed, static_cast<std::uint64_t>(index));
    WeightTable table = observed;
    for (std::size_t b = 0; b < table.size(); ++b) {
      PhiloxStream rng(resample_seed, b);
      const double total = observed[b].total();
      std::array<double, 4> cumulative{};
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) {
        acc += observed[b].weights[k] / total;
        cumulative[k] = acc;
      }
      std::array<double, 4> counts{};
      const auto draws = static_cast<std::uint64_t>(std::llround(total));
      for (std::uint64_t n = 0; n < draws; ++n) {
        const double u = rng.uniform() * cumulative[3];
        int k = 0;
        while (k < 3 && u >= cumulative[k]) ++k;
        counts[k] += 1.0;
      }
      table[b].weights = counts;
    }
    Outcome out;
    try {
      const ReconstructionResult r = mle_reconstruct(table, opts.mle);
      out.report = report(r.rho);
      out.converged = r.converged;
      out.ok = true;
    } catch (const Error&) {
      out.ok = false;
    }
    outcomes[static_cast<std::size_t>(index)] = out;
  };

  unsigned threads = opts.threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                       : opts.threads;
  threads = std::min<unsigned>(threads, static_cast<unsigned>(n_resamples));
  if (threads <= 1) {
    for (int i = 0; i < n_resamples; ++i) resample(i);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        for (int i = static_cast<int>(w); i < n_resamples; i += static_cast<int>(threads)) {
          resample(i);
        }
      });
    }
  }

  // Aggregate in resample-index order.
  MeasureUncertainties u;
  auto fields = [](EntanglementReport& r) {
    return std::array<double*, 6>{&r.fidelity_singlet, &r.concurrence,    &r.eof,
                                  &r.negativity,       &r.log_negativity, &r.s_max};
  };
  std::array<double, 6> sum{};
  std::array<double, 6> sum_sq{};
  for (Outcome& o : outcomes) {
    if (!o.ok) {
      ++u.resamples_failed;
      continue;
    }
    ++u.resamples_used;
    if (!o.converged) ++u.resamples_not_converged;
    const auto v = fields(o.report);
    for (int k = 0; k < 6; ++k) sum[k] += *v[k];
  }
  if (u.resamples_used < 2) throw DataError("bootstrap_errors: fewer than 2 usable resamples");
  const double n = u.resamples_used;
  const auto mean = fields(u.mean);
  for (int k = 0; k < 6; ++k) *mean[k] = sum[k] / n;
  for (Outcome& o : outcomes) {
    if (!o.ok) continue;
    const auto v = fields(o.report);
    for (int k = 0; k < 6; ++k) sum_sq[k] += (*v[k] - *mean[k]) * (*v[k] - *mean[k]);
  }
  const auto sd = fields(u.std_dev);
  for (int k = 0; k < 6; ++k) *sd[k] = std::sqrt(sum_sq[k] / (n - 1.0));
  return u;
}

}  // namespace ces
