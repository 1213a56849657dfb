#pragma once

// Two-qubit state reconstruction from the nine basis pairs {H/V, D/A, R/L}^2,
// using all four port combinations of each pair (36 projectors).

#include <array>
#include <cstdint>
#include <vector>

#include "ces/detection.hpp"
#include "ces/measures.hpp"
#include "ces/quantum.hpp"

namespace ces {

/// Outcome weights for one basis pair, photon 1 port x photon 2 port.
/// Counts for measured data, probabilities for exact data.
struct BasisWeights {
  Basis basis_a = Basis::HV;
  Basis basis_b = Basis::HV;
  std::array<double, 4> weights{};

  double total() const { return weights[0] + weights[1] + weights[2] + weights[3]; }
};

using WeightTable = std::vector<BasisWeights>;

WeightTable weights_from_dataset(const TomographyDataset& ds);

/// Exact outcome probabilities of rho for all nine basis pairs.
WeightTable exact_weights(const DensityMatrix& rho);

/// sum_k w_k log tr(rho Pi_k).
double log_likelihood(const WeightTable& table, const CMatrix& rho);

struct ReconstructionResult {
  DensityMatrix rho;
  double log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
  DensityDiagnostics diagnostics;
};

/// Least-squares solution of tr(rho Pi_k) = f_k with f_k normalized per
/// basis pair; Hermitian and unit trace by construction, positivity is only
/// reported in `diagnostics`. Bases with zero counts are dropped; throws
/// DataError if the remaining projectors do not determine rho.
ReconstructionResult linear_inversion(const WeightTable& table);
ReconstructionResult linear_inversion(const TomographyDataset& ds);

/// Negative mean log-likelihood over rho(x) = T^dagger T / tr(T^dagger T).
/// T is lower triangular: x[0..3] is the real diagonal, x[4..15] the
/// strictly-lower entries as (re, im) pairs, row by row.
class MleObjective {
 public:
  using Params = Eigen::Matrix<double, 16, 1>;

  explicit MleObjective(const WeightTable& table);

  double value(const Params& x) const;
  Params gradient(const Params& x) const;
  static CMatrix density(const Params& x);

 private:
  std::vector<CMatrix> projectors_;
  std::vector<double> weights_;
  double total_ = 0.0;
};

struct MleOptions {
  int max_iterations = 10000;
  double gradient_tolerance = 1e-8;
  double relative_tolerance = 1e-12;
};

/// Maximizes the multinomial likelihood over rho = T^dagger T / tr(T^dagger T)
/// with T lower triangular (real diagonal), starting from the
/// positivity-projected linear-inversion estimate. Requires all nine basis
/// pairs with nonzero totals. On hitting the iteration cap the best iterate
/// is returned with converged = false.
ReconstructionResult mle_reconstruct(const WeightTable& table, const MleOptions& opts = {});
ReconstructionResult mle_reconstruct(const TomographyDataset& ds, const MleOptions& opts = {});

/// Checks that the table covers the nine distinct basis pairs.
void require_full_coverage(const WeightTable& table);

struct MeasureUncertainties {
  EntanglementReport mean;
  EntanglementReport std_dev;
  int resamples_used = 0;
  int resamples_failed = 0;
  int resamples_not_converged = 0;
};

struct BootstrapOptions {
  unsigned threads = 0;  // 0 = hardware concurrency
  MleOptions mle;
};

/// Parametric multinomial bootstrap: each basis pair is resampled from its
/// observed frequencies with its observed total, then re-reconstructed by
/// MLE. Resamples whose reconstruction throws are counted and skipped.
MeasureUncertainties bootstrap_errors(const TomographyDataset& ds, int n_resamples,
                                      std::uint64_t seed, const BootstrapOptions& opts = {});

}  // namespace ces
