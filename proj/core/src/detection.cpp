#include "ces/detection.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

#include "ces/random.hpp"

namespace ces {
namespace {

void check_unit_interval(double value, const char* field) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw ValidationError(std::string(field) + ": must lie in [0, 1]");
  }
}

CMatrix projector(const StateVector& v) {
  const CVector& a = v.amplitudes();
  return a * a.adjoint();
}

// Tally for one run, in both layouts.
struct Tally {
  std::array<std::uint64_t, 4> arm_cells{};        // arm A port x arm B port
  std::array<std::uint64_t, 4> ordered_cells_a{};  // photon 1 in A, photon1 x photon2
  std::array<std::uint64_t, 4> ordered_cells_b{};  // photon 1 in B
  std::uint64_t discarded_a = 0;                   // photon 1 routed to A
  std::uint64_t discarded_b = 0;

  Tally& operator+=(const Tally& o) {
    for (int k = 0; k < 4; ++k) {
      arm_cells[k] += o.arm_cells[k];
      ordered_cells_a[k] += o.ordered_cells_a[k];
      ordered_cells_b[k] += o.ordered_cells_b[k];
    }
    discarded_a += o.discarded_a;
    discarded_b += o.discarded_b;
    return *this;
  }
};

using Cumulative = std::array<double, 4>;

Cumulative cumulative(const OutcomeProbabilities& p) {
  Cumulative c{};
  double acc = 0.0;
  for (int k = 0; k < 4; ++k) {
    acc += p[k];
    c[k] = acc;
  }
  return c;
}

int sample_cell(const Cumulative& c, double u) {
  const double x = u * c[3];
  for (int k = 0; k < 3; ++k)
    if (x < c[k]) return k;
  return 3;
}

struct EngineTables {
  // [order][depolarized]; order 0: photon 1 in arm A.
  Cumulative table[2][2];
};

Tally run_batch(const EngineTables& tables, const DetectorParams& det, std::uint64_t seed,
                std::uint64_t batch, std::uint64_t count) {
  PhiloxStream rng(seed, batch);
  Tally t;
  const double dark2 = det.dark_rate * det.window_fraction;
  for (std::uint64_t s = 0; s < count; ++s) {
    const std::uint32_t route = rng();
    const int arm1 = static_cast<int>(route & 1u);         // 0 = A, 1 = B
    const int arm2 = static_cast<int>((route >> 1) & 1u);
    if (arm1 == arm2) {
      (arm1 == 0 ? t.discarded_a : t.discarded_b) += 1;
      continue;
    }
    const double emission = det.emission_time(rng.uniform());
    const bool in_window = emission < det.window_fraction;
    const bool late = emission >= det.late_threshold;
    const bool depolarized = late && rng.bernoulli(det.late_emission_error);
    const int cell = sample_cell(tables.table[arm1][depolarized ? 1 : 0], rng.uniform());
    int port1 = cell >> 1;
    int port2 = cell & 1;

    const bool seen1 = rng.bernoulli(det.eta_det);
    const bool seen2 = rng.bernoulli(det.eta_det) && in_window;
    const bool dark_hit1 = rng.bernoulli(det.dark_rate);
    const std::uint32_t dark_ports = rng();
    const bool dark_hit2 = rng.bernoulli(dark2);
    if (dark_hit1) port1 = static_cast<int>(dark_ports & 1u);
    if (dark_hit2) port2 = static_cast<int>((dark_ports >> 1) & 1u);
    const bool click1 = seen1 || dark_hit1;
    const bool click2 = seen2 || dark_hit2;

    if (!(click1 && click2)) {
      (arm1 == 0 ? t.discarded_a : t.discarded_b) += 1;
      continue;
    }
    const int ordered = 2 * port1 + port2;
    if (arm1 == 0) {
      t.ordered_cells_a[ordered] += 1;
      t.arm_cells[ordered] += 1;
    } else {
      t.ordered_cells_b[ordered] += 1;
      t.arm_cells[2 * port2 + port1] += 1;
    }
  }
  return t;
}

Tally run_engine(const DensityMatrix& rho, const ProjectorPair& arm_a, const ProjectorPair& arm_b,
                 std::uint64_t n_sequences, const DetectorParams& det, std::uint64_t seed,
                 const SimulationOptions& opts) {
  require_two_qubit(rho);
  det.validate();
  if (n_sequences == 0) throw ValidationError("simulate: n_sequences must be positive");
  if (opts.batch_size == 0) throw ValidationError("simulate: batch_size must be positive");

  const DensityMatrix rho_late = depolarize_photon2(rho, 1.0);
  EngineTables tables;
  tables.table[0][0] = cumulative(outcome_probabilities(rho, arm_a, arm_b));
  tables.table[0][1] = cumulative(outcome_probabilities(rho_late, arm_a, arm_b));
  tables.table[1][0] = cumulative(outcome_probabilities(rho, arm_b, arm_a));
  tables.table[1][1] = cumulative(outcome_probabilities(rho_late, arm_b, arm_a));

  const std::uint64_t n_batches = (n_sequences + opts.batch_size - 1) / opts.batch_size;
  unsigned threads = opts.threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                       : opts.threads;
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, n_batches));

  auto batch_len = [&](std::uint64_t b) {
    return std::min(opts.batch_size, n_sequences - b * opts.batch_size);
  };

  std::vector<Tally> partial(threads);
  auto worker = [&](unsigned w) {
    for (std::uint64_t b = w; b < n_batches; b += threads) {
      partial[w] += run_batch(tables, det, seed, b, batch_len(b));
    }
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker, w);
  }
  Tally total;
  for (const Tally& p : partial) total += p;
  return total;
}

CountRecord make_record(const MeasurementSetting& setting, const std::array<std::uint64_t, 4>& c,
                        std::uint64_t discarded) {
  CountRecord r;
  r.setting = setting;
  r.n_uu = c[0];
  r.n_ud = c[1];
  r.n_du = c[2];
  r.n_dd = c[3];
  r.n_discarded = discarded;
  return r;
}

}  // namespace

double normalize_angle(double deg) {
  if (!std::isfinite(deg)) throw ValidationError("angle must be finite");
  double r = std::fmod(deg, 180.0);
  if (r < 0.0) r += 180.0;
  if (r >= 180.0) r -= 180.0;
  return r;
}

bool same_angle(double a_deg, double b_deg, double tol) {
  const double d = std::abs(normalize_angle(a_deg) - normalize_angle(b_deg));
  return d <= tol || 180.0 - d <= tol;
}

MeasurementSetting::MeasurementSetting(double alpha, double beta)
    : alpha_deg(normalize_angle(alpha)), beta_deg(normalize_angle(beta)) {}

bool MeasurementSetting::operator==(const MeasurementSetting& other) const {
  return same_angle(alpha_deg, other.alpha_deg) && same_angle(beta_deg, other.beta_deg);
}

char basis_label(Basis b) {
  switch (b) {
    case Basis::HV: return 'H';
    case Basis::DA: return 'D';
    case Basis::RL: return 'R';
  }
  return '?';
}

Basis parse_basis(const std::string& label) {
  if (label == "H" || label == "V" || label == "HV") return Basis::HV;
  if (label == "D" || label == "A" || label == "DA") return Basis::DA;
  if (label == "R" || label == "L" || label == "RL") return Basis::RL;
  throw DataError("unknown basis label '" + label + "' (expected H, D or R)");
}

void DetectorParams::validate() const {
  check_unit_interval(eta_det, "detector.eta_det");
  check_unit_interval(dark_rate, "detector.dark_rate");
  check_unit_interval(late_emission_error, "detector.late_emission_error");
  check_unit_interval(late_threshold, "detector.late_threshold");
  if (!(window_fraction > 0.0 && window_fraction <= 1.0)) {
    throw ValidationError("detector.window_fraction: must lie in (0, 1]");
  }
  if (!(pulse_decay >= 0.0) || !std::isfinite(pulse_decay)) {
    throw ValidationError("detector.pulse_decay: must be finite and >= 0");
  }
}

double DetectorParams::emission_cdf(double t) const {
  t = std::clamp(t, 0.0, 1.0);
  if (pulse_decay < 1e-12) return t;
  return -std::expm1(-pulse_decay * t) / -std::expm1(-pulse_decay);
}

double DetectorParams::emission_time(double u) const {
  if (pulse_decay < 1e-12) return u;
  return -std::log1p(u * std::expm1(-pulse_decay)) / pulse_decay;
}

double DetectorParams::late_fraction() const {
  const double in_window = emission_cdf(window_fraction);
  if (in_window <= 0.0) return 0.0;
  const double late = in_window - emission_cdf(std::min(late_threshold, window_fraction));
  return std::max(0.0, late) / in_window;
}

ProjectorPair analyzer_projectors(double theta_deg) {
  const CMatrix up = projector(states::linear(theta_deg));
  const CMatrix down = CMatrix::Identity(2, 2) - up;
  return ProjectorPair{HermitianOperator(up), HermitianOperator(down)};
}

CMatrix quarter_wave_plate() {
  // H/V-basis matrix (1/sqrt2)[[1, i], [i, 1]] expressed in the sigma basis.
  CMatrix hv_to_sigma(2, 2);
  hv_to_sigma.col(0) = states::horizontal().amplitudes();
  hv_to_sigma.col(1) = states::vertical().amplitudes();
  CMatrix q_hv(2, 2);
  const double s = std::numbers::sqrt2 / 2.0;
  q_hv << s, Complex(0.0, s), Complex(0.0, s), s;
  return hv_to_sigma * q_hv * hv_to_sigma.adjoint();
}

ProjectorPair basis_projectors(Basis b) {
  switch (b) {
    case Basis::HV: return analyzer_projectors(0.0);
    case Basis::DA: return analyzer_projectors(45.0);
    case Basis::RL: {
      const CMatrix q = quarter_wave_plate();
      const ProjectorPair bare = analyzer_projectors(0.0);
      const CMatrix up = q.adjoint() * bare.up.matrix() * q;
      const CMatrix down = CMatrix::Identity(2, 2) - up;
      return ProjectorPair{HermitianOperator(up), HermitianOperator(down)};
    }
  }
  throw ValidationError("basis_projectors: unknown basis");
}

double basis_analyzer_angle(Basis b) { return b == Basis::DA ? 45.0 : 0.0; }

OutcomeProbabilities outcome_probabilities(const DensityMatrix& rho, const ProjectorPair& first,
                                           const ProjectorPair& second) {
  require_two_qubit(rho);
  OutcomeProbabilities p{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const CMatrix joint = tensor(first.port(i).matrix(), second.port(j).matrix());
      p[2 * i + j] = std::max(0.0, (rho.matrix() * joint).trace().real());
    }
  return p;
}

OutcomeProbabilities outcome_probabilities(const DensityMatrix& rho,
                                           const MeasurementSetting& setting) {
  return outcome_probabilities(rho, analyzer_projectors(setting.alpha_deg),
                               analyzer_projectors(setting.beta_deg));
}

DensityMatrix depolarize_photon2(const DensityMatrix& rho, double p) {
  if (rho.dim() != 4) throw DimensionError("depolarize_photon2: expected 4x4");
  check_unit_interval(p, "depolarization probability");
  const CMatrix reduced = partial_trace(rho.matrix(), 2, 2, 1);
  return DensityMatrix((1.0 - p) * rho.matrix() +
                       p * tensor(reduced, CMatrix::Identity(2, 2) / 2.0));
}

double coincidence_probability(const DetectorParams& det) {
  det.validate();
  const double dark2 = det.dark_rate * det.window_fraction;
  const double click1 = det.dark_rate + (1.0 - det.dark_rate) * det.eta_det;
  const double click2 = dark2 + (1.0 - dark2) * det.eta_det * det.window_acceptance();
  return click1 * click2;
}

DensityMatrix detected_state(const DensityMatrix& rho, const DetectorParams& det) {
  require_two_qubit(rho);
  det.validate();
  const double dark2 = det.dark_rate * det.window_fraction;
  const double photon1 = (1.0 - det.dark_rate) * det.eta_det;
  const double photon2 = (1.0 - dark2) * det.eta_det * det.window_acceptance();
  const double w_pp = photon1 * photon2;
  const double w_pd = photon1 * dark2;
  const double w_dp = det.dark_rate * photon2;
  const double w_dd = det.dark_rate * dark2;
  const double total = w_pp + w_pd + w_dp + w_dd;
  if (total <= 0.0) throw DataError("detected_state: coincidence probability is zero");

  const CMatrix half_id = CMatrix::Identity(2, 2) / 2.0;
  const CMatrix rho1 = partial_trace(rho.matrix(), 2, 2, 1);
  const CMatrix both =
      depolarize_photon2(rho, det.late_emission_error * det.late_fraction()).matrix();
  // Late depolarization changes the photon-2 marginal seen beside a dark count.
  const CMatrix rho2 = partial_trace(both, 2, 2, 0);
  const CMatrix out = (w_pp * both + w_pd * tensor(rho1, half_id) + w_dp * tensor(half_id, rho2) +
                       w_dd * CMatrix::Identity(4, 4) / 4.0) /
                      total;
  return DensityMatrix(out);
}

CountRecord simulate_counts(const DensityMatrix& rho, const MeasurementSetting& setting,
                            std::uint64_t n_sequences, const DetectorParams& det,
                            std::uint64_t seed, const SimulationOptions& opts) {
  const Tally t = run_engine(rho, analyzer_projectors(setting.alpha_deg),
                             analyzer_projectors(setting.beta_deg), n_sequences, det, seed, opts);
  return make_record(setting, t.arm_cells, t.discarded_a + t.discarded_b);
}

SplitCounts simulate_split_counts(const DensityMatrix& rho, const MeasurementSetting& setting,
                                  std::uint64_t n_sequences, const DetectorParams& det,
                                  std::uint64_t seed, const SimulationOptions& opts) {
  const Tally t = run_engine(rho, analyzer_projectors(setting.alpha_deg),
                             analyzer_projectors(setting.beta_deg), n_sequences, det, seed, opts);
  return SplitCounts{
      make_record(setting, t.ordered_cells_a, t.discarded_a),
      make_record(MeasurementSetting(setting.beta_deg, setting.alpha_deg), t.ordered_cells_b,
                  t.discarded_b),
  };
}

std::uint64_t TomographyDataset::total_coincidences() const {
  std::uint64_t n = 0;
  for (const auto& r : records) n += r.counts.coincidences();
  return n;
}

TomographyDataset simulate_tomography_dataset(const DensityMatrix& rho, std::uint64_t n_per_basis,
                                              const DetectorParams& det, std::uint64_t seed,
                                              const SimulationOptions& opts) {
  TomographyDataset ds;
  std::uint64_t index = 0;
  for (Basis a : kBases) {
    for (Basis b : kBases) {
      const Tally t = run_engine(rho, basis_projectors(a), basis_projectors(b), n_per_basis, det,
                                 derive_seed(seed, index++), opts);
      const MeasurementSetting setting(basis_analyzer_angle(a), basis_analyzer_angle(b));
      std::uint64_t photon1_in_b = t.discarded_b;
      for (auto c : t.ordered_cells_b) photon1_in_b += c;
      ds.records.push_back(
          {a, b, make_record(setting, t.ordered_cells_a, t.discarded_a + photon1_in_b)});
    }
  }
  return ds;
}

}  // namespace ces
