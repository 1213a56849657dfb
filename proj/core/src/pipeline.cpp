#include "ces/pipeline.hpp"

#include <chrono>
#include <ctime>
#include <sstream>

#include "ces/random.hpp"

namespace ces {
namespace {

// Sub-task tags for derive_seed.
constexpr std::uint64_t kBellTag = 0x100;
constexpr std::uint64_t kTomoTag = 0x200;
constexpr std::uint64_t kSweepTag = 0x300;
constexpr std::uint64_t kBootstrapTag = 0xB007;

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ChshAngles angles_of(const ExperimentConfig& cfg) {
  return ChshAngles{cfg.settings[0].alpha_deg, cfg.settings[2].alpha_deg,
                    cfg.settings[0].beta_deg, cfg.settings[1].beta_deg};
}

SimulationOptions sim_options(const RunOptions& opts) {
  SimulationOptions s;
  s.threads = opts.threads;
  return s;
}

const char* method_name(ReconstructionMethod m) {
  return m == ReconstructionMethod::Mle ? "mle" : "linear";
}

}  // namespace

ReconstructionMethod parse_method(const std::string& name) {
  if (name == "mle") return ReconstructionMethod::Mle;
  if (name == "linear") return ReconstructionMethod::Linear;
  throw ConfigError("method: expected mle or linear, got '" + name + "'");
}

BellRun simulate_bell(const ExperimentConfig& cfg, const RunOptions& opts) {
  const DensityMatrix rho = final_state(cfg.noise, cfg.dt_us);
  BellRun run;
  for (std::size_t k = 0; k < cfg.settings.size(); ++k) {
    run.counts.push_back(simulate_split_counts(rho, cfg.settings[k], cfg.n_sequences,
                                               cfg.detector, derive_seed(cfg.seed, kBellTag + k),
                                               sim_options(opts)));
  }
  const ChshAngles a = angles_of(cfg);
  std::vector<CountRecord> in_a;
  std::vector<CountRecord> in_b;
  for (const SplitCounts& c : run.counts) {
    in_a.push_back(c.photon1_in_a);
    in_b.push_back(c.photon1_in_b);
  }
  run.photon1_in_a = chsh_from_counts(in_a, a);
  // Photon 1 sits behind arm B's analyzer, so its angles are (beta, beta').
  run.photon1_in_b = chsh_from_counts(in_b, ChshAngles{a.beta, a.beta_prime, a.alpha,
                                                       a.alpha_prime});
  run.inferred = max_chsh_from_state(detected_state(rho, cfg.detector), false);
  return run;
}

std::vector<CountRecord> bell_records(const BellRun& run) {
  std::vector<CountRecord> out;
  for (const SplitCounts& c : run.counts) out.push_back(c.photon1_in_a);
  for (const SplitCounts& c : run.counts) out.push_back(c.photon1_in_b);
  return out;
}

TomoRun analyze_tomography(const TomographyDataset& ds, double dt_us, std::uint64_t seed,
                           const RunOptions& opts) {
  TomoRun run;
  run.dt_us = dt_us;
  run.dataset = ds;
  if (opts.method == ReconstructionMethod::Mle) {
    run.reconstruction = mle_reconstruct(ds);
    run.report = report(run.reconstruction.rho);
  } else {
    run.reconstruction = linear_inversion(ds);
    // Linear inversion may leave small negative eigenvalues; measures are
    // evaluated on the nearest physical state.
    run.report = report(run.reconstruction.diagnostics.valid()
                            ? run.reconstruction.rho
                            : project_to_physical(run.reconstruction.rho.matrix()));
  }
  if (opts.bootstrap > 0) {
    BootstrapOptions b;
    b.threads = opts.threads;
    run.uncertainties = bootstrap_errors(ds, opts.bootstrap, derive_seed(seed, kBootstrapTag), b);
  }
  return run;
}

TomoRun simulate_tomo(const ExperimentConfig& cfg, double dt_us, std::uint64_t seed,
                      const RunOptions& opts) {
  const DensityMatrix rho = final_state(cfg.noise, dt_us);
  const TomographyDataset ds =
      simulate_tomography_dataset(rho, cfg.n_sequences, cfg.detector, seed, sim_options(opts));
  return analyze_tomography(ds, dt_us, seed, opts);
}

SweepRun simulate_sweep(const ExperimentConfig& cfg, const RunOptions& opts) {
  SweepRun run;
  for (std::size_t k = 0; k < cfg.sweep_dt_us.size(); ++k) {
    TomoRun t = simulate_tomo(cfg, cfg.sweep_dt_us[k], derive_seed(cfg.seed, kSweepTag + k), opts);
    LifetimePoint p;
    p.dt_us = t.dt_us;
    p.value = t.report.log_negativity;
    p.kind = SeriesKind::LogNegativity;
    if (t.uncertainties && t.uncertainties->resamples_used > 1) {
      p.sigma = t.uncertainties->std_dev.log_negativity;
    }
    run.series.push_back(p);
    run.points.push_back(std::move(t));
  }
  run.fit = fit_lifetime(run.series);
  return run;
}

Json to_json(const RunManifest& m) {
  Json j;
  j["config_hash"] = m.config_hash;
  j["tool_version"] = m.tool_version;
  j["seed"] = m.seed;
  j["mode"] = m.mode;
  j["status"] = m.status;
  if (!m.error.empty()) j["error"] = m.error;
  j["started_utc"] = m.started_utc;
  j["finished_utc"] = m.finished_utc;
  Json outputs = Json::array();
  for (const OutputEntry& o : m.outputs) outputs.push_back(Json{{"path", o.path}, {"sha256", o.sha256}});
  j["outputs"] = std::move(outputs);
  return j;
}

RunRecorder::RunRecorder(std::filesystem::path out_dir, const ExperimentConfig& cfg,
                         std::string mode)
    : out_dir_(std::move(out_dir)) {
  manifest_.config_hash = config_hash(cfg);
  manifest_.tool_version = tool_version();
  manifest_.seed = cfg.seed;
  manifest_.mode = std::move(mode);
  manifest_.started_utc = utc_now();
  std::filesystem::create_directories(out_dir_);
}

void RunRecorder::write(const std::string& name, const std::string& content) {
  write_text_file(out_dir_ / name, content);
  manifest_.outputs.push_back({name, sha256_hex(content)});
}

void RunRecorder::write_json(const std::string& name, const Json& j) {
  write(name, j.dump(2) + "\n");
}

const RunManifest& RunRecorder::finish(const std::string& status, const std::string& error) {
  manifest_.status = status;
  manifest_.error = error;
  manifest_.finished_utc = utc_now();
  write_text_file(out_dir_ / "manifest.json", to_json(manifest_).dump(2) + "\n");
  return manifest_;
}

Json bell_json(const BellRun& run) {
  Json first = to_json(run.photon1_in_a);
  Json j;
  j["S"] = first["S"];
  j["std_err"] = first["std_err"];
  j["settings"] = first["settings"];
  j["E_values"] = first["E_values"];
  j["groups"] = Json::array({to_json(run.photon1_in_a), to_json(run.photon1_in_b)});
  j["model"] = Json{{"s_max", run.inferred.s_max}, {"achieved_s", run.inferred.achieved_s}};
  return j;
}

Json tomo_json(const TomoRun& run) {
  Json j = to_json(run.reconstruction);
  j["dt_us"] = run.dt_us;
  j["coincidences"] = run.dataset.total_coincidences();
  j["metrics"] = to_json(run.report);
  if (run.uncertainties) j["bootstrap"] = to_json(*run.uncertainties);
  return j;
}

Json sweep_json(const SweepRun& run) {
  Json points = Json::array();
  for (const TomoRun& t : run.points) {
    Json p;
    p["dt_us"] = t.dt_us;
    p["coincidences"] = t.dataset.total_coincidences();
    p["converged"] = t.reconstruction.converged;
    p["metrics"] = to_json(t.report);
    if (t.uncertainties) p["bootstrap"] = to_json(*t.uncertainties);
    points.push_back(std::move(p));
  }
  Json j;
  j["points"] = std::move(points);
  j["fit"] = to_json(run.fit);
  return j;
}

PipelineResult run_pipeline(const ExperimentConfig& cfg, PipelineMode mode,
                            const std::filesystem::path& out_dir, const RunOptions& opts) {
  static const char* names[] = {"simulate", "bell", "tomo", "sweep"};
  RunRecorder rec(out_dir, cfg, names[static_cast<int>(mode)]);
  PipelineResult result;
  try {
    rec.write("config.json", canonical_config(cfg));
    switch (mode) {
      case PipelineMode::Simulate: {
        const BellRun bell = simulate_bell(cfg, opts);
        std::ostringstream counts;
        write_count_records_csv(counts, bell_records(bell));
        rec.write("counts.csv", counts.str());
        const TomographyDataset ds = simulate_tomography_dataset(
            final_state(cfg.noise, cfg.dt_us), cfg.n_sequences, cfg.detector,
            derive_seed(cfg.seed, kTomoTag), sim_options(opts));
        std::ostringstream tomo;
        write_tomography_csv(tomo, ds);
        rec.write("tomography.csv", tomo.str());
        result.summary = Json{{"bell_records", 2 * bell.counts.size()},
                              {"tomography_coincidences", ds.total_coincidences()}};
        break;
      }
      case PipelineMode::Bell: {
        const BellRun bell = simulate_bell(cfg, opts);
        std::ostringstream counts;
        write_count_records_csv(counts, bell_records(bell));
        rec.write("counts.csv", counts.str());
        result.summary = bell_json(bell);
        rec.write_json("bell.json", result.summary);
        break;
      }
      case PipelineMode::Tomo: {
        const TomoRun t = simulate_tomo(cfg, cfg.dt_us, derive_seed(cfg.seed, kTomoTag), opts);
        std::ostringstream tomo;
        write_tomography_csv(tomo, t.dataset);
        rec.write("tomography.csv", tomo.str());
        result.summary = tomo_json(t);
        result.summary["method"] = method_name(opts.method);
        rec.write_json("tomo.json", result.summary);
        result.converged = t.reconstruction.converged;
        break;
      }
      case PipelineMode::Sweep: {
        const SweepRun s = simulate_sweep(cfg, opts);
        std::ostringstream series;
        write_series_csv(series, s.series);
        rec.write("series.csv", series.str());
        result.summary = sweep_json(s);
        rec.write_json("sweep.json", result.summary);
        result.converged = s.fit.converged;
        for (const TomoRun& t : s.points) result.converged = result.converged && t.reconstruction.converged;
        break;
      }
    }
  } catch (const std::exception& e) {
    rec.finish("failed", e.what());
    throw;
  }
  result.manifest = rec.finish(result.converged ? "ok" : "not_converged");
  return result;
}

}  // namespace ces
