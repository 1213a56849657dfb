// ces: simulate and analyse atom-cavity photon-pair entanglement runs.
//
// Exit codes: 0 success, 2 configuration error, 3 data error,
// 4 non-convergence (outputs are still written).

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "ces/config.hpp"
#include "ces/errors.hpp"
#include "ces/io.hpp"
#include "ces/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNotConverged = 4;

struct GlobalFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "ces_output";
  std::optional<std::uint64_t> trials;
  std::string method = "mle";
  int bootstrap = 0;
  unsigned threads = 0;
  std::string input;
};

ces::ExperimentConfig load(const GlobalFlags& f) {
  ces::ExperimentConfig cfg =
      f.config_path.empty() ? ces::config_from_json(ces::Json::object()) : ces::load_config(f.config_path);
  if (f.seed) cfg.seed = *f.seed;
  if (f.trials) {
    if (*f.trials == 0) throw ces::ConfigError("trials: must be positive");
    cfg.n_sequences = *f.trials;
  }
  return cfg;
}

ces::RunOptions run_options(const GlobalFlags& f) {
  ces::RunOptions o;
  o.method = ces::parse_method(f.method);
  if (f.bootstrap < 0) throw ces::ConfigError("bootstrap: must be >= 0");
  if (f.bootstrap > 0 && f.bootstrap < 100) {
    throw ces::ConfigError("bootstrap: at least 100 resamples required");
  }
  o.bootstrap = f.bootstrap;
  o.threads = f.threads;
  return o;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ces::DataError("cannot open " + path);
  return in;
}

void print(const ces::Json& j) { std::cout << j.dump(2) << "\n"; }

int finish(ces::RunRecorder& rec, bool converged) {
  rec.finish(converged ? "ok" : "not_converged");
  return converged ? kExitOk : kExitNotConverged;
}

// Runs `body` against a recorder so that partial outputs are listed in the
// manifest when something fails.
template <typename Body>
int recorded(const GlobalFlags& f, const ces::ExperimentConfig& cfg, const char* mode, Body&& body) {
  ces::RunRecorder rec(f.out_dir, cfg, mode);
  try {
    rec.write("config.json", ces::canonical_config(cfg));
    return body(rec);
  } catch (const std::exception& e) {
    rec.finish("failed", e.what());
    throw;
  }
}

int pipeline(const GlobalFlags& f, ces::PipelineMode mode) {
  const ces::ExperimentConfig cfg = load(f);
  const ces::PipelineResult r = ces::run_pipeline(cfg, mode, f.out_dir, run_options(f));
  print(r.summary);
  return r.converged ? kExitOk : kExitNotConverged;
}

int bell_from_file(const GlobalFlags& f) {
  const ces::ExperimentConfig cfg = load(f);
  return recorded(f, cfg, "bell", [&](ces::RunRecorder& rec) {
    std::ifstream in = open_input(f.input);
    const std::vector<ces::CountRecord> records = ces::read_count_records_csv(in);
    if (records.empty() || records.size() % 4 != 0) {
      throw ces::DataError("bell: expected groups of 4 CHSH records, got " +
                           std::to_string(records.size()));
    }
    ces::Json groups = ces::Json::array();
    for (std::size_t g = 0; g < records.size(); g += 4) {
      const std::span<const ces::CountRecord> group(records.data() + g, 4);
      groups.push_back(ces::to_json(ces::chsh_from_counts(group, ces::infer_chsh_angles(group))));
    }
    ces::Json out;
    for (const char* key : {"S", "std_err", "settings", "E_values"}) out[key] = groups[0][key];
    if (groups.size() > 1) out["groups"] = groups;
    rec.write_json("bell.json", out);
    print(out);
    return finish(rec, true);
  });
}

int tomo_from_file(const GlobalFlags& f) {
  const ces::ExperimentConfig cfg = load(f);
  const ces::RunOptions opts = run_options(f);
  return recorded(f, cfg, "tomo", [&](ces::RunRecorder& rec) {
    std::ifstream in = open_input(f.input);
    const ces::TomographyDataset ds = ces::read_tomography_csv(in);
    const ces::TomoRun run = ces::analyze_tomography(ds, cfg.dt_us, cfg.seed, opts);
    ces::Json out = ces::tomo_json(run);
    out.erase("dt_us");
    out["method"] = f.method;
    rec.write_json("tomo.json", out);
    print(out);
    return finish(rec, run.reconstruction.converged);
  });
}

int measures(const GlobalFlags& f) {
  const ces::ExperimentConfig cfg = load(f);
  return recorded(f, cfg, "measures", [&](ces::RunRecorder& rec) {
    ces::Json state;
    try {
      state = ces::Json::parse(ces::read_text_file(f.input));
    } catch (const ces::Json::parse_error& e) {
      throw ces::DataError(f.input + " is not valid JSON: " + e.what());
    }
    const ces::DensityMatrix rho = ces::density_from_json(state);
    ces::Json out = ces::to_json(ces::report(rho));
    out["chsh"] = ces::to_json(ces::max_chsh_from_state(rho));
    rec.write_json("measures.json", out);
    print(out);
    return finish(rec, true);
  });
}

int fit(const GlobalFlags& f) {
  const ces::ExperimentConfig cfg = load(f);
  return recorded(f, cfg, "fit", [&](ces::RunRecorder& rec) {
    std::ifstream in = open_input(f.input);
    const std::vector<ces::LifetimePoint> series = ces::read_series_csv(in);
    const ces::LifetimeFit result = ces::fit_lifetime(series);
    const ces::Json out = ces::to_json(result);
    rec.write_json("fit.json", out);
    print(out);
    return finish(rec, result.converged);
  });
}

int rates(const GlobalFlags& f) {
  const ces::ExperimentConfig cfg = load(f);
  return recorded(f, cfg, "rates", [&](ces::RunRecorder& rec) {
    const ces::RateReport r = ces::rate_budget(cfg.efficiency);
    rec.write_json("rates.json", ces::to_json(r));
    std::printf("%-28s %14s\n", "quantity", "value");
    std::printf("%-28s %14.4e\n", "p_pair_detect / sequence", r.p_pair_detect);
    std::printf("%-28s %14.2f\n", "pairs produced / s", r.pairs_produced_per_s);
    std::printf("%-28s %14.2f\n", "pairs detected / s", r.pairs_detected_per_s);
    return finish(rec, true);
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Single-atom cavity photon-pair entanglement simulator"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalFlags flags;
  app.add_option("--config", flags.config_path, "Experiment config JSON (merged over defaults)");
  app.add_option("--seed", flags.seed, "Override the config seed");
  app.add_option("--out", flags.out_dir, "Output directory")->capture_default_str();
  app.add_option("--trials", flags.trials, "Sequences per setting / basis pair");
  app.add_option("--method", flags.method, "Tomography reconstruction")
      ->check(CLI::IsMember({"mle", "linear"}))
      ->capture_default_str();
  app.add_option("--bootstrap", flags.bootstrap, "Bootstrap resamples (0 = off, else >= 100)");
  app.add_option("--threads", flags.threads, "Worker threads (0 = all cores)");

  auto* simulate = app.add_subcommand("simulate", "Write raw CHSH and tomography count data");
  auto* bell = app.add_subcommand("bell", "CHSH analysis (simulated, or of a counts CSV)");
  bell->add_option("counts", flags.input, "Count-record CSV");
  auto* tomo = app.add_subcommand("tomo", "State tomography (simulated, or of a dataset CSV)");
  tomo->add_option("dataset", flags.input, "Tomography dataset CSV");
  auto* meas = app.add_subcommand("measures", "Entanglement measures of a density matrix");
  meas->add_option("state", flags.input, "Density matrix JSON")->required();
  auto* fitcmd = app.add_subcommand("fit", "Fit the storage lifetime to a negativity series");
  fitcmd->add_option("series", flags.input, "Series CSV")->required();
  auto* ratescmd = app.add_subcommand("rates", "Pair-rate budget");
  auto* sweep = app.add_subcommand("sweep", "Tomography over the delay grid plus lifetime fit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*simulate) return pipeline(flags, ces::PipelineMode::Simulate);
    if (*bell) return flags.input.empty() ? pipeline(flags, ces::PipelineMode::Bell) : bell_from_file(flags);
    if (*tomo) return flags.input.empty() ? pipeline(flags, ces::PipelineMode::Tomo) : tomo_from_file(flags);
    if (*meas) return measures(flags);
    if (*fitcmd) return fit(flags);
    if (*ratescmd) return rates(flags);
    if (*sweep) return pipeline(flags, ces::PipelineMode::Sweep);
  } catch (const ces::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ces::Error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
