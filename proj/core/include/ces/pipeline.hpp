#pragma once

// End-to-end runs: state model -> detection Monte Carlo -> analysis, plus the
// file-writing runner that records every output in a manifest.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ces/bell.hpp"
#include "ces/config.hpp"
#include "ces/fit.hpp"
#include "ces/measures.hpp"
#include "ces/tomography.hpp"

namespace ces {

enum class ReconstructionMethod { Mle, Linear };

ReconstructionMethod parse_method(const std::string& name);

struct RunOptions {
  ReconstructionMethod method = ReconstructionMethod::Mle;
  int bootstrap = 0;     // resamples; 0 disables
  unsigned threads = 0;  // 0 = hardware concurrency
};

struct BellRun {
  std::vector<SplitCounts> counts;  // one entry per configured setting
  BellResult photon1_in_a;          // S over (alpha, alpha'; beta, beta')
  BellResult photon1_in_b;          // S over (beta, beta'; alpha, alpha')
  ChshBound inferred;               // closed form on the detected state
};

BellRun simulate_bell(const ExperimentConfig& cfg, const RunOptions& opts = {});

/// Records of a BellRun in CSV order: all photon1_in_a, then photon1_in_b.
std::vector<CountRecord> bell_records(const BellRun& run);

struct TomoRun {
  double dt_us = 0.0;
  TomographyDataset dataset;
  ReconstructionResult reconstruction{DensityMatrix::maximally_mixed(4), 0.0, 0, false, {}};
  EntanglementReport report;
  std::optional<MeasureUncertainties> uncertainties;
};

TomoRun analyze_tomography(const TomographyDataset& ds, double dt_us, std::uint64_t seed,
                           const RunOptions& opts);
TomoRun simulate_tomo(const ExperimentConfig& cfg, double dt_us, std::uint64_t seed,
                      const RunOptions& opts = {});

struct SweepRun {
  std::vector<TomoRun> points;
  std::vector<LifetimePoint> series;  // E_N per delay
  LifetimeFit fit;
};

SweepRun simulate_sweep(const ExperimentConfig& cfg, const RunOptions& opts = {});

struct OutputEntry {
  std::string path;  // relative to the output directory
  std::string sha256;
};

struct RunManifest {
  std::string config_hash;
  std::string tool_version;
  std::uint64_t seed = 0;
  std::string mode;
  std::string status = "running";  // ok | not_converged | failed
  std::string error;
  std::string started_utc;
  std::string finished_utc;
  std::vector<OutputEntry> outputs;
};

Json to_json(const RunManifest& m);

/// Accumulates output files under one directory and writes manifest.json.
class RunRecorder {
 public:
  RunRecorder(std::filesystem::path out_dir, const ExperimentConfig& cfg, std::string mode);

  void write(const std::string& name, const std::string& content);
  void write_json(const std::string& name, const Json& j);

  /// Writes manifest.json with the given status.
  const RunManifest& finish(const std::string& status, const std::string& error = {});

  const std::filesystem::path& out_dir() const { return out_dir_; }

 private:
  std::filesystem::path out_dir_;
  RunManifest manifest_;
};

enum class PipelineMode { Simulate, Bell, Tomo, Sweep };

struct PipelineResult {
  RunManifest manifest;
  bool converged = true;
  Json summary;
};

/// Writes config.json, the mode's outputs and manifest.json into out_dir.
/// On a fatal error the manifest records the files written so far with
/// status "failed", and the error is rethrown.
PipelineResult run_pipeline(const ExperimentConfig& cfg, PipelineMode mode,
                            const std::filesystem::path& out_dir, const RunOptions& opts = {});

Json bell_json(const BellRun& run);
Json tomo_json(const TomoRun& run);
Json sweep_json(const SweepRun& run);

}  // namespace ces
