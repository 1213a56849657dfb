#pragma once

// Experiment configuration: JSON loading over the shipped defaults,
// strict schema checks, canonical serialization and the config digest.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ces/detection.hpp"
#include "ces/io.hpp"
#include "ces/protocol.hpp"

namespace ces {

inline constexpr int kConfigSchemaVersion = 1;

struct ExperimentConfig {
  NoiseParams noise;
  EfficiencyParams efficiency;  // efficiency.eta_det mirrors detector.eta_det
  DetectorParams detector;
  double dt_us = 0.8;
  std::vector<MeasurementSetting> settings;  // CHSH order, see ChshAngles::settings()
  std::uint64_t seed = 1;
  std::uint64_t n_sequences = 1000000;  // per analyzer setting and per basis pair
  std::vector<double> sweep_dt_us;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Path of the defaults file: $CES_DEFAULTS, else the source-tree copy,
/// else the installed copy.
std::filesystem::path defaults_path();
Json load_defaults_json();

/// `user` is deep-merged over the defaults; unknown keys, type mismatches
/// and out-of-range values raise ConfigError with the field path.
ExperimentConfig config_from_json(const Json& user);
ExperimentConfig load_config(const std::filesystem::path& path);

Json config_to_json(const ExperimentConfig& cfg);

/// Sorted keys, two-space indent, doubles with 17 significant digits.
std::string canonical_json(const Json& j);
std::string canonical_config(const ExperimentConfig& cfg);

/// Hex SHA-256.
std::string sha256_hex(const std::string& data);
std::string config_hash(const ExperimentConfig& cfg);

void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path);

const char* tool_version();

}  // namespace ces
