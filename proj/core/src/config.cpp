#include "ces/config.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>

#include "ces/bell.hpp"

#ifndef CES_VERSION
#define CES_VERSION "0.0.0"
#endif
#ifndef CES_SOURCE_DEFAULTS
#define CES_SOURCE_DEFAULTS ""
#endif
#ifndef CES_INSTALLED_DEFAULTS
#define CES_INSTALLED_DEFAULTS ""
#endif

namespace ces {
namespace {

[[noreturn]] void config_error(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

// Walks one JSON object, recording which keys were read so that anything
// left over can be reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) config_error(display(), "expected an object");
  }

  const Json& at(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) config_error(field(key), "missing");
    return j_.at(key);
  }

  double number(const std::string& key) {
    const Json& v = at(key);
    if (!v.is_number()) config_error(field(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) config_error(field(key), "must be finite");
    return x;
  }

  std::uint64_t unsigned_integer(const std::string& key) {
    const Json& v = at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) config_error(field(key), "must be non-negative");
    config_error(field(key), "expected an unsigned integer");
  }

  ObjectReader object(const std::string& key) { return ObjectReader(at(key), field(key)); }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) config_error(field(key), "unknown key");
    }
  }

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  std::string display() const { return path_.empty() ? "config" : path_; }

  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename Params>
void revalidate(const Params& p) {
  try {
    p.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
}

void write_canonical(std::string& out, const Json& j, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      std::vector<std::string> keys;
      for (const auto& [key, value] : j.items()) keys.push_back(key);
      std::sort(keys.begin(), keys.end());
      out += "{\n";
      for (std::size_t k = 0; k < keys.size(); ++k) {
        out += inner + Json(keys[k]).dump() + ": ";
        write_canonical(out, j.at(keys[k]), indent + 1);
        out += k + 1 < keys.size() ? ",\n" : "\n";
      }
      out += pad + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t k = 0; k < j.size(); ++k) {
        out += inner;
        write_canonical(out, j[k], indent + 1);
        out += k + 1 < j.size() ? ",\n" : "\n";
      }
      out += pad + "]";
      return;
    }
    case Json::value_t::number_float: {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", j.get<double>());
      out += buf;
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  revalidate(noise);
  revalidate(efficiency);
  revalidate(detector);
  if (!(dt_us >= 0.0) || !std::isfinite(dt_us)) config_error("dt_us", "must be finite and >= 0");
  if (n_sequences == 0) config_error("n_sequences", "must be positive");
  if (settings.size() != 4) config_error("settings", "expected exactly 4 analyzer settings");
  const ChshAngles angles{settings[0].alpha_deg, settings[2].alpha_deg, settings[0].beta_deg,
                          settings[1].beta_deg};
  const auto expected = angles.settings();
  for (std::size_t k = 0; k < 4; ++k) {
    if (!(settings[k] == expected[k])) {
      config_error("settings", "must be ordered (a,b), (a,b'), (a',b), (a',b')");
    }
  }
  if (same_angle(angles.alpha, angles.alpha_prime) || same_angle(angles.beta, angles.beta_prime)) {
    config_error("settings", "a != a' and b != b' required");
  }
  if (sweep_dt_us.size() < 3) config_error("sweep_dt_us", "needs at least 3 delays");
  for (double dt : sweep_dt_us) {
    if (!(dt >= 0.0) || !std::isfinite(dt)) config_error("sweep_dt_us", "delays must be >= 0");
  }
}

std::filesystem::path defaults_path() {
  if (const char* env = std::getenv("CES_DEFAULTS"); env != nullptr && *env != '\0') return env;
  const std::filesystem::path source = CES_SOURCE_DEFAULTS;
  if (!source.empty() && std::filesystem::exists(source)) return source;
  return CES_INSTALLED_DEFAULTS;
}

Json load_defaults_json() {
  const std::filesystem::path path = defaults_path();
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const DataError&) {
    throw ConfigError("defaults: cannot read " + path.string());
  }
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("defaults: " + path.string() + " is not valid JSON: " + e.what());
  }
}

ExperimentConfig config_from_json(const Json& user) {
  if (!user.is_object()) config_error("config", "expected a JSON object");
  Json merged = load_defaults_json();
  merged.merge_patch(user);

  ObjectReader root(merged, "");
  const std::uint64_t version = root.unsigned_integer("schema_version");
  if (version != kConfigSchemaVersion) {
    config_error("schema_version", "unsupported version " + std::to_string(version));
  }

  ExperimentConfig cfg;
  ObjectReader noise = root.object("noise");
  cfg.noise.v0 = noise.number("v0");
  cfg.noise.tau_e_us = noise.number("tau_e_us");
  cfg.noise.p_white = noise.number("p_white");
  cfg.noise.eta_pump = noise.number("eta_pump");
  noise.finish();

  ObjectReader eff = root.object("efficiency");
  cfg.efficiency.p_photon1 = eff.number("p_photon1");
  cfg.efficiency.p_photon2 = eff.number("p_photon2");
  cfg.efficiency.rep_rate_khz = eff.number("rep_rate_khz");
  eff.finish();

  ObjectReader det = root.object("detector");
  cfg.detector.eta_det = det.number("eta_det");
  cfg.detector.dark_rate = det.number("dark_rate");
  cfg.detector.window_fraction = det.number("window_fraction");
  cfg.detector.late_emission_error = det.number("late_emission_error");
  cfg.detector.late_threshold = det.number("late_threshold");
  cfg.detector.pulse_decay = det.number("pulse_decay");
  det.finish();
  cfg.efficiency.eta_det = cfg.detector.eta_det;

  cfg.dt_us = root.number("dt_us");
  cfg.seed = root.unsigned_integer("seed");
  cfg.n_sequences = root.unsigned_integer("n_sequences");

  const Json& settings = root.at("settings");
  if (!settings.is_array()) config_error("settings", "expected an array");
  for (std::size_t k = 0; k < settings.size(); ++k) {
    ObjectReader s(settings[k], "settings[" + std::to_string(k) + "]");
    const double alpha = s.number("alpha_deg");
    const double beta = s.number("beta_deg");
    s.finish();
    cfg.settings.emplace_back(alpha, beta);
  }

  const Json& sweep = root.at("sweep_dt_us");
  if (!sweep.is_array()) config_error("sweep_dt_us", "expected an array");
  for (std::size_t k = 0; k < sweep.size(); ++k) {
    if (!sweep[k].is_number()) {
      config_error("sweep_dt_us[" + std::to_string(k) + "]", "expected a number");
    }
    cfg.sweep_dt_us.push_back(sweep[k].get<double>());
  }
  root.finish();

  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config: file not found: " + path.string());
  Json user;
  try {
    user = Json::parse(read_text_file(path));
  } catch (const Json::parse_error& e) {
    throw ConfigError("config: " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(user);
}

Json config_to_json(const ExperimentConfig& cfg) {
  Json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["noise"] = Json{{"v0", cfg.noise.v0},
                    {"tau_e_us", cfg.noise.tau_e_us},
                    {"p_white", cfg.noise.p_white},
                    {"eta_pump", cfg.noise.eta_pump}};
  j["efficiency"] = Json{{"p_photon1", cfg.efficiency.p_photon1},
                         {"p_photon2", cfg.efficiency.p_photon2},
                         {"rep_rate_khz", cfg.efficiency.rep_rate_khz}};
  j["detector"] = Json{{"eta_det", cfg.detector.eta_det},
                       {"dark_rate", cfg.detector.dark_rate},
                       {"window_fraction", cfg.detector.window_fraction},
                       {"late_emission_error", cfg.detector.late_emission_error},
                       {"late_threshold", cfg.detector.late_threshold},
                       {"pulse_decay", cfg.detector.pulse_decay}};
  j["dt_us"] = cfg.dt_us;
  Json settings = Json::array();
  for (const MeasurementSetting& s : cfg.settings) {
    settings.push_back(Json{{"alpha_deg", s.alpha_deg}, {"beta_deg", s.beta_deg}});
  }
  j["settings"] = std::move(settings);
  j["seed"] = cfg.seed;
  j["n_sequences"] = cfg.n_sequences;
  j["sweep_dt_us"] = cfg.sweep_dt_us;
  return j;
}

std::string canonical_json(const Json& j) {
  std::string out;
  write_canonical(out, j, 0);
  out += '\n';
  return out;
}

std::string canonical_config(const ExperimentConfig& cfg) {
  return canonical_json(config_to_json(cfg));
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256: digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int k = 0; k < len; ++k) {
    out += hex[digest[k] >> 4];
    out += hex[digest[k] & 0xF];
  }
  return out;
}

std::string config_hash(const ExperimentConfig& cfg) { return sha256_hex(canonical_config(cfg)); }

void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path) {
  write_text_file(path, canonical_config(cfg));
}

const char* tool_version() { return CES_VERSION; }

}  // namespace ces
