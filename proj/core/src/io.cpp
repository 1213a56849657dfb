#include "ces/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace ces {
namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

[[noreturn]] void csv_error(std::size_t line_no, const std::string& what) {
  throw DataError("CSV line " + std::to_string(line_no) + ": " + what);
}

double parse_double(const std::string& s, std::size_t line_no, const char* column) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    csv_error(line_no, std::string("bad number in column ") + column + ": '" + s + "'");
  }
  return v;
}

std::uint64_t parse_count(const std::string& s, std::size_t line_no, const char* column) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    csv_error(line_no, std::string("bad count in column ") + column + ": '" + s + "'");
  }
  return v;
}

// Yields data rows (header checked and skipped, blank lines ignored).
template <typename RowFn>
void for_each_row(std::istream& is, const std::vector<std::string>& header,
                  std::size_t min_columns, RowFn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (!header_seen) {
      header_seen = true;
      const std::size_t n = std::min(fields.size(), header.size());
      if (fields.size() < min_columns ||
          !std::equal(fields.begin(), fields.begin() + static_cast<std::ptrdiff_t>(n),
                      header.begin())) {
        std::string expected;
        for (const auto& h : header) expected += (expected.empty() ? "" : ",") + h;
        csv_error(line_no, "unexpected header, expected " + expected);
      }
      continue;
    }
    if (fields.size() < min_columns || fields.size() > header.size()) {
      csv_error(line_no, "wrong number of columns");
    }
    fn(fields, line_no);
  }
  if (!header_seen) throw DataError("CSV input is empty");
}

CountRecord parse_counts(const std::vector<std::string>& f, std::size_t offset,
                         std::size_t line_no) {
  CountRecord r;
  r.setting = MeasurementSetting(parse_double(f[offset], line_no, "alpha_deg"),
                                 parse_double(f[offset + 1], line_no, "beta_deg"));
  r.n_uu = parse_count(f[offset + 2], line_no, "n_uu");
  r.n_ud = parse_count(f[offset + 3], line_no, "n_ud");
  r.n_du = parse_count(f[offset + 4], line_no, "n_du");
  r.n_dd = parse_count(f[offset + 5], line_no, "n_dd");
  r.n_discarded = parse_count(f[offset + 6], line_no, "n_discarded");
  return r;
}

void write_counts(std::ostream& os, const CountRecord& r) {
  os << format_double(r.setting.alpha_deg) << ',' << format_double(r.setting.beta_deg) << ','
     << r.n_uu << ',' << r.n_ud << ',' << r.n_du << ',' << r.n_dd << ',' << r.n_discarded;
}

const std::vector<std::string> kCountHeader = {"alpha_deg", "beta_deg", "n_uu",       "n_ud",
                                               "n_du",      "n_dd",     "n_discarded"};
const std::vector<std::string> kTomoHeader = {"basis_a", "basis_b", "alpha_deg",  "beta_deg",
                                              "n_uu",    "n_ud",    "n_du",       "n_dd",
                                              "n_discarded"};
const std::vector<std::string> kSeriesHeader = {"dt_us", "value", "kind", "sigma"};

Json report_fields(const EntanglementReport& r) {
  Json j;
  j["fidelity"] = r.fidelity_singlet;
  j["concurrence"] = r.concurrence;
  j["eof"] = r.eof;
  j["negativity"] = r.negativity;
  j["log_negativity"] = r.log_negativity;
  j["s_max"] = r.s_max;
  return j;
}

Json vec3(const Eigen::Vector3d& v) { return Json::array({v.x(), v.y(), v.z()}); }

}  // namespace

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

Json density_to_json(const DensityMatrix& rho) {
  Json re = Json::array();
  Json im = Json::array();
  for (int i = 0; i < rho.dim(); ++i)
    for (int j = 0; j < rho.dim(); ++j) {
      re.push_back(rho(i, j).real());
      im.push_back(rho(i, j).imag());
    }
  Json j;
  j["dim"] = rho.dim();
  j["re"] = std::move(re);
  j["im"] = std::move(im);
  return j;
}

DensityMatrix density_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("dim") || !j.contains("re") || !j.contains("im")) {
    throw DataError("density matrix JSON needs keys dim, re, im");
  }
  if (!j["dim"].is_number_integer()) throw DataError("density matrix JSON: dim must be an integer");
  const int d = j["dim"].get<int>();
  if (d < 1 || d > kMaxDim) throw DataError("density matrix JSON: dim out of range");
  const Json& re = j["re"];
  const Json& im = j["im"];
  const auto n = static_cast<std::size_t>(d * d);
  if (!re.is_array() || !im.is_array() || re.size() != n || im.size() != n) {
    throw DataError("density matrix JSON: re and im must hold dim*dim numbers");
  }
  CMatrix m(d, d);
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < d; ++k) {
      const std::size_t idx = static_cast<std::size_t>(i * d + k);
      if (!re[idx].is_number() || !im[idx].is_number()) {
        throw DataError("density matrix JSON: non-numeric entry");
      }
      m(i, k) = Complex(re[idx].get<double>(), im[idx].get<double>());
    }
  return DensityMatrix(m);
}

void write_count_records_csv(std::ostream& os, std::span<const CountRecord> records) {
  os << "alpha_deg,beta_deg,n_uu,n_ud,n_du,n_dd,n_discarded\n";
  for (const CountRecord& r : records) {
    write_counts(os, r);
    os << '\n';
  }
}

std::vector<CountRecord> read_count_records_csv(std::istream& is) {
  std::vector<CountRecord> out;
  for_each_row(is, kCountHeader, kCountHeader.size(),
               [&](const auto& f, std::size_t line) { out.push_back(parse_counts(f, 0, line)); });
  return out;
}

void write_tomography_csv(std::ostream& os, const TomographyDataset& ds) {
  os << "basis_a,basis_b,alpha_deg,beta_deg,n_uu,n_ud,n_du,n_dd,n_discarded\n";
  for (const TomographyRecord& r : ds.records) {
    os << basis_label(r.basis_a) << ',' << basis_label(r.basis_b) << ',';
    write_counts(os, r.counts);
    os << '\n';
  }
}

TomographyDataset read_tomography_csv(std::istream& is) {
  TomographyDataset ds;
  for_each_row(is, kTomoHeader, kTomoHeader.size(), [&](const auto& f, std::size_t line) {
    TomographyRecord r;
    r.basis_a = parse_basis(f[0]);
    r.basis_b = parse_basis(f[1]);
    r.counts = parse_counts(f, 2, line);
    ds.records.push_back(r);
  });
  return ds;
}

void write_series_csv(std::ostream& os, std::span<const LifetimePoint> series) {
  os << "dt_us,value,kind,sigma\n";
  for (const LifetimePoint& p : series) {
    os << format_double(p.dt_us) << ',' << format_double(p.value) << ','
       << (p.kind == SeriesKind::Negativity ? "N" : "EN") << ',';
    if (p.sigma) os << format_double(*p.sigma);
    os << '\n';
  }
}

std::vector<LifetimePoint> read_series_csv(std::istream& is) {
  std::vector<LifetimePoint> out;
  for_each_row(is, kSeriesHeader, 3, [&](const auto& f, std::size_t line) {
    LifetimePoint p;
    p.dt_us = parse_double(f[0], line, "dt_us");
    p.value = parse_double(f[1], line, "value");
    if (f[2] == "N") {
      p.kind = SeriesKind::Negativity;
    } else if (f[2] == "EN") {
      p.kind = SeriesKind::LogNegativity;
    } else {
      csv_error(line, "kind must be N or EN");
    }
    if (f.size() > 3 && !f[3].empty()) p.sigma = parse_double(f[3], line, "sigma");
    out.push_back(p);
  });
  return out;
}

Json to_json(const CorrelationEstimate& e) {
  Json j;
  j["value"] = e.value;
  j["std_err"] = e.std_err;
  j["n_total"] = e.n_total;
  return j;
}

Json to_json(const BellResult& r) {
  Json j;
  j["S"] = r.s_value;
  j["std_err"] = r.std_err;
  Json settings = Json::array();
  for (const MeasurementSetting& s : r.angles.settings()) {
    settings.push_back(Json::array({s.alpha_deg, s.beta_deg}));
  }
  j["settings"] = std::move(settings);
  j["E_values"] = r.e_values;
  j["E_errors"] = r.e_errors;
  j["angles"] = Json{{"alpha", normalize_angle(r.angles.alpha)},
                     {"alpha_prime", normalize_angle(r.angles.alpha_prime)},
                     {"beta", normalize_angle(r.angles.beta)},
                     {"beta_prime", normalize_angle(r.angles.beta_prime)}};
  return j;
}

Json to_json(const ChshBound& b) {
  Json j;
  j["s_max"] = b.s_max;
  j["achieved_s"] = b.achieved_s;
  j["directions"] = Json{{"a", vec3(b.directions.a)},
                         {"a_prime", vec3(b.directions.a_prime)},
                         {"b", vec3(b.directions.b)},
                         {"b_prime", vec3(b.directions.b_prime)}};
  j["best_linear"] = to_json(b.best_linear);
  return j;
}

Json to_json(const EntanglementReport& r) { return report_fields(r); }

Json to_json(const MeasureUncertainties& u) {
  Json j;
  j["mean"] = report_fields(u.mean);
  j["std_dev"] = report_fields(u.std_dev);
  j["resamples_used"] = u.resamples_used;
  j["resamples_failed"] = u.resamples_failed;
  j["resamples_not_converged"] = u.resamples_not_converged;
  return j;
}

Json to_json(const LifetimeFit& f) {
  Json j;
  j["n0"] = f.n0;
  j["tau_e_us"] = f.tau_e_us;
  j["cov"] = Json::array({Json::array({f.covariance(0, 0), f.covariance(0, 1)}),
                          Json::array({f.covariance(1, 0), f.covariance(1, 1)})});
  j["residual_rms"] = f.residual_rms;
  j["converged"] = f.converged;
  j["iterations"] = f.iterations;
  return j;
}

Json to_json(const RateReport& r) {
  Json j;
  j["p_pair_detect"] = r.p_pair_detect;
  j["pairs_produced_per_s"] = r.pairs_produced_per_s;
  j["pairs_detected_per_s"] = r.pairs_detected_per_s;
  return j;
}

Json to_json(const ReconstructionResult& r) {
  Json j = density_to_json(r.rho);
  j["log_likelihood"] = r.log_likelihood;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["diagnostics"] = Json{{"hermiticity_defect", r.diagnostics.hermiticity_defect},
                          {"trace_defect", r.diagnostics.trace_defect},
                          {"min_eigenvalue", r.diagnostics.min_eigenvalue},
                          {"psd", r.diagnostics.positive},
                          {"valid", r.diagnostics.valid()}};
  return j;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
}

}  // namespace ces
