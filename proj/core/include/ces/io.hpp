#pragma once

// File formats: DensityMatrix JSON, CountRecord / TomographyDataset /
// lifetime-series CSV, and JSON renderings of analysis results.

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ces/bell.hpp"
#include "ces/detection.hpp"
#include "ces/fit.hpp"
#include "ces/measures.hpp"
#include "ces/protocol.hpp"
#include "ces/tomography.hpp"

namespace ces {

using Json = nlohmann::ordered_json;

/// {"dim": d, "re": [d*d], "im": [d*d]}, row-major.
Json density_to_json(const DensityMatrix& rho);
DensityMatrix density_from_json(const Json& j);

/// Columns: alpha_deg,beta_deg,n_uu,n_ud,n_du,n_dd,n_discarded
void write_count_records_csv(std::ostream& os, std::span<const CountRecord> records);
std::vector<CountRecord> read_count_records_csv(std::istream& is);

/// Columns: basis_a,basis_b,alpha_deg,beta_deg,n_uu,n_ud,n_du,n_dd,n_discarded
void write_tomography_csv(std::ostream& os, const TomographyDataset& ds);
TomographyDataset read_tomography_csv(std::istream& is);

/// Columns: dt_us,value,kind,sigma (kind is N or EN; sigma may be empty).
void write_series_csv(std::ostream& os, std::span<const LifetimePoint> series);
std::vector<LifetimePoint> read_series_csv(std::istream& is);

Json to_json(const CorrelationEstimate& e);
Json to_json(const BellResult& r);
Json to_json(const ChshBound& b);
Json to_json(const EntanglementReport& r);
Json to_json(const MeasureUncertainties& u);
Json to_json(const LifetimeFit& f);
Json to_json(const RateReport& r);
Json to_json(const ReconstructionResult& r);

/// Shortest round-trip decimal form used in CSV output.
std::string format_double(double x);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace ces
