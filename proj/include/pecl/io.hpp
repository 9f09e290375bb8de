#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pecl/dataset.hpp"
#include "pecl/numeric.hpp"

namespace pecl {

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);

struct ParseIssue {
  std::size_t line = 0;  // 1-based, header = line 1
  std::string message;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> row_lines;  // source line per row
};

CsvTable read_csv(const std::filesystem::path& path);

/// observations.csv: location_id,visit_date(ISO-8601),species_id,count.
/// Malformed rows are reported with their line numbers and skipped.
std::vector<ObservationRecord> parse_observations(const CsvTable& table,
                                                  std::vector<ParseIssue>& issues);

struct CoordinateTable {
  std::vector<std::string> ids;
  std::vector<std::pair<double, double>> xy;  // planar metres
  bool projected_from_lonlat = false;
};

/// locations.csv: location_id,lon,lat or location_id,x_m,y_m (detected from
/// the header). lon/lat is converted with a local equirectangular projection
/// around the mean coordinate, which is accurate at the <= 4 km radii the
/// clustering needs.
CoordinateTable parse_locations(const CsvTable& table, std::vector<ParseIssue>& issues);

struct LabelTable {
  std::vector<std::string> ids;
  std::vector<std::string> species_names;
  std::vector<RealVector> labels;
};

void write_labels_csv(const std::filesystem::path& path, const std::vector<std::string>& ids,
                      const std::vector<RealVector>& labels,
                      const std::vector<std::string>& species_names);
LabelTable read_labels_csv(const std::filesystem::path& path);

struct FeatureTable {
  std::vector<std::string> ids;
  Matrix features;
};

/// features.csv: location_id + D feature columns. features.bin: the same
/// content in a little-endian binary layout (magic PECLFB01, u64 count, u64
/// dim, then per row a u32 id length, the id bytes, and D doubles); the
/// reader switches on the file extension.
void write_features_csv(const std::filesystem::path& path, const std::vector<std::string>& ids,
                        const Matrix& features);
void write_features_bin(const std::filesystem::path& path, const std::vector<std::string>& ids,
                        const Matrix& features);
FeatureTable read_features(const std::filesystem::path& path);

void write_locations_csv(const std::filesystem::path& path,
                         const std::vector<LocationRecord>& locations);

struct SplitFileMeta {
  double eps_metres = 4000.0;
  std::array<double, 3> fractions = {0.70, 0.15, 0.15};
  std::uint64_t seed = 0;
};

void write_splits_json(const std::filesystem::path& path, const SplitAssignment& assignment,
                       const SplitFileMeta& meta);
SplitAssignment read_splits_json(const std::filesystem::path& path, SplitFileMeta* meta = nullptr);

}  // namespace pecl
