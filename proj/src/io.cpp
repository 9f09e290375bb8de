#include "pecl/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace pecl {

namespace {

constexpr double kEarthRadiusMetres = 6371000.0;
constexpr double kDegToRad = 0.017453292519943295;
constexpr char kFeatureBinMagic[8] = {'P', 'E', 'C', 'L', 'F', 'B', '0', '1'};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

bool parse_double(const std::string& text, double& out) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto result = std::from_chars(begin, end, out);
  return result.ec == std::errc() && result.ptr == end && std::isfinite(out);
}

bool parse_long(const std::string& text, long& out) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto result = std::from_chars(begin, end, out);
  return result.ec == std::errc() && result.ptr == end;
}

bool valid_iso_date(const std::string& text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return false;
  for (const std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
    if (text[i] < '0' || text[i] > '9') return false;
  }
  const int month = (text[5] - '0') * 10 + (text[6] - '0');
  const int day = (text[8] - '0') * 10 + (text[9] - '0');
  return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  return out;
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (line_no == 1) {
      table.header = std::move(fields);
    } else {
      table.rows.push_back(std::move(fields));
      table.row_lines.push_back(line_no);
    }
  }
  if (table.header.empty()) throw ParseError("empty csv: " + path.string());
  return table;
}

std::vector<ObservationRecord> parse_observations(const CsvTable& table,
                                                  std::vector<ParseIssue>& issues) {
  const std::vector<std::string> expected = {"location_id", "visit_date", "species_id", "count"};
  if (table.header != expected) {
    throw ParseError("observations.csv header must be location_id,visit_date,species_id,count");
  }
  std::vector<ObservationRecord> records;
  records.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line = table.row_lines[r];
    if (row.size() != 4) {
      issues.push_back({line, "expected 4 fields, got " + std::to_string(row.size())});
      continue;
    }
    ObservationRecord rec;
    rec.location_id = row[0];
    rec.visit_date = row[1];
    if (rec.location_id.empty()) {
      issues.push_back({line, "empty location_id"});
      continue;
    }
    if (!valid_iso_date(rec.visit_date)) {
      issues.push_back({line, "invalid ISO-8601 date: " + row[1]});
      continue;
    }
    long species = 0;
    if (!parse_long(row[2], species) || species < 0) {
      issues.push_back({line, "invalid species_id: " + row[2]});
      continue;
    }
    rec.species_id = static_cast<std::size_t>(species);
    if (!parse_long(row[3], rec.count) || rec.count < 0) {
      issues.push_back({line, "invalid count: " + row[3]});
      continue;
    }
    records.push_back(std::move(rec));
  }
  return records;
}

CoordinateTable parse_locations(const CsvTable& table, std::vector<ParseIssue>& issues) {
  const std::vector<std::string> lonlat = {"location_id", "lon", "lat"};
  const std::vector<std::string> planar = {"location_id", "x_m", "y_m"};
  bool is_lonlat = false;
  if (table.header == lonlat) {
    is_lonlat = true;
  } else if (table.header != planar) {
    throw ParseError("locations.csv header must be location_id,lon,lat or location_id,x_m,y_m");
  }

  CoordinateTable out;
  out.projected_from_lonlat = is_lonlat;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line = table.row_lines[r];
    double a = 0.0;
    double b = 0.0;
    if (row.size() != 3 || row[0].empty() || !parse_double(row[1], a) || !parse_double(row[2], b)) {
      issues.push_back({line, "invalid location row"});
      continue;
    }
    out.ids.push_back(row[0]);
    out.xy.emplace_back(a, b);
  }

  if (is_lonlat && !out.xy.empty()) {
    double lon0 = 0.0;
    double lat0 = 0.0;
    for (const auto& [lon, lat] : out.xy) {
      lon0 += lon;
      lat0 += lat;
    }
    lon0 /= static_cast<double>(out.xy.size());
    lat0 /= static_cast<double>(out.xy.size());
    const double cos_lat0 = std::cos(lat0 * kDegToRad);
    for (auto& [x, y] : out.xy) {
      const double lon = x;
      const double lat = y;
      x = kEarthRadiusMetres * (lon - lon0) * kDegToRad * cos_lat0;
      y = kEarthRadiusMetres * (lat - lat0) * kDegToRad;
    }
  }
  return out;
}

void write_labels_csv(const std::filesystem::path& path, const std::vector<std::string>& ids,
                      const std::vector<RealVector>& labels,
                      const std::vector<std::string>& species_names) {
  if (ids.size() != labels.size()) throw ShapeMismatchError("write_labels_csv: id/label mismatch");
  auto out = open_output(path);
  out << "location_id";
  for (const auto& name : species_names) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (labels[i].size() != species_names.size()) {
      throw ShapeMismatchError("write_labels_csv: label width mismatch");
    }
    out << ids[i];
    for (const double v : labels[i]) out << ',' << format_double(v);
    out << '\n';
  }
}

LabelTable read_labels_csv(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  if (table.header.size() < 2 || table.header[0] != "location_id") {
    throw ParseError("labels.csv must start with location_id plus species columns");
  }
  LabelTable out;
  out.species_names.assign(table.header.begin() + 1, table.header.end());
  const std::size_t s = out.species_names.size();
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (row.size() != s + 1) {
      throw ParseError("labels.csv row " + std::to_string(table.row_lines[r]) +
                       ": wrong field count");
    }
    RealVector label(s);
    for (std::size_t j = 0; j < s; ++j) {
      if (!parse_double(row[j + 1], label[j])) {
        throw ParseError("labels.csv row " + std::to_string(table.row_lines[r]) +
                         ": bad value '" + row[j + 1] + "'");
      }
    }
    out.ids.push_back(row[0]);
    out.labels.push_back(std::move(label));
  }
  return out;
}

void write_features_csv(const std::filesystem::path& path, const std::vector<std::string>& ids,
                        const Matrix& features) {
  if (ids.size() != features.rows()) throw ShapeMismatchError("write_features_csv: shape");
  auto out = open_output(path);
  out << "location_id";
  for (std::size_t j = 0; j < features.cols(); ++j) out << ",f" << j;
  out << '\n';
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out << ids[i];
    for (const double v : features.row(i)) out << ',' << format_double(v);
    out << '\n';
  }
}

void write_features_bin(const std::filesystem::path& path, const std::vector<std::string>& ids,
                        const Matrix& features) {
  if (ids.size() != features.rows()) throw ShapeMismatchError("write_features_bin: shape");
  auto out = open_output(path);
  out.write(kFeatureBinMagic, sizeof(kFeatureBinMagic));
  const std::uint64_t n = ids.size();
  const std::uint64_t d = features.cols();
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  out.write(reinterpret_cast<const char*>(&d), sizeof(d));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const std::uint32_t len = static_cast<std::uint32_t>(ids[i].size());
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(ids[i].data(), len);
    const auto row = features.row(i);
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
}

FeatureTable read_features(const std::filesystem::path& path) {
  FeatureTable out;
  if (path.extension() == ".bin") {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kFeatureBinMagic, sizeof(magic)) != 0) {
      throw ParseError("features.bin: bad magic");
    }
    std::uint64_t n = 0;
    std::uint64_t d = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof(n));
    in.read(reinterpret_cast<char*>(&d), sizeof(d));
    if (!in) throw ParseError("features.bin: truncated header");
    out.features = Matrix(n, d);
    for (std::uint64_t i = 0; i < n; ++i) {
      std::uint32_t len = 0;
      in.read(reinterpret_cast<char*>(&len), sizeof(len));
      std::string id(len, '\0');
      in.read(id.data(), len);
      auto row = out.features.row(i);
      in.read(reinterpret_cast<char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(double)));
      if (!in) throw ParseError("features.bin: truncated row " + std::to_string(i));
      out.ids.push_back(std::move(id));
    }
    return out;
  }

  const CsvTable table = read_csv(path);
  if (table.header.empty() || table.header[0] != "location_id") {
    throw ParseError("features.csv must start with location_id");
  }
  const std::size_t d = table.header.size() - 1;
  out.features = Matrix(table.rows.size(), d);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (row.size() != d + 1) {
      throw ParseError("features.csv row " + std::to_string(table.row_lines[r]) +
                       ": wrong field count");
    }
    out.ids.push_back(row[0]);
    auto dest = out.features.row(r);
    for (std::size_t j = 0; j < d; ++j) {
      if (!parse_double(row[j + 1], dest[j])) {
        throw ParseError("features.csv row " + std::to_string(table.row_lines[r]) +
                         ": bad value '" + row[j + 1] + "'");
      }
    }
  }
  return out;
}

void write_locations_csv(const std::filesystem::path& path,
                         const std::vector<LocationRecord>& locations) {
  auto out = open_output(path);
  out << "location_id,x_m,y_m\n";
  for (const auto& loc : locations) {
    out << loc.location_id << ',' << format_double(loc.x) << ',' << format_double(loc.y) << '\n';
  }
}

void write_splits_json(const std::filesystem::path& path, const SplitAssignment& assignment,
                       const SplitFileMeta& meta) {
  nlohmann::ordered_json doc;
  doc["format"] = "pecl-lab-splits";
  doc["version"] = 1;
  doc["eps_metres"] = meta.eps_metres;
  doc["fractions"] = meta.fractions;
  doc["seed"] = meta.seed;
  nlohmann::ordered_json assignments = nlohmann::ordered_json::object();
  for (const auto& [id, split] : assignment.split_by_location) {
    nlohmann::ordered_json entry;
    entry["split"] = to_string(split);
    entry["cluster_id"] = assignment.cluster_by_location.at(id);
    assignments[id] = std::move(entry);
  }
  doc["assignments"] = std::move(assignments);
  auto out = open_output(path);
  out << doc.dump(2) << '\n';
}

SplitAssignment read_splits_json(const std::filesystem::path& path, SplitFileMeta* meta) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("splits.json: " + std::string(e.what()));
  }
  if (doc.value("format", "") != "pecl-lab-splits") {
    throw ParseError("splits.json: unknown format");
  }
  if (meta != nullptr) {
    meta->eps_metres = doc.value("eps_metres", 4000.0);
    meta->seed = doc.value("seed", std::uint64_t{0});
    if (doc.contains("fractions")) {
      for (std::size_t i = 0; i < 3; ++i) meta->fractions[i] = doc["fractions"][i];
    }
  }
  SplitAssignment out;
  for (const auto& [id, entry] : doc.at("assignments").items()) {
    out.split_by_location[id] = split_from_string(entry.at("split"));
    out.cluster_by_location[id] = entry.at("cluster_id");
  }
  return out;
}

}  // namespace pecl
