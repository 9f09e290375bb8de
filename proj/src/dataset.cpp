#include "pecl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>

namespace pecl {

std::string to_string(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kVal:
      return "val";
    case Split::kTest:
      return "test";
  }
  throw InvalidConfigError("unknown split");
}

Split split_from_string(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  throw InvalidConfigError("unknown split: " + name);
}

std::vector<LocationRecord> encounter_rates(const std::vector<ObservationRecord>& records,
                                            std::size_t species_count) {
  if (species_count == 0) throw InvalidConfigError("encounter_rates: species_count must be >= 1");

  struct Accumulator {
    std::set<std::string> visit_dates;
    std::map<std::size_t, std::set<std::string>> presence_dates;
    std::size_t n_observations = 0;
  };
  std::map<std::string, Accumulator> by_location;

  for (const auto& rec : records) {
    if (rec.species_id >= species_count) {
      throw InvalidConfigError("encounter_rates: species id " + std::to_string(rec.species_id) +
                               " out of range for S=" + std::to_string(species_count));
    }
    if (rec.count < 0) throw InvalidConfigError("encounter_rates: negative count");
    Accumulator& acc = by_location[rec.location_id];
    acc.visit_dates.insert(rec.visit_date);
    if (rec.count >= 1) {
      acc.presence_dates[rec.species_id].insert(rec.visit_date);
      ++acc.n_observations;
    }
  }

  std::vector<LocationRecord> out;
  out.reserve(by_location.size());
  for (const auto& [id, acc] : by_location) {
    LocationRecord loc;
    loc.location_id = id;
    loc.n_visits = acc.visit_dates.size();
    loc.n_observations = acc.n_observations;
    loc.label.assign(species_count, 0.0);
    const double visits = static_cast<double>(loc.n_visits);
    for (const auto& [species, dates] : acc.presence_dates) {
      loc.label[species] = static_cast<double>(dates.size()) / visits;
    }
    out.push_back(std::move(loc));
  }
  return out;
}

std::vector<LocationRecord> filter_locations(std::vector<LocationRecord> locations,
                                             std::size_t min_observations) {
  std::erase_if(locations, [min_observations](const LocationRecord& loc) {
    return loc.n_observations < min_observations;
  });
  return locations;
}

ClusterAssignment dbscan_clusters(const std::vector<LocationRecord>& locations, double eps_metres,
                                  std::size_t min_pts) {
  const std::size_t n = locations.size();
  ClusterAssignment out;
  out.cluster_ids.assign(n, -1);
  if (n == 0) return out;
  if (eps_metres <= 0.0) throw InvalidConfigError("dbscan: eps must be positive");

  const double eps_sq = eps_metres * eps_metres;
  auto within_eps = [&](std::size_t a, std::size_t b) {
    const double dx = locations[a].x - locations[b].x;
    const double dy = locations[a].y - locations[b].y;
    return dx * dx + dy * dy < eps_sq;  // strict: exactly eps apart is separate
  };

  std::vector<std::vector<std::size_t>> neighbors(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (within_eps(i, j)) {
        neighbors[i].push_back(j);
        neighbors[j].push_back(i);
      }
    }
  }
  std::vector<bool> core(n);
  for (std::size_t i = 0; i < n; ++i) core[i] = neighbors[i].size() + 1 >= min_pts;

  int next_cluster = 0;
  std::vector<std::size_t> queue;
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i] || out.cluster_ids[i] != -1) continue;
    const int cluster = next_cluster++;
    out.cluster_ids[i] = cluster;
    queue.assign(1, i);
    while (!queue.empty()) {
      const std::size_t p = queue.back();
      queue.pop_back();
      for (const std::size_t q : neighbors[p]) {
        if (out.cluster_ids[q] != -1) continue;
        out.cluster_ids[q] = cluster;
        if (core[q]) queue.push_back(q);  // border points join but do not expand
      }
    }
  }
  out.n_clusters = static_cast<std::size_t>(next_cluster);
  return out;
}

SplitAssignment split_locations(const std::vector<LocationRecord>& locations,
                                const ClusterAssignment& clusters,
                                std::array<double, 3> fractions, std::uint64_t seed,
                                std::vector<std::string>* warnings) {
  const std::size_t n = locations.size();
  if (n == 0) throw InsufficientLocationsError("split: no locations");
  if (clusters.cluster_ids.size() != n) {
    throw ShapeMismatchError("split: cluster assignment does not match locations");
  }
  double frac_sum = 0.0;
  for (const double f : fractions) {
    if (f < 0.0) throw InvalidConfigError("split: negative fraction");
    frac_sum += f;
  }
  if (std::abs(frac_sum - 1.0) > 1e-9) throw InvalidConfigError("split: fractions must sum to 1");

  // Units: one per cluster, plus one per unclustered singleton.
  std::vector<std::vector<std::size_t>> units(clusters.n_clusters);
  for (std::size_t i = 0; i < n; ++i) {
    const int c = clusters.cluster_ids[i];
    if (c >= 0) {
      units[static_cast<std::size_t>(c)].push_back(i);
    }
  }
  std::erase_if(units, [](const auto& u) { return u.empty(); });
  for (std::size_t i = 0; i < n; ++i) {
    if (clusters.cluster_ids[i] < 0) units.push_back({i});
  }

  SeededRng rng(seed);
  rng.shuffle(units);

  const std::array<double, 3> targets = {fractions[0] * static_cast<double>(n),
                                         fractions[1] * static_cast<double>(n),
                                         fractions[2] * static_cast<double>(n)};
  std::array<double, 3> counts = {0.0, 0.0, 0.0};
  std::array<Split, 3> split_order = {Split::kTrain, Split::kVal, Split::kTest};

  SplitAssignment out;
  for (const auto& unit : units) {
    std::size_t best = 0;
    double best_deficit = targets[0] - counts[0];
    for (std::size_t s = 1; s < 3; ++s) {
      const double deficit = targets[s] - counts[s];
      if (deficit > best_deficit) {
        best = s;
        best_deficit = deficit;
      }
    }
    counts[best] += static_cast<double>(unit.size());
    for (const std::size_t i : unit) {
      out.split_by_location[locations[i].location_id] = split_order[best];
      out.cluster_by_location[locations[i].location_id] = clusters.cluster_ids[i];
    }
  }

  if (warnings != nullptr) {
    for (std::size_t s = 0; s < 3; ++s) {
      if (counts[s] == 0.0) {
        warnings->push_back("split '" + to_string(split_order[s]) +
                            "' is empty (cluster granularity)");
      }
    }
  }
  return out;
}

namespace {

FeatureRaster crop(const FeatureRaster& raster, std::size_t row_off, std::size_t col_off,
                   std::size_t crop_h, std::size_t crop_w) {
  FeatureRaster out(raster.bands, crop_h, crop_w);
  for (std::size_t c = 0; c < raster.bands; ++c) {
    for (std::size_t i = 0; i < crop_h; ++i) {
      for (std::size_t j = 0; j < crop_w; ++j) {
        out.at(c, i, j) = raster.at(c, row_off + i, col_off + j);
      }
    }
  }
  return out;
}

void check_crop(const FeatureRaster& raster, std::size_t crop_h, std::size_t crop_w) {
  if (raster.bands == 0 || raster.height == 0 || raster.width == 0) {
    throw InvalidConfigError("raster is empty");
  }
  if (crop_h > raster.height || crop_w > raster.width) {
    throw CropTooLargeError("crop dims exceed raster dims");
  }
}

}  // namespace

FeatureRaster augment(const FeatureRaster& raster, SeededRng& rng, std::size_t crop_h,
                      std::size_t crop_w) {
  check_crop(raster, crop_h, crop_w);
  const bool hflip = rng.uniform01() < 0.5;
  const bool vflip = rng.uniform01() < 0.5;
  const std::size_t row_off = static_cast<std::size_t>(rng.uniform_int(raster.height - crop_h + 1));
  const std::size_t col_off = static_cast<std::size_t>(rng.uniform_int(raster.width - crop_w + 1));

  FeatureRaster flipped(raster.bands, raster.height, raster.width);
  for (std::size_t c = 0; c < raster.bands; ++c) {
    for (std::size_t i = 0; i < raster.height; ++i) {
      const std::size_t src_i = vflip ? raster.height - 1 - i : i;
      for (std::size_t j = 0; j < raster.width; ++j) {
        const std::size_t src_j = hflip ? raster.width - 1 - j : j;
        flipped.at(c, i, j) = raster.at(c, src_i, src_j);
      }
    }
  }
  return crop(flipped, row_off, col_off, crop_h, crop_w);
}

FeatureRaster center_crop(const FeatureRaster& raster, std::size_t crop_h, std::size_t crop_w) {
  check_crop(raster, crop_h, crop_w);
  return crop(raster, (raster.height - crop_h) / 2, (raster.width - crop_w) / 2, crop_h, crop_w);
}

FeatureRaster zscore_bands(const FeatureRaster& raster, std::vector<std::string>* warnings) {
  if (raster.bands == 0 || raster.height == 0 || raster.width == 0) {
    throw InvalidConfigError("zscore_bands: empty raster");
  }
  FeatureRaster out = raster;
  const std::size_t band_size = raster.height * raster.width;
  for (std::size_t c = 0; c < raster.bands; ++c) {
    const double* band = raster.values.data() + c * band_size;
    const bool constant = std::all_of(band, band + band_size,
                                      [&](double v) { return v == band[0]; });
    double* target = out.values.data() + c * band_size;
    if (constant) {
      std::fill(target, target + band_size, 0.0);
      if (warnings != nullptr) {
        warnings->push_back("band " + std::to_string(c) + " is constant; emitted zeros");
      }
      continue;
    }
    const double mean = std::accumulate(band, band + band_size, 0.0) /
                        static_cast<double>(band_size);
    double var = 0.0;
    for (std::size_t i = 0; i < band_size; ++i) var += (band[i] - mean) * (band[i] - mean);
    var /= static_cast<double>(band_size);  // population convention
    const double sd = std::sqrt(var);
    for (std::size_t i = 0; i < band_size; ++i) target[i] = (band[i] - mean) / sd;
  }
  return out;
}

void SynthConfig::validate() const {
  if (species == 0 || feature_dim == 0 || n_locations == 0 || n_habitats == 0) {
    throw InvalidConfigError("synth: species, feature_dim, n_locations, n_habitats must be >= 1");
  }
  if (noise < 0.0) throw InvalidConfigError("synth: noise must be >= 0");
}

SynthDataset synth_generate(const SynthConfig& config) {
  config.validate();
  SeededRng rng(config.seed);
  const std::size_t s_count = config.species;
  const std::size_t h_count = config.n_habitats;
  const std::size_t d = config.feature_dim;
  const std::size_t n = config.n_locations;

  // Long-tailed per-species base rates (log-uniform over ~[0.01, 0.63]).
  RealVector base_rates(s_count);
  for (auto& b : base_rates) b = std::pow(10.0, rng.uniform(-2.0, -0.2));

  // Habitat prototypes: per-habitat log-normal modulation of the base rates.
  Matrix prototypes(h_count, s_count);
  for (std::size_t h = 0; h < h_count; ++h) {
    for (std::size_t s = 0; s < s_count; ++s) {
      prototypes(h, s) = std::min(1.0, base_rates[s] * std::exp(rng.normal(0.0, 1.2)));
    }
  }

  // Feature map: features are a linear image of the habitat mixture.
  Matrix feature_map(d, h_count);
  const double map_scale = 1.0 / std::sqrt(static_cast<double>(h_count));
  for (auto& v : feature_map.values()) v = rng.normal(0.0, 1.0) * map_scale;

  const std::size_t n_centers = std::max<std::size_t>(1, n / 8);
  std::vector<std::pair<double, double>> centers(n_centers);
  for (auto& [cx, cy] : centers) {
    cx = rng.uniform(0.0, 100000.0);
    cy = rng.uniform(0.0, 100000.0);
  }

  SynthDataset out;
  out.features = Matrix(n, d);
  out.labels.reserve(n);
  out.locations.reserve(n);
  RealVector mixture(h_count);
  char id_buf[32];

  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t dominant = static_cast<std::size_t>(rng.uniform_int(h_count));
    double mix_sum = 0.0;
    for (std::size_t h = 0; h < h_count; ++h) {
      mixture[h] = (h == dominant ? 1.0 : 0.0) + 0.3 * rng.uniform01();
      mix_sum += mixture[h];
    }
    for (auto& w : mixture) w /= mix_sum;

    SpeciesVector label(s_count, 0.0);
    for (std::size_t s = 0; s < s_count; ++s) {
      double v = 0.0;
      for (std::size_t h = 0; h < h_count; ++h) v += mixture[h] * prototypes(h, s);
      label[s] = std::clamp(v, 0.0, 1.0);
    }

    auto row = out.features.row(i);
    for (std::size_t f = 0; f < d; ++f) {
      double v = 0.0;
      for (std::size_t h = 0; h < h_count; ++h) v += feature_map(f, h) * mixture[h];
      row[f] = v + config.noise * rng.normal(0.0, 1.0);
    }

    const std::size_t center = static_cast<std::size_t>(rng.uniform_int(n_centers));
    LocationRecord loc;
    std::snprintf(id_buf, sizeof(id_buf), "synth_%05zu", i);
    loc.location_id = id_buf;
    loc.x = centers[center].first + rng.normal(0.0, 1500.0);
    loc.y = centers[center].second + rng.normal(0.0, 1500.0);
    loc.n_visits = 1;
    loc.n_observations = 0;
    loc.label = label;
    out.labels.push_back(std::move(label));
    out.locations.push_back(std::move(loc));
  }
  return out;
}

}  // namespace pecl
