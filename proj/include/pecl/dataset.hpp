#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pecl/numeric.hpp"
#include "pecl/pairing.hpp"

namespace pecl {

/// One row of observations.csv. Dates are ISO-8601 strings (YYYY-MM-DD);
/// distinct dates at a location are distinct visits.
struct ObservationRecord {
  std::string location_id;
  std::string visit_date;
  std::size_t species_id = 0;
  long count = 0;
};

struct LocationRecord {
  std::string location_id;
  double x = 0.0;  // planar metres
  double y = 0.0;
  std::size_t n_visits = 0;
  std::size_t n_observations = 0;  // records with count >= 1
  SpeciesVector label;
};

enum class Split { kTrain, kVal, kTest };

std::string to_string(Split split);
Split split_from_string(const std::string& name);

struct SplitAssignment {
  std::map<std::string, Split> split_by_location;
  std::map<std::string, int> cluster_by_location;  // -1 = unclustered singleton
};

struct ClusterAssignment {
  std::vector<int> cluster_ids;  // aligned with the input locations; -1 = unclustered
  std::size_t n_clusters = 0;
};

/// C bands x H x W grid, the stand-in for a 4-band satellite image.
struct FeatureRaster {
  std::size_t bands = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;  // band-major, row-major within a band

  FeatureRaster() = default;
  FeatureRaster(std::size_t c, std::size_t h, std::size_t w, double fill = 0.0)
      : bands(c), height(h), width(w), values(c * h * w, fill) {}
  double& at(std::size_t c, std::size_t i, std::size_t j) {
    return values[(c * height + i) * width + j];
  }
  double at(std::size_t c, std::size_t i, std::size_t j) const {
    return values[(c * height + i) * width + j];
  }
};

/// Per-location encounter rates: visits = distinct dates with any record;
/// rate_s = fraction of those dates with a count >= 1 record of species s.
/// Output is sorted by location_id; coordinates are left at 0 until joined.
std::vector<LocationRecord> encounter_rates(const std::vector<ObservationRecord>& records,
                                            std::size_t species_count);

/// Keeps locations with n_observations >= min_observations (strict "fewer
/// than" is dropped).
std::vector<LocationRecord> filter_locations(std::vector<LocationRecord> locations,
                                             std::size_t min_observations = 200);

/// DBSCAN over planar coordinates. With the default min_pts = 2 clusters are
/// exactly the connected components of the strict-(< eps) proximity graph and
/// lone points stay unclustered (-1).
ClusterAssignment dbscan_clusters(const std::vector<LocationRecord>& locations,
                                  double eps_metres = 4000.0, std::size_t min_pts = 2);

/// Assigns whole clusters (and singletons) to train/val/test, targeting the
/// location-count fractions: units are shuffled with the seeded RNG, then
/// greedily placed into the split with the largest remaining deficit. Splits
/// that end up empty because of cluster granularity produce a warning.
/// Throws InsufficientLocationsError for an empty location list and
/// InvalidConfigError when fractions do not sum to 1.
SplitAssignment split_locations(const std::vector<LocationRecord>& locations,
                                const ClusterAssignment& clusters,
                                std::array<double, 3> fractions, std::uint64_t seed,
                                std::vector<std::string>* warnings = nullptr);

/// Training augmentation: independent 50% horizontal flip, 50% vertical flip,
/// then a uniform-offset crop to (crop_h, crop_w). RNG draw order: hflip,
/// vflip, row offset, column offset.
FeatureRaster augment(const FeatureRaster& raster, SeededRng& rng, std::size_t crop_h = 224,
                      std::size_t crop_w = 224);

/// Validation/test crop: the exact centre (offset = (H-h)/2, (W-w)/2).
FeatureRaster center_crop(const FeatureRaster& raster, std::size_t crop_h = 224,
                          std::size_t crop_w = 224);

/// Per band: subtract the band mean and divide by the population (1/N)
/// standard deviation. Constant bands become all-zero with a warning.
FeatureRaster zscore_bands(const FeatureRaster& raster,
                           std::vector<std::string>* warnings = nullptr);

struct SynthConfig {
  std::size_t species = 62;
  std::size_t feature_dim = 32;
  std::size_t n_locations = 600;
  std::size_t n_habitats = 8;
  double noise = 0.05;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthDataset {
  Matrix features;                      // n_locations x feature_dim
  std::vector<SpeciesVector> labels;    // n_locations x species
  std::vector<LocationRecord> locations;  // ids + clustered planar coordinates
};

/// Deterministic synthetic benchmark: long-tailed per-species base rates,
/// per-habitat prototypes, per-location habitat mixtures; labels are the
/// mixture-weighted prototypes (clipped to [0,1]) and features a noisy
/// linear image of the mixture. Coordinates form spatial blobs so the
/// DBSCAN split pipeline has real clusters to find.
SynthDataset synth_generate(const SynthConfig& config);

}  // namespace pecl
