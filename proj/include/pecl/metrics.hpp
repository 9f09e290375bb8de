#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pecl/numeric.hpp"

namespace pecl {

enum class FmseAxis { kPerLocation, kPerSpecies };

/// Ratios of baseline MSE to model MSE along one axis. Units where the
/// model error is exactly zero carry +inf and a flag.
struct FmseResult {
  RealVector ratios;
  std::vector<bool> infinite;
  bool any_infinite = false;
};

struct SeedAggregate {
  RealVector values;
  double mean = 0.0;
  double sem = 0.0;  // sample sd / sqrt(n); 0 for a single seed
};

/// Mean squared error over all N x S entries.
double mse(const std::vector<RealVector>& labels, const std::vector<RealVector>& preds);

/// Per location, |top-k(pred) intersect top-k(label)| / k, averaged over
/// locations, in percent. Score ties break by ascending species index.
/// Throws KTooLargeError when k > S.
double topk_accuracy(const std::vector<RealVector>& labels, const std::vector<RealVector>& preds,
                     std::size_t k);

/// Top-k index set of one score vector (descending score, ties by ascending
/// index). Exposed for report assembly.
std::vector<std::size_t> topk_indices(const RealVector& scores, std::size_t k);

FmseResult fmse(const std::vector<RealVector>& baseline_preds,
                const std::vector<RealVector>& model_preds,
                const std::vector<RealVector>& labels, FmseAxis axis);

/// Sample Pearson correlation. Throws ZeroVarianceError when either input
/// has no variance, LengthMismatchError on unequal or short input.
double pearson(const RealVector& x, const RealVector& y);

SeedAggregate aggregate_seeds(const RealVector& values);

/// Everything the evaluation report carries for one model on one split.
struct MetricReport {
  double mse = 0.0;
  double top5 = 0.0;
  double top10 = 0.0;
  FmseResult per_location_fmse;
  FmseResult per_species_fmse;
  // Pearson r between per-location f_MSE and the number of species present
  // per location; the descriptor records degenerate cases.
  double pearson_r_species_count = 0.0;
  std::string pearson_descriptor;
};

/// Assembles the full report for model predictions against a baseline.
/// top5/top10 require S >= 10; smaller S records -1 for the missing entry.
MetricReport build_metric_report(const std::vector<RealVector>& labels,
                                 const std::vector<RealVector>& model_preds,
                                 const std::vector<RealVector>& baseline_preds);

}  // namespace pecl
