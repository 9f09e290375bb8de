#include "pecl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace pecl {

namespace {

void check_aligned(const std::vector<RealVector>& labels, const std::vector<RealVector>& preds) {
  if (labels.size() != preds.size() || labels.empty()) {
    throw ShapeMismatchError("metrics: label/prediction count mismatch or empty");
  }
  const std::size_t s = labels.front().size();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].size() != s || preds[i].size() != s) {
      throw ShapeMismatchError("metrics: ragged batch");
    }
  }
}

}  // namespace

double mse(const std::vector<RealVector>& labels, const std::vector<RealVector>& preds) {
  check_aligned(labels, preds);
  const std::size_t n = labels.size();
  const std::size_t s = labels.front().size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < s; ++j) {
      const double d = labels[i][j] - preds[i][j];
      total += d * d;
    }
  }
  return total / (static_cast<double>(n) * static_cast<double>(s));
}

std::vector<std::size_t> topk_indices(const RealVector& scores, std::size_t k) {
  if (k > scores.size()) throw KTooLargeError("topk: k exceeds species count");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  order.resize(k);
  return order;
}

double topk_accuracy(const std::vector<RealVector>& labels, const std::vector<RealVector>& preds,
                     std::size_t k) {
  check_aligned(labels, preds);
  if (k == 0) throw InvalidConfigError("topk_accuracy: k must be >= 1");
  if (k > labels.front().size()) throw KTooLargeError("topk_accuracy: k exceeds species count");
  double total = 0.0;
  std::vector<char> in_true(labels.front().size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    std::fill(in_true.begin(), in_true.end(), 0);
    for (const std::size_t idx : topk_indices(labels[i], k)) in_true[idx] = 1;
    std::size_t overlap = 0;
    for (const std::size_t idx : topk_indices(preds[i], k)) overlap += in_true[idx];
    total += static_cast<double>(overlap) / static_cast<double>(k);
  }
  return 100.0 * total / static_cast<double>(labels.size());
}

FmseResult fmse(const std::vector<RealVector>& baseline_preds,
                const std::vector<RealVector>& model_preds,
                const std::vector<RealVector>& labels, FmseAxis axis) {
  check_aligned(labels, model_preds);
  check_aligned(labels, baseline_preds);
  const std::size_t n = labels.size();
  const std::size_t s = labels.front().size();
  const std::size_t units = (axis == FmseAxis::kPerLocation) ? n : s;

  RealVector base_err(units, 0.0);
  RealVector model_err(units, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < s; ++j) {
      const std::size_t u = (axis == FmseAxis::kPerLocation) ? i : j;
      const double db = labels[i][j] - baseline_preds[i][j];
      const double dm = labels[i][j] - model_preds[i][j];
      base_err[u] += db * db;
      model_err[u] += dm * dm;
    }
  }

  FmseResult out;
  out.ratios.resize(units);
  out.infinite.assign(units, false);
  for (std::size_t u = 0; u < units; ++u) {
    if (model_err[u] == 0.0) {
      out.ratios[u] = std::numeric_limits<double>::infinity();
      out.infinite[u] = true;
      out.any_infinite = true;
    } else {
      out.ratios[u] = base_err[u] / model_err[u];
    }
  }
  return out;
}

double pearson(const RealVector& x, const RealVector& y) {
  if (x.size() != y.size()) throw LengthMismatchError("pearson: length mismatch");
  if (x.size() < 2) throw LengthMismatchError("pearson: need at least 2 points");
  const double n = static_cast<double>(x.size());
  const double mean_x = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double mean_y = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mean_x;
    const double dy = y[i] - mean_y;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw ZeroVarianceError("pearson: zero variance input");
  return sxy / std::sqrt(sxx * syy);
}

SeedAggregate aggregate_seeds(const RealVector& values) {
  if (values.empty()) throw InvalidConfigError("aggregate_seeds: need at least one value");
  SeedAggregate out;
  out.values = values;
  const double n = static_cast<double>(values.size());
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (const double v : values) ss += (v - out.mean) * (v - out.mean);
    const double sample_sd = std::sqrt(ss / (n - 1.0));
    out.sem = sample_sd / std::sqrt(n);
  }
  return out;
}

MetricReport build_metric_report(const std::vector<RealVector>& labels,
                                 const std::vector<RealVector>& model_preds,
                                 const std::vector<RealVector>& baseline_preds) {
  MetricReport report;
  report.mse = mse(labels, model_preds);
  const std::size_t s = labels.front().size();
  report.top5 = (s >= 5) ? topk_accuracy(labels, model_preds, 5) : -1.0;
  report.top10 = (s >= 10) ? topk_accuracy(labels, model_preds, 10) : -1.0;
  report.per_location_fmse = fmse(baseline_preds, model_preds, labels, FmseAxis::kPerLocation);
  report.per_species_fmse = fmse(baseline_preds, model_preds, labels, FmseAxis::kPerSpecies);

  // Fig. 3c analogue: f_MSE vs number of species ever observed per location.
  RealVector fmse_vals;
  RealVector species_counts;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (report.per_location_fmse.infinite[i]) continue;
    double count = 0.0;
    for (const double y : labels[i]) count += (y > 0.0) ? 1.0 : 0.0;
    fmse_vals.push_back(report.per_location_fmse.ratios[i]);
    species_counts.push_back(count);
  }
  try {
    report.pearson_r_species_count = pearson(fmse_vals, species_counts);
    report.pearson_descriptor = "pearson r over " + std::to_string(fmse_vals.size()) + " locations";
  } catch (const Error& e) {
    report.pearson_r_species_count = std::numeric_limits<double>::quiet_NaN();
    report.pearson_descriptor = std::string("undefined: ") + e.what();
  }
  return report;
}

}  // namespace pecl
