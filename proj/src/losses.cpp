#include "pecl/losses.hpp"

#include <algorithm>
#include <cmath>

namespace pecl {

namespace {

void check_embedding_batch(const std::vector<RealVector>& embeddings) {
  if (embeddings.size() < 2) throw EmptyBatchError("contrastive loss: batch size < 2");
  for (const auto& z : embeddings) {
    if (z.size() != embeddings.front().size()) {
      throw ShapeMismatchError("contrastive loss: ragged embeddings");
    }
  }
}

}  // namespace

void ContrastiveConfig::validate() const {
  if (tau <= 0.0) throw NonPositiveTemperatureError("ContrastiveConfig: tau must be positive");
  if (k == 0) throw InvalidConfigError("ContrastiveConfig: k must be >= 1");
  if (alpha < 0.0) throw InvalidConfigError("ContrastiveConfig: alpha must be >= 0");
}

LossOutput bce_loss(const std::vector<SpeciesVector>& labels,
                    const std::vector<RealVector>& preds) {
  if (labels.size() != preds.size() || labels.empty()) {
    throw ShapeMismatchError("bce_loss: label/prediction count mismatch or empty batch");
  }
  const std::size_t n = labels.size();
  const std::size_t s = labels.front().size();
  if (s == 0) throw ShapeMismatchError("bce_loss: zero species");

  LossOutput out;
  out.grad_predictions.resize(n);
  const double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(s));
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i].size() != s || preds[i].size() != s) {
      throw ShapeMismatchError("bce_loss: ragged batch");
    }
    out.grad_predictions[i].resize(s);
    for (std::size_t j = 0; j < s; ++j) {
      const double y = labels[i][j];
      const double p = std::clamp(preds[i][j], kPredictionClamp, 1.0 - kPredictionClamp);
      total += y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
      out.grad_predictions[i][j] = (p - y) * scale / (p * (1.0 - p));
    }
  }
  out.value = -total * scale;
  return out;
}

LossOutput weighted_contrastive_loss(const std::vector<RealVector>& embeddings,
                                     const Matrix& positive_weights, double tau) {
  check_embedding_batch(embeddings);
  if (tau <= 0.0) throw NonPositiveTemperatureError("weighted_contrastive_loss: tau <= 0");
  const std::size_t n = embeddings.size();
  const std::size_t dim = embeddings.front().size();
  if (positive_weights.rows() != n || positive_weights.cols() != n) {
    throw ShapeMismatchError("weighted_contrastive_loss: weight matrix shape");
  }

  LossOutput out;
  out.grad_embeddings.assign(n, RealVector(dim, 0.0));

  // Candidate index map shared per anchor: candidates[c] = j skipping i.
  std::vector<std::size_t> candidates(n - 1);
  RealVector scores(n - 1);
  double total = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  const double inv_tau = 1.0 / tau;

  for (std::size_t i = 0; i < n; ++i) {
    std::size_t c = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      candidates[c] = j;
      scores[c] = dot(embeddings[i], embeddings[j]) * inv_tau;
      ++c;
    }
    const RealVector log_w = stable_log_softmax(scores, 1.0);

    double row_weight = 0.0;
    double row_value = 0.0;
    for (std::size_t m = 0; m < candidates.size(); ++m) {
      const double w = positive_weights(i, candidates[m]);
      row_weight += w;
      row_value -= w * log_w[m];
    }
    total += row_value;

    for (std::size_t m = 0; m < candidates.size(); ++m) {
      const std::size_t j = candidates[m];
      // d(anchor term)/d(score_ij), before the 1/N reduction
      const double g = (-positive_weights(i, j) + row_weight * std::exp(log_w[m])) * inv_tau;
      if (g == 0.0) continue;
      auto& grad_i = out.grad_embeddings[i];
      auto& grad_j = out.grad_embeddings[j];
      const auto& z_i = embeddings[i];
      const auto& z_j = embeddings[j];
      for (std::size_t d = 0; d < dim; ++d) {
        grad_i[d] += g * z_j[d] * inv_n;
        grad_j[d] += g * z_i[d] * inv_n;
      }
    }
  }
  out.value = total * inv_n;
  return out;
}

LossOutput infonce_loss(const std::vector<RealVector>& embeddings,
                        const std::vector<std::size_t>& positives, double tau) {
  check_embedding_batch(embeddings);
  const std::size_t n = embeddings.size();
  if (positives.size() != n) {
    throw InvalidPositiveIndexError("infonce_loss: one positive per anchor required");
  }
  Matrix weights(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (positives[i] >= n || positives[i] == i) {
      throw InvalidPositiveIndexError("infonce_loss: positive index out of range or self");
    }
    weights(i, positives[i]) = 1.0;
  }
  return weighted_contrastive_loss(embeddings, weights, tau);
}

LossOutput supcon_loss(const std::vector<RealVector>& embeddings,
                       const std::vector<std::vector<std::size_t>>& positive_sets, double tau) {
  check_embedding_batch(embeddings);
  const std::size_t n = embeddings.size();
  if (positive_sets.size() != n) {
    throw ShapeMismatchError("supcon_loss: one positive set per anchor required");
  }
  Matrix weights(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& set = positive_sets[i];
    if (set.empty()) throw EmptyPositiveSetError("supcon_loss: empty positive set");
    const double w = 1.0 / static_cast<double>(set.size());
    for (const std::size_t j : set) {
      if (j >= n || j == i) {
        throw InvalidPositiveIndexError("supcon_loss: positive index out of range or self");
      }
      weights(i, j) = w;
    }
  }
  return weighted_contrastive_loss(embeddings, weights, tau);
}

LossOutput pecl_loss(const std::vector<RealVector>& embeddings,
                     const std::vector<SpeciesVector>& labels, const ContrastiveConfig& config) {
  check_embedding_batch(embeddings);
  config.validate();
  if (labels.size() != embeddings.size()) {
    throw ShapeMismatchError("pecl_loss: labels/embeddings count mismatch");
  }
  const std::size_t n = embeddings.size();

  const Matrix sim = label_similarity_matrix(labels);
  const std::vector<NeighborSet> neighbor_sets = knn_neighbors(sim, config.k);
  const Matrix s = soft_labels(sim, config.soft_label_source, &embeddings);

  Matrix weights(n, n);
  for (const NeighborSet& set : neighbor_sets) {
    const double inv_size = 1.0 / static_cast<double>(set.neighbors.size());
    for (const std::size_t j : set.neighbors) {
      weights(set.anchor, j) = s(set.anchor, j) * inv_size;
    }
  }
  return weighted_contrastive_loss(embeddings, weights, config.tau);
}

LossOutput combined_loss(const std::vector<SpeciesVector>& labels,
                         const std::vector<RealVector>& preds,
                         const std::vector<RealVector>& embeddings,
                         const ContrastiveConfig& config) {
  if (labels.size() != preds.size() || labels.size() != embeddings.size()) {
    throw ShapeMismatchError("combined_loss: inconsistent batch");
  }
  config.validate();
  LossOutput out = bce_loss(labels, preds);
  if (config.alpha > 0.0 && embeddings.size() >= 2) {
    LossOutput pecl = pecl_loss(embeddings, labels, config);
    out.value += config.alpha * pecl.value;
    out.grad_embeddings = std::move(pecl.grad_embeddings);
    for (auto& grad : out.grad_embeddings) {
      for (auto& g : grad) g *= config.alpha;
    }
  } else if (!embeddings.empty()) {
    out.grad_embeddings.assign(embeddings.size(), RealVector(embeddings.front().size(), 0.0));
  }
  return out;
}

}  // namespace pecl
