#pragma once

#include <cstddef>
#include <vector>

#include "pecl/numeric.hpp"
#include "pecl/pairing.hpp"

namespace pecl {

/// Predictions are clamped into [kPredictionClamp, 1 - kPredictionClamp]
/// before logs; gradients are taken with respect to the clamped value.
inline constexpr double kPredictionClamp = 1e-7;

/// Loss value plus whichever gradients the loss defines. Gradients are
/// per-sample vectors aligned with the inputs; empty when not applicable.
struct LossOutput {
  double value = 0.0;
  std::vector<RealVector> grad_embeddings;
  std::vector<RealVector> grad_predictions;
};

/// Contrastive regularisation settings: k nearest neighbours, temperature
/// tau, loss weight alpha, and the soft-label source.
struct ContrastiveConfig {
  std::size_t k = 5;
  double tau = 0.5;
  double alpha = 0.1;
  SoftLabelSource soft_label_source = SoftLabelSource::kLabelCosineSquared;

  void validate() const;
};

/// Mean binary cross-entropy over N samples and S species, with the
/// analytic gradient (yhat - y) / (N S yhat (1 - yhat)) per entry.
LossOutput bce_loss(const std::vector<SpeciesVector>& labels,
                    const std::vector<RealVector>& preds);

/// InfoNCE with exactly one positive p_i per anchor. The softmax for anchor
/// i runs over all z_i . z_k / tau, k != i (the positive included).
LossOutput infonce_loss(const std::vector<RealVector>& embeddings,
                        const std::vector<std::size_t>& positives, double tau);

/// Supervised contrastive loss: mean over anchors of the mean negative
/// log-weight across each anchor's positive set.
LossOutput supcon_loss(const std::vector<RealVector>& embeddings,
                       const std::vector<std::vector<std::size_t>>& positive_sets, double tau);

/// Paired Embeddings Contrastive Loss: positives are the kNN of each anchor
/// under label cosine similarity, weighted by soft labels s_ij. The neighbour
/// sets and soft labels are functions of the fixed labels (or treated as
/// stop-gradient for the embedding_cosine source) and receive no gradient.
LossOutput pecl_loss(const std::vector<RealVector>& embeddings,
                     const std::vector<SpeciesVector>& labels, const ContrastiveConfig& config);

/// Shared weighted-softmax core behind infonce/supcon/pecl: value
///   -(1/N) sum_i sum_{j != i} w[i][j] log softmax_i(j)
/// with gradients with respect to every embedding. positive_weights must be
/// NxN with zero diagonal; rows of all-zero weights contribute 0.
LossOutput weighted_contrastive_loss(const std::vector<RealVector>& embeddings,
                                     const Matrix& positive_weights, double tau);

/// L = L_BCE + alpha * L_PECL. grad_predictions comes from the BCE term,
/// grad_embeddings is alpha times the PECL gradient. A batch of fewer than
/// 2 samples has no PECL term (contributes exactly 0).
LossOutput combined_loss(const std::vector<SpeciesVector>& labels,
                         const std::vector<RealVector>& preds,
                         const std::vector<RealVector>& embeddings,
                         const ContrastiveConfig& config);

}  // namespace pecl
