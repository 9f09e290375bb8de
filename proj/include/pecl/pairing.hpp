#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pecl/numeric.hpp"

namespace pecl {

/// Per-location species-presence vector: entry s is the encounter
/// probability of species s, in [0, 1].
using SpeciesVector = RealVector;

/// Where the soft similarity labels s_ij come from.
enum class SoftLabelSource {
  kLabelCosineSquared,  // sim(y_i, y_j)^2, the PECL default
  kLabelCosine,         // sim(y_i, y_j)
  kConstantOne,         // 1 off-diagonal (SupCon-over-kNN mode)
  kEmbeddingCosine,     // sim(z_i, z_j) clamped to [0, 1] (ASCL-style)
};

std::string to_string(SoftLabelSource source);
SoftLabelSource soft_label_source_from_string(const std::string& name);

/// k nearest neighbours of one anchor under label similarity. Neighbors are
/// ordered by (similarity desc, index asc); the anchor never appears.
struct NeighborSet {
  std::size_t anchor = 0;
  std::vector<std::size_t> neighbors;
  RealVector similarities;  // aligned with neighbors
};

/// M[i][j] = cosine_similarity(labels[i], labels[j]). Symmetric; diagonal is
/// 1 except for all-zero vectors (0). Throws LengthMismatchError on ragged
/// input and EmptyBatchError for fewer than 2 labels.
Matrix label_similarity_matrix(const std::vector<SpeciesVector>& labels);

/// For each row i of a square similarity matrix, the k indices j != i with
/// the largest M[i][j]; ties broken by ascending index; k is clamped to
/// batch_size - 1. Throws EmptyBatchError when batch_size < 2.
std::vector<NeighborSet> knn_neighbors(const Matrix& sim_matrix, std::size_t k);

/// Soft similarity labels s_ij in [0, 1] from a similarity matrix.
/// The diagonal is unused and set to 0. `embeddings` is required (and only
/// used) for kEmbeddingCosine, whose negative cosines clamp to 0.
Matrix soft_labels(const Matrix& sim_matrix, SoftLabelSource source,
                   const std::vector<RealVector>* embeddings = nullptr);

}  // namespace pecl
