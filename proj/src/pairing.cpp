#include "pecl/pairing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pecl {

std::string to_string(SoftLabelSource source) {
  switch (source) {
    case SoftLabelSource::kLabelCosineSquared:
      return "label_cosine_squared";
    case SoftLabelSource::kLabelCosine:
      return "label_cosine";
    case SoftLabelSource::kConstantOne:
      return "constant_one";
    case SoftLabelSource::kEmbeddingCosine:
      return "embedding_cosine";
  }
  throw InvalidConfigError("unknown soft label source");
}

SoftLabelSource soft_label_source_from_string(const std::string& name) {
  if (name == "label_cosine_squared") return SoftLabelSource::kLabelCosineSquared;
  if (name == "label_cosine") return SoftLabelSource::kLabelCosine;
  if (name == "constant_one") return SoftLabelSource::kConstantOne;
  if (name == "embedding_cosine") return SoftLabelSource::kEmbeddingCosine;
  throw InvalidConfigError("unknown soft label source: " + name);
}

Matrix label_similarity_matrix(const std::vector<SpeciesVector>& labels) {
  if (labels.size() < 2) throw EmptyBatchError("label_similarity_matrix: need >= 2 labels");
  const std::size_t n = labels.size();
  for (const auto& y : labels) {
    if (y.size() != labels.front().size()) {
      throw LengthMismatchError("label_similarity_matrix: ragged labels");
    }
  }
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    m(i, i) = cosine_similarity(labels[i], labels[i]);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double sim = cosine_similarity(labels[i], labels[j]);
      m(i, j) = sim;
      m(j, i) = sim;
    }
  }
  return m;
}

std::vector<NeighborSet> knn_neighbors(const Matrix& sim_matrix, std::size_t k) {
  if (sim_matrix.rows() != sim_matrix.cols()) {
    throw ShapeMismatchError("knn_neighbors: matrix must be square");
  }
  const std::size_t n = sim_matrix.rows();
  if (n < 2) throw EmptyBatchError("knn_neighbors: batch size < 2");
  if (k == 0) throw InvalidConfigError("knn_neighbors: k must be >= 1");
  const std::size_t effective_k = std::min(k, n - 1);

  std::vector<NeighborSet> out(n);
  std::vector<std::size_t> order(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    order.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) order.push_back(j);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (sim_matrix(i, a) != sim_matrix(i, b)) return sim_matrix(i, a) > sim_matrix(i, b);
      return a < b;
    });
    NeighborSet& set = out[i];
    set.anchor = i;
    set.neighbors.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(effective_k));
    set.similarities.resize(effective_k);
    for (std::size_t m = 0; m < effective_k; ++m) set.similarities[m] = sim_matrix(i, set.neighbors[m]);
  }
  return out;
}

Matrix soft_labels(const Matrix& sim_matrix, SoftLabelSource source,
                   const std::vector<RealVector>* embeddings) {
  if (sim_matrix.rows() != sim_matrix.cols()) {
    throw ShapeMismatchError("soft_labels: matrix must be square");
  }
  const std::size_t n = sim_matrix.rows();
  if (source == SoftLabelSource::kEmbeddingCosine) {
    if (embeddings == nullptr) {
      throw MissingEmbeddingsError("soft_labels: embedding_cosine needs embeddings");
    }
    if (embeddings->size() != n) {
      throw ShapeMismatchError("soft_labels: embeddings count != batch size");
    }
  }

  Matrix s(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double value = 0.0;
      switch (source) {
        case SoftLabelSource::kLabelCosineSquared: {
          const double sim = sim_matrix(i, j);
          value = sim * sim;
          break;
        }
        case SoftLabelSource::kLabelCosine:
          value = sim_matrix(i, j);
          break;
        case SoftLabelSource::kConstantOne:
          value = 1.0;
          break;
        case SoftLabelSource::kEmbeddingCosine:
          value = cosine_similarity((*embeddings)[i], (*embeddings)[j]);
          break;
      }
      value = std::clamp(value, 0.0, 1.0);
      s(i, j) = value;
      s(j, i) = value;
    }
  }
  return s;
}

}  // namespace pecl
