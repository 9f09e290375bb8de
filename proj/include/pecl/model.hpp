#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "pecl/losses.hpp"
#include "pecl/numeric.hpp"

namespace pecl {

enum class EncoderKind { kIdentity, kRandomProjection };

/// Frozen feature extractor standing in for the pretrained backbone.
/// Parameters are fixed at construction (regenerable from the seed) and the
/// output is always l2-normalised.
class FrozenEncoder {
 public:
  static FrozenEncoder identity(std::size_t dim);
  /// tanh(Wx + b) followed by l2 normalisation; W, b drawn from the seed.
  static FrozenEncoder random_projection(std::size_t input_dim, std::size_t output_dim,
                                         std::uint64_t seed);

  RealVector encode(std::span<const double> features) const;
  Matrix encode_batch(const Matrix& features) const;

  EncoderKind kind() const { return kind_; }
  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return output_dim_; }
  std::uint64_t seed() const { return seed_; }
  const Matrix& weights() const { return weights_; }
  const RealVector& bias() const { return bias_; }

 private:
  FrozenEncoder() = default;
  EncoderKind kind_ = EncoderKind::kIdentity;
  std::size_t input_dim_ = 0;
  std::size_t output_dim_ = 0;
  std::uint64_t seed_ = 0;
  Matrix weights_;
  RealVector bias_;
};

struct ProjectorConfig {
  std::size_t embed_dim = 256;   // D
  std::size_t output_dim = 62;   // S
  std::size_t hidden_width = 256;
  std::size_t mlp_layers = 3;    // linear layers in g
  /// Trainable D->D layer before l2 normalisation. Without it the frozen
  /// encoder fixes z and the contrastive term is a constant of training.
  bool adapter = true;

  void validate() const;
};

/// Trainable head: optional linear adapter, l2 normalisation producing the
/// embedding z, then an MLP with ReLU hidden layers and a sigmoid output.
class MlpProjector {
 public:
  /// He-style uniform fan-in init from the given RNG; biases start at zero.
  MlpProjector(const ProjectorConfig& config, SeededRng& rng);
  static MlpProjector from_params(const ProjectorConfig& config, std::vector<double> params);

  struct ForwardCache {
    std::size_t batch = 0;
    Matrix encoded;              // encoder outputs fed to the head
    Matrix pre_norm;             // adapter output before normalisation
    RealVector pre_norm_lengths;
    std::vector<RealVector> embeddings;
    std::vector<std::vector<RealVector>> pre_activations;  // [sample][mlp layer]
    std::vector<std::vector<RealVector>> activations;      // [sample][mlp layer]
    std::vector<RealVector> predictions;
  };

  /// (embeddings z, predictions yhat) for a batch of encoder outputs.
  std::pair<std::vector<RealVector>, std::vector<RealVector>> forward(
      const Matrix& encoded, ForwardCache* cache = nullptr) const;

  /// Exact reverse-mode gradients for every parameter, given dL/dyhat and
  /// (optionally empty) dL/dz. Throws MissingForwardCacheError when the
  /// cache was not produced by a matching forward pass.
  std::vector<double> backward(const ForwardCache& cache,
                               const std::vector<RealVector>& grad_predictions,
                               const std::vector<RealVector>& grad_embeddings) const;

  const std::vector<double>& params() const { return params_; }
  std::vector<double>& params() { return params_; }
  std::size_t param_count() const { return params_.size(); }
  const ProjectorConfig& config() const { return config_; }

 private:
  struct LayerView {
    std::size_t in = 0;
    std::size_t out = 0;
    std::size_t w_offset = 0;
    std::size_t b_offset = 0;
  };
  MlpProjector() = default;
  void build_layout();

  ProjectorConfig config_;
  std::optional<LayerView> adapter_;
  std::vector<LayerView> mlp_;
  std::vector<double> params_;
};

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Standard Adam with bias correction.
class AdamState {
 public:
  AdamState(const AdamConfig& config, std::size_t param_count);

  void step(std::vector<double>& params, const std::vector<double>& grads);

  std::size_t steps() const { return step_; }
  const AdamConfig& config() const { return config_; }
  const std::vector<double>& first_moment() const { return m_; }
  const std::vector<double>& second_moment() const { return v_; }
  void restore(std::vector<double> m, std::vector<double> v, std::size_t step);

 private:
  AdamConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t step_ = 0;
};

/// Location-independent baseline: per-species mean encounter rate over the
/// training split.
struct MeanRateModel {
  RealVector rates;
};

MeanRateModel mean_rate_fit(const std::vector<SpeciesVector>& train_labels);
std::vector<RealVector> mean_rate_predict(const MeanRateModel& model, std::size_t n);

struct TrainConfig {
  double learning_rate = 0.001;
  std::size_t batch_size = 64;
  std::size_t epochs = 50;
  std::size_t patience = 10;  // epochs without validation improvement
  std::uint64_t seed = 0;
  ContrastiveConfig contrastive{};
  /// Model selection on BCE only instead of the combined loss.
  bool select_on_bce_only = false;
  std::size_t hidden_width = 256;
  std::size_t mlp_layers = 3;
  bool adapter = true;

  void validate() const;
};

struct TrainReport {
  std::vector<double> train_losses;
  std::vector<double> val_losses;
  std::int64_t best_epoch = -1;  // -1: initial parameters (epochs == 0)
  double best_val_loss = std::numeric_limits<double>::infinity();
  double val_mse = 0.0;
  double val_top5 = -1.0;
  double val_top10 = -1.0;
  std::uint64_t seed = 0;
};

struct FitResult {
  MlpProjector projector;
  TrainReport report;
  AdamState adam;
  SeededRng rng;  // training stream state after the run
};

/// Minibatch training with per-epoch reshuffling. The incomplete final batch
/// is kept; batches smaller than 2 (and alpha = 0 runs) skip the PECL term.
/// Validation loss is the per-sample mean of the selection loss over
/// fixed-order batches of the same batch size; the parameters of the best
/// validation epoch are retained, with early stopping after `patience`
/// epochs without improvement.
FitResult fit(const FrozenEncoder& encoder, const Matrix& train_features,
              const std::vector<SpeciesVector>& train_labels, const Matrix& val_features,
              const std::vector<SpeciesVector>& val_labels, const TrainConfig& config);

/// z = encoder(x) (l2-normalised by the encoder), yhat = projector MLP of z.
std::pair<std::vector<RealVector>, std::vector<RealVector>> forward(
    const FrozenEncoder& encoder, const MlpProjector& projector, const Matrix& features);

/// Selection loss used inside fit; exposed for tests.
double evaluation_loss(const MlpProjector& projector, const Matrix& encoded,
                       const std::vector<SpeciesVector>& labels, const ContrastiveConfig& config,
                       std::size_t batch_size, bool bce_only);

struct Checkpoint {
  FrozenEncoder encoder;
  MlpProjector projector;
  TrainConfig config;
};

/// Versioned JSON checkpoint: encoder spec (kind/dims/seed), projector
/// layout and row-major parameters, train config, and optionally the Adam
/// and RNG state of the run.
void save_checkpoint(const std::filesystem::path& path, const FrozenEncoder& encoder,
                     const MlpProjector& projector, const TrainConfig& config,
                     const AdamState* adam = nullptr, const SeededRng* rng = nullptr);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace pecl
