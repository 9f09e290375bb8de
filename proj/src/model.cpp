#include "pecl/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "pecl/metrics.hpp"

namespace pecl {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void apply_linear(std::span<const double> w, std::span<const double> b, std::size_t in,
                  std::size_t out, std::span<const double> x, RealVector& y) {
  y.resize(out);
  for (std::size_t r = 0; r < out; ++r) {
    double acc = b[r];
    const double* row = w.data() + r * in;
    for (std::size_t c = 0; c < in; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

}  // namespace

FrozenEncoder FrozenEncoder::identity(std::size_t dim) {
  if (dim == 0) throw InvalidConfigError("encoder: dim must be >= 1");
  FrozenEncoder enc;
  enc.kind_ = EncoderKind::kIdentity;
  enc.input_dim_ = dim;
  enc.output_dim_ = dim;
  return enc;
}

FrozenEncoder FrozenEncoder::random_projection(std::size_t input_dim, std::size_t output_dim,
                                               std::uint64_t seed) {
  if (input_dim == 0 || output_dim == 0) {
    throw InvalidConfigError("encoder: dims must be >= 1");
  }
  FrozenEncoder enc;
  enc.kind_ = EncoderKind::kRandomProjection;
  enc.input_dim_ = input_dim;
  enc.output_dim_ = output_dim;
  enc.seed_ = seed;
  SeededRng rng(seed);
  enc.weights_ = Matrix(output_dim, input_dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(input_dim));
  for (auto& w : enc.weights_.values()) w = rng.normal(0.0, 1.0) * scale;
  enc.bias_.resize(output_dim);
  for (auto& b : enc.bias_) b = rng.normal(0.0, 0.1);
  return enc;
}

RealVector FrozenEncoder::encode(std::span<const double> features) const {
  if (features.size() != input_dim_) throw ShapeMismatchError("encoder: feature dim mismatch");
  RealVector out;
  if (kind_ == EncoderKind::kIdentity) {
    out.assign(features.begin(), features.end());
  } else {
    out.resize(output_dim_);
    for (std::size_t r = 0; r < output_dim_; ++r) {
      double acc = bias_[r];
      for (std::size_t c = 0; c < input_dim_; ++c) acc += weights_(r, c) * features[c];
      out[r] = std::tanh(acc);
    }
  }
  return l2_normalize(out);
}

Matrix FrozenEncoder::encode_batch(const Matrix& features) const {
  Matrix out(features.rows(), output_dim_);
  for (std::size_t i = 0; i < features.rows(); ++i) {
    const RealVector z = encode(features.row(i));
    std::copy(z.begin(), z.end(), out.row(i).begin());
  }
  return out;
}

void ProjectorConfig::validate() const {
  if (embed_dim == 0 || output_dim == 0 || hidden_width == 0) {
    throw InvalidConfigError("projector: dims must be >= 1");
  }
  if (mlp_layers == 0) throw InvalidConfigError("projector: need at least one MLP layer");
}

void MlpProjector::build_layout() {
  config_.validate();
  std::size_t offset = 0;
  auto add_layer = [&offset](std::size_t in, std::size_t out) {
    LayerView view{in, out, offset, offset + in * out};
    offset += in * out + out;
    return view;
  };
  adapter_.reset();
  mlp_.clear();
  if (config_.adapter) adapter_ = add_layer(config_.embed_dim, config_.embed_dim);
  std::size_t width = config_.embed_dim;
  for (std::size_t l = 0; l + 1 < config_.mlp_layers; ++l) {
    mlp_.push_back(add_layer(width, config_.hidden_width));
    width = config_.hidden_width;
  }
  mlp_.push_back(add_layer(width, config_.output_dim));
  params_.assign(offset, 0.0);
}

MlpProjector::MlpProjector(const ProjectorConfig& config, SeededRng& rng) {
  config_ = config;
  build_layout();
  auto init_layer = [&](const LayerView& view) {
    const double limit = std::sqrt(6.0 / static_cast<double>(view.in));
    for (std::size_t i = 0; i < view.in * view.out; ++i) {
      params_[view.w_offset + i] = rng.uniform(-limit, limit);
    }
    // biases stay zero
  };
  if (adapter_) init_layer(*adapter_);
  for (const auto& layer : mlp_) init_layer(layer);
}

MlpProjector MlpProjector::from_params(const ProjectorConfig& config, std::vector<double> params) {
  MlpProjector p;
  p.config_ = config;
  p.build_layout();
  if (params.size() != p.params_.size()) {
    throw ShapeMismatchError("projector: parameter count mismatch");
  }
  p.params_ = std::move(params);
  return p;
}

std::pair<std::vector<RealVector>, std::vector<RealVector>> MlpProjector::forward(
    const Matrix& encoded, ForwardCache* cache) const {
  if (encoded.cols() != config_.embed_dim) {
    throw ShapeMismatchError("projector: encoded dim mismatch");
  }
  const std::size_t n = encoded.rows();
  std::vector<RealVector> embeddings(n);
  std::vector<RealVector> predictions(n);
  if (cache != nullptr) {
    cache->batch = n;
    cache->encoded = encoded;
    cache->pre_norm = Matrix(n, config_.embed_dim);
    cache->pre_norm_lengths.assign(n, 0.0);
    cache->pre_activations.assign(n, {});
    cache->activations.assign(n, {});
  }

  for (std::size_t i = 0; i < n; ++i) {
    RealVector z;
    if (adapter_) {
      RealVector u;
      apply_linear(std::span(params_).subspan(adapter_->w_offset, adapter_->in * adapter_->out),
                   std::span(params_).subspan(adapter_->b_offset, adapter_->out), adapter_->in,
                   adapter_->out, encoded.row(i), u);
      const double norm = l2_norm(u);
      if (norm <= kNormEpsilon) throw ZeroVectorError("projector: adapter output is zero");
      z.resize(u.size());
      for (std::size_t d = 0; d < u.size(); ++d) z[d] = u[d] / norm;
      if (cache != nullptr) {
        std::copy(u.begin(), u.end(), cache->pre_norm.row(i).begin());
        cache->pre_norm_lengths[i] = norm;
      }
    } else {
      z.assign(encoded.row(i).begin(), encoded.row(i).end());
    }

    RealVector h = z;
    for (std::size_t l = 0; l < mlp_.size(); ++l) {
      const LayerView& view = mlp_[l];
      RealVector a;
      apply_linear(std::span(params_).subspan(view.w_offset, view.in * view.out),
                   std::span(params_).subspan(view.b_offset, view.out), view.in, view.out, h, a);
      if (cache != nullptr) cache->pre_activations[i].push_back(a);
      if (l + 1 < mlp_.size()) {
        for (auto& v : a) v = std::max(0.0, v);
      } else {
        for (auto& v : a) v = std::clamp(sigmoid(v), kPredictionClamp, 1.0 - kPredictionClamp);
      }
      if (cache != nullptr) cache->activations[i].push_back(a);
      h = std::move(a);
    }
    predictions[i] = h;
    embeddings[i] = std::move(z);
  }

  if (cache != nullptr) {
    cache->embeddings = embeddings;
    cache->predictions = predictions;
  }
  return {std::move(embeddings), std::move(predictions)};
}

std::vector<double> MlpProjector::backward(const ForwardCache& cache,
                                           const std::vector<RealVector>& grad_predictions,
                                           const std::vector<RealVector>& grad_embeddings) const {
  if (cache.batch == 0 || cache.predictions.size() != cache.batch ||
      cache.encoded.cols() != config_.embed_dim) {
    throw MissingForwardCacheError("projector: backward without matching forward cache");
  }
  if (grad_predictions.size() != cache.batch) {
    throw ShapeMismatchError("projector: grad_predictions batch mismatch");
  }
  if (!grad_embeddings.empty() && grad_embeddings.size() != cache.batch) {
    throw ShapeMismatchError("projector: grad_embeddings batch mismatch");
  }

  std::vector<double> grads(params_.size(), 0.0);
  RealVector delta;
  RealVector delta_prev;
  for (std::size_t i = 0; i < cache.batch; ++i) {
    // Output layer: dL/da = dL/dyhat * yhat (1 - yhat), at the clamped yhat.
    const RealVector& yhat = cache.predictions[i];
    delta.resize(yhat.size());
    for (std::size_t j = 0; j < yhat.size(); ++j) {
      delta[j] = grad_predictions[i][j] * yhat[j] * (1.0 - yhat[j]);
    }

    for (std::size_t l = mlp_.size(); l-- > 0;) {
      const LayerView& view = mlp_[l];
      const RealVector& input = (l == 0) ? cache.embeddings[i] : cache.activations[i][l - 1];
      double* w_grad = grads.data() + view.w_offset;
      double* b_grad = grads.data() + view.b_offset;
      for (std::size_t r = 0; r < view.out; ++r) {
        const double d = delta[r];
        b_grad[r] += d;
        double* row = w_grad + r * view.in;
        for (std::size_t c = 0; c < view.in; ++c) row[c] += d * input[c];
      }
      delta_prev.assign(view.in, 0.0);
      const double* w = params_.data() + view.w_offset;
      for (std::size_t r = 0; r < view.out; ++r) {
        const double d = delta[r];
        const double* row = w + r * view.in;
        for (std::size_t c = 0; c < view.in; ++c) delta_prev[c] += d * row[c];
      }
      if (l > 0) {
        const RealVector& pre = cache.pre_activations[i][l - 1];
        for (std::size_t c = 0; c < view.in; ++c) {
          if (pre[c] <= 0.0) delta_prev[c] = 0.0;
        }
      }
      delta = delta_prev;
    }

    // delta now holds dL/dz from the prediction path; add the contrastive path.
    if (!grad_embeddings.empty()) {
      for (std::size_t d = 0; d < delta.size(); ++d) delta[d] += grad_embeddings[i][d];
    }

    if (adapter_) {
      // Through z = u / ||u||: du = (dz - (dz . z) z) / ||u||.
      const RealVector& z = cache.embeddings[i];
      const double norm = cache.pre_norm_lengths[i];
      double proj = 0.0;
      for (std::size_t d = 0; d < delta.size(); ++d) proj += delta[d] * z[d];
      RealVector du(delta.size());
      for (std::size_t d = 0; d < delta.size(); ++d) du[d] = (delta[d] - proj * z[d]) / norm;

      const auto input = cache.encoded.row(i);
      double* w_grad = grads.data() + adapter_->w_offset;
      double* b_grad = grads.data() + adapter_->b_offset;
      for (std::size_t r = 0; r < adapter_->out; ++r) {
        b_grad[r] += du[r];
        double* row = w_grad + r * adapter_->in;
        for (std::size_t c = 0; c < adapter_->in; ++c) row[c] += du[r] * input[c];
      }
    }
  }
  return grads;
}

AdamState::AdamState(const AdamConfig& config, std::size_t param_count)
    : config_(config), m_(param_count, 0.0), v_(param_count, 0.0) {
  if (config.learning_rate < 0.0) throw InvalidConfigError("adam: negative learning rate");
}

void AdamState::step(std::vector<double>& params, const std::vector<double>& grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw ShapeMismatchError("adam: parameter/gradient size mismatch");
  }
  ++step_;
  const double bias1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double bias2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * grads[i];
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * grads[i] * grads[i];
    const double m_hat = m_[i] / bias1;
    const double v_hat = v_[i] / bias2;
    params[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
  }
}

void AdamState::restore(std::vector<double> m, std::vector<double> v, std::size_t step) {
  if (m.size() != m_.size() || v.size() != v_.size()) {
    throw ShapeMismatchError("adam: restored state size mismatch");
  }
  m_ = std::move(m);
  v_ = std::move(v);
  step_ = step;
}

MeanRateModel mean_rate_fit(const std::vector<SpeciesVector>& train_labels) {
  if (train_labels.empty()) throw EmptySplitError("mean_rate_fit: empty training split");
  const std::size_t s = train_labels.front().size();
  MeanRateModel model;
  model.rates.assign(s, 0.0);
  for (const auto& label : train_labels) {
    if (label.size() != s) throw ShapeMismatchError("mean_rate_fit: ragged labels");
    for (std::size_t j = 0; j < s; ++j) model.rates[j] += label[j];
  }
  for (auto& r : model.rates) r /= static_cast<double>(train_labels.size());
  return model;
}

std::vector<RealVector> mean_rate_predict(const MeanRateModel& model, std::size_t n) {
  return std::vector<RealVector>(n, model.rates);
}

void TrainConfig::validate() const {
  if (learning_rate < 0.0) throw InvalidConfigError("train: negative learning rate");
  if (batch_size == 0) throw InvalidConfigError("train: batch size must be >= 1");
  contrastive.validate();
  if (hidden_width == 0 || mlp_layers == 0) throw InvalidConfigError("train: bad projector dims");
}

double evaluation_loss(const MlpProjector& projector, const Matrix& encoded,
                       const std::vector<SpeciesVector>& labels, const ContrastiveConfig& config,
                       std::size_t batch_size, bool bce_only) {
  const std::size_t n = encoded.rows();
  if (n == 0 || labels.size() != n) throw ShapeMismatchError("evaluation_loss: shape");
  double total = 0.0;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t count = std::min(batch_size, n - start);
    Matrix batch(count, encoded.cols());
    std::vector<SpeciesVector> batch_labels(count);
    for (std::size_t i = 0; i < count; ++i) {
      std::copy(encoded.row(start + i).begin(), encoded.row(start + i).end(),
                batch.row(i).begin());
      batch_labels[i] = labels[start + i];
    }
    auto [z, preds] = projector.forward(batch);
    double value = 0.0;
    if (bce_only || config.alpha == 0.0 || count < 2) {
      value = bce_loss(batch_labels, preds).value;
    } else {
      value = combined_loss(batch_labels, preds, z, config).value;
    }
    total += value * static_cast<double>(count);
  }
  return total / static_cast<double>(n);
}

FitResult fit(const FrozenEncoder& encoder, const Matrix& train_features,
              const std::vector<SpeciesVector>& train_labels, const Matrix& val_features,
              const std::vector<SpeciesVector>& val_labels, const TrainConfig& config) {
  config.validate();
  if (train_features.rows() == 0 || train_labels.empty()) {
    throw EmptySplitError("fit: empty training split");
  }
  if (val_features.rows() == 0 || val_labels.empty()) {
    throw EmptySplitError("fit: empty validation split");
  }
  if (train_features.rows() != train_labels.size() || val_features.rows() != val_labels.size()) {
    throw ShapeMismatchError("fit: features/labels count mismatch");
  }
  const std::size_t species = train_labels.front().size();
  for (const auto& y : val_labels) {
    if (y.size() != species) throw ShapeMismatchError("fit: species dim mismatch across splits");
  }

  const Matrix encoded_train = encoder.encode_batch(train_features);
  const Matrix encoded_val = encoder.encode_batch(val_features);

  ProjectorConfig pc;
  pc.embed_dim = encoder.output_dim();
  pc.output_dim = species;
  pc.hidden_width = config.hidden_width;
  pc.mlp_layers = config.mlp_layers;
  pc.adapter = config.adapter;

  SeededRng rng(config.seed);
  MlpProjector projector(pc, rng);
  AdamState adam(AdamConfig{.learning_rate = config.learning_rate}, projector.param_count());

  TrainReport report;
  report.seed = config.seed;
  std::vector<double> best_params = projector.params();
  std::size_t epochs_without_improvement = 0;

  std::vector<std::size_t> order(encoded_train.rows());
  std::iota(order.begin(), order.end(), 0);

  const std::size_t n_train = encoded_train.rows();
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n_train; start += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, n_train - start);
      Matrix batch(count, encoded_train.cols());
      std::vector<SpeciesVector> batch_labels(count);
      for (std::size_t i = 0; i < count; ++i) {
        const std::size_t src = order[start + i];
        std::copy(encoded_train.row(src).begin(), encoded_train.row(src).end(),
                  batch.row(i).begin());
        batch_labels[i] = train_labels[src];
      }

      MlpProjector::ForwardCache cache;
      auto [z, preds] = projector.forward(batch, &cache);
      LossOutput loss;
      if (config.contrastive.alpha == 0.0 || count < 2) {
        loss = bce_loss(batch_labels, preds);
        loss.grad_embeddings.clear();
      } else {
        loss = combined_loss(batch_labels, preds, z, config.contrastive);
      }
      const std::vector<double> grads =
          projector.backward(cache, loss.grad_predictions, loss.grad_embeddings);
      adam.step(projector.params(), grads);
      epoch_loss += loss.value * static_cast<double>(count);
    }
    report.train_losses.push_back(epoch_loss / static_cast<double>(n_train));

    const double val_loss =
        evaluation_loss(projector, encoded_val, val_labels, config.contrastive, config.batch_size,
                        config.select_on_bce_only);
    report.val_losses.push_back(val_loss);

    if (val_loss < report.best_val_loss) {
      report.best_val_loss = val_loss;
      report.best_epoch = static_cast<std::int64_t>(epoch);
      best_params = projector.params();
      epochs_without_improvement = 0;
    } else {
      ++epochs_without_improvement;
      if (epochs_without_improvement >= config.patience) break;
    }
  }

  MlpProjector best = MlpProjector::from_params(pc, std::move(best_params));
  auto [val_z, val_preds] = best.forward(encoded_val);
  report.val_mse = mse(val_labels, val_preds);
  report.val_top5 = (species >= 5) ? topk_accuracy(val_labels, val_preds, 5) : -1.0;
  report.val_top10 = (species >= 10) ? topk_accuracy(val_labels, val_preds, 10) : -1.0;

  return FitResult{std::move(best), std::move(report), std::move(adam), rng};
}

std::pair<std::vector<RealVector>, std::vector<RealVector>> forward(
    const FrozenEncoder& encoder, const MlpProjector& projector, const Matrix& features) {
  return projector.forward(encoder.encode_batch(features));
}

void save_checkpoint(const std::filesystem::path& path, const FrozenEncoder& encoder,
                     const MlpProjector& projector, const TrainConfig& config,
                     const AdamState* adam, const SeededRng* rng) {
  nlohmann::ordered_json doc;
  doc["format"] = "pecl-lab-checkpoint";
  doc["version"] = 1;

  nlohmann::ordered_json enc;
  enc["kind"] = (encoder.kind() == EncoderKind::kIdentity) ? "identity" : "random_projection";
  enc["input_dim"] = encoder.input_dim();
  enc["output_dim"] = encoder.output_dim();
  enc["seed"] = encoder.seed();
  doc["encoder"] = std::move(enc);

  const ProjectorConfig& pc = projector.config();
  nlohmann::ordered_json proj;
  proj["embed_dim"] = pc.embed_dim;
  proj["output_dim"] = pc.output_dim;
  proj["hidden_width"] = pc.hidden_width;
  proj["mlp_layers"] = pc.mlp_layers;
  proj["adapter"] = pc.adapter;
  proj["params"] = projector.params();
  doc["projector"] = std::move(proj);

  nlohmann::ordered_json train;
  train["learning_rate"] = config.learning_rate;
  train["batch_size"] = config.batch_size;
  train["epochs"] = config.epochs;
  train["patience"] = config.patience;
  train["seed"] = config.seed;
  train["alpha"] = config.contrastive.alpha;
  train["k"] = config.contrastive.k;
  train["tau"] = config.contrastive.tau;
  train["soft_label_source"] = to_string(config.contrastive.soft_label_source);
  train["select_on_bce_only"] = config.select_on_bce_only;
  doc["train_config"] = std::move(train);

  if (adam != nullptr) {
    nlohmann::ordered_json state;
    state["m"] = adam->first_moment();
    state["v"] = adam->second_moment();
    state["step"] = adam->steps();
    state["learning_rate"] = adam->config().learning_rate;
    doc["adam"] = std::move(state);
  }
  if (rng != nullptr) {
    doc["rng"] = {{"seed", rng->seed()}, {"state", rng->state()}};
  }

  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << doc.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("checkpoint: " + std::string(e.what()));
  }
  if (doc.value("format", "") != "pecl-lab-checkpoint" || doc.value("version", 0) != 1) {
    throw ParseError("checkpoint: unknown format/version");
  }

  const auto& enc = doc.at("encoder");
  FrozenEncoder encoder =
      (enc.at("kind") == "identity")
          ? FrozenEncoder::identity(enc.at("output_dim"))
          : FrozenEncoder::random_projection(enc.at("input_dim"), enc.at("output_dim"),
                                             enc.at("seed"));

  const auto& proj = doc.at("projector");
  ProjectorConfig pc;
  pc.embed_dim = proj.at("embed_dim");
  pc.output_dim = proj.at("output_dim");
  pc.hidden_width = proj.at("hidden_width");
  pc.mlp_layers = proj.at("mlp_layers");
  pc.adapter = proj.at("adapter");
  MlpProjector projector =
      MlpProjector::from_params(pc, proj.at("params").get<std::vector<double>>());

  TrainConfig config;
  const auto& train = doc.at("train_config");
  config.learning_rate = train.at("learning_rate");
  config.batch_size = train.at("batch_size");
  config.epochs = train.at("epochs");
  config.patience = train.at("patience");
  config.seed = train.at("seed");
  config.contrastive.alpha = train.at("alpha");
  config.contrastive.k = train.at("k");
  config.contrastive.tau = train.at("tau");
  config.contrastive.soft_label_source =
      soft_label_source_from_string(train.at("soft_label_source"));
  config.select_on_bce_only = train.at("select_on_bce_only");
  config.hidden_width = pc.hidden_width;
  config.mlp_layers = pc.mlp_layers;
  config.adapter = pc.adapter;

  return Checkpoint{std::move(encoder), std::move(projector), std::move(config)};
}

}  // namespace pecl
