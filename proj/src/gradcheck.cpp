#include "pecl/gradcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "pecl/losses.hpp"
#include "pecl/model.hpp"
#include "pecl/numeric.hpp"
#include "pecl/pairing.hpp"

namespace pecl {

namespace {

struct CoordinateCheck {
  std::size_t failures = 0;
  double max_relative_error = 0.0;

  void compare(const GradCheckOptions& opts, double analytic, double numeric) {
    const double err = std::abs(analytic - numeric);
    const double scale = std::max({std::abs(analytic), std::abs(numeric), opts.absolute_floor});
    max_relative_error = std::max(max_relative_error, err / scale);
    const double tol =
        std::max(opts.absolute_floor, opts.relative_tolerance * std::max(std::abs(analytic),
                                                                         std::abs(numeric)));
    if (err > tol) ++failures;
  }
};

std::vector<RealVector> random_labels(SeededRng& rng, std::size_t n, std::size_t s) {
  std::vector<RealVector> labels(n, RealVector(s));
  for (auto& row : labels) {
    for (auto& v : row) v = rng.uniform01();
  }
  return labels;
}

std::vector<RealVector> random_embeddings(SeededRng& rng, std::size_t n, std::size_t d) {
  std::vector<RealVector> z(n, RealVector(d));
  for (auto& row : z) {
    for (auto& v : row) v = rng.normal();
    row = l2_normalize(row);
  }
  return z;
}

RealVector flatten(const std::vector<RealVector>& rows) {
  RealVector flat;
  for (const auto& row : rows) flat.insert(flat.end(), row.begin(), row.end());
  return flat;
}

std::vector<RealVector> unflatten(const RealVector& flat, std::size_t n, std::size_t d) {
  std::vector<RealVector> rows(n, RealVector(d));
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(i * d),
              flat.begin() + static_cast<std::ptrdiff_t>((i + 1) * d), rows[i].begin());
  }
  return rows;
}

GradCheckSuiteResult check_bce(const GradCheckOptions& opts, SeededRng& rng) {
  GradCheckSuiteResult result{.name = "bce_loss"};
  CoordinateCheck check;
  for (std::size_t t = 0; t < opts.trials; ++t) {
    const std::size_t n = 2 + rng.uniform_int(15);
    const std::size_t s = 3 + rng.uniform_int(60);
    const auto labels = random_labels(rng, n, s);
    std::vector<RealVector> preds(n, RealVector(s));
    for (auto& row : preds) {
      for (auto& v : row) v = rng.uniform(0.02, 0.98);  // away from the clamp boundary
    }

    LossOutput out = bce_loss(labels, preds);
    if (opts.inject_bce_sign_flip) {
      for (auto& row : out.grad_predictions) {
        for (auto& g : row) g = -g;
      }
    }
    const RealVector fd = finite_diff_grad(
        [&](const RealVector& flat) { return bce_loss(labels, unflatten(flat, n, s)).value; },
        flatten(preds), opts.step);

    const std::size_t before = check.failures;
    const RealVector analytic = flatten(out.grad_predictions);
    for (std::size_t i = 0; i < analytic.size(); ++i) check.compare(opts, analytic[i], fd[i]);
    result.failed_trials += (check.failures != before) ? 1 : 0;
    ++result.trials;
  }
  result.max_relative_error = check.max_relative_error;
  return result;
}

GradCheckSuiteResult check_embedding_loss(
    const GradCheckOptions& opts, SeededRng& rng, const std::string& name,
    const std::function<LossOutput(SeededRng&, const std::vector<RealVector>&,
                                   std::function<double(const std::vector<RealVector>&)>&)>&
        make_case) {
  GradCheckSuiteResult result{.name = name};
  CoordinateCheck check;
  for (std::size_t t = 0; t < opts.trials; ++t) {
    const std::size_t n = 2 + rng.uniform_int(15);
    const std::size_t d = 4 + rng.uniform_int(29);
    const auto embeddings = random_embeddings(rng, n, d);

    std::function<double(const std::vector<RealVector>&)> value_fn;
    const LossOutput out = make_case(rng, embeddings, value_fn);

    const RealVector fd = finite_diff_grad(
        [&](const RealVector& flat) { return value_fn(unflatten(flat, n, d)); },
        flatten(embeddings), opts.step);

    const std::size_t before = check.failures;
    const RealVector analytic = flatten(out.grad_embeddings);
    for (std::size_t i = 0; i < analytic.size(); ++i) check.compare(opts, analytic[i], fd[i]);
    result.failed_trials += (check.failures != before) ? 1 : 0;
    ++result.trials;
  }
  result.max_relative_error = check.max_relative_error;
  return result;
}

GradCheckSuiteResult check_mlp_backward(const GradCheckOptions& opts, SeededRng& rng) {
  GradCheckSuiteResult result{.name = "mlp_backward"};
  CoordinateCheck check;
  for (std::size_t t = 0; t < opts.trials; ++t) {
    const std::size_t n = 2 + rng.uniform_int(5);
    const std::size_t d = 4 + rng.uniform_int(9);
    const std::size_t s = 3 + rng.uniform_int(6);
    ProjectorConfig pc;
    pc.embed_dim = d;
    pc.output_dim = s;
    pc.hidden_width = 4 + rng.uniform_int(13);
    pc.mlp_layers = 1 + rng.uniform_int(3);
    pc.adapter = true;
    MlpProjector projector(pc, rng);

    Matrix encoded(n, d);
    for (std::size_t i = 0; i < n; ++i) {
      RealVector row(d);
      for (auto& v : row) v = rng.normal();
      row = l2_normalize(row);
      std::copy(row.begin(), row.end(), encoded.row(i).begin());
    }
    const auto labels = random_labels(rng, n, s);
    ContrastiveConfig cc;
    cc.alpha = rng.uniform(0.05, 1.0);
    cc.k = 1 + rng.uniform_int(n - 1);
    cc.tau = rng.uniform(0.1, 1.0);
    cc.soft_label_source = SoftLabelSource::kLabelCosineSquared;

    MlpProjector::ForwardCache cache;
    auto [z, preds] = projector.forward(encoded, &cache);
    const LossOutput loss = combined_loss(labels, preds, z, cc);
    const std::vector<double> analytic =
        projector.backward(cache, loss.grad_predictions, loss.grad_embeddings);

    const RealVector fd = finite_diff_grad(
        [&](const RealVector& params) {
          MlpProjector probe = MlpProjector::from_params(pc, params);
          auto [pz, ppreds] = probe.forward(encoded);
          return combined_loss(labels, ppreds, pz, cc).value;
        },
        projector.params(), opts.step);

    const std::size_t before = check.failures;
    for (std::size_t i = 0; i < analytic.size(); ++i) check.compare(opts, analytic[i], fd[i]);
    result.failed_trials += (check.failures != before) ? 1 : 0;
    ++result.trials;
  }
  result.max_relative_error = check.max_relative_error;
  return result;
}

}  // namespace

GradCheckReport run_gradient_checks(const GradCheckOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  GradCheckReport report;
  SeededRng rng(options.seed);

  report.suites.push_back(check_bce(options, rng));

  report.suites.push_back(check_embedding_loss(
      options, rng, "infonce_loss",
      [](SeededRng& r, const std::vector<RealVector>& z,
         std::function<double(const std::vector<RealVector>&)>& value_fn) {
        const std::size_t n = z.size();
        std::vector<std::size_t> positives(n);
        for (std::size_t i = 0; i < n; ++i) {
          std::size_t p = r.uniform_int(n - 1);
          if (p >= i) ++p;
          positives[i] = p;
        }
        const double tau = r.uniform(0.1, 1.0);
        value_fn = [positives, tau](const std::vector<RealVector>& probe) {
          return infonce_loss(probe, positives, tau).value;
        };
        return infonce_loss(z, positives, tau);
      }));

  report.suites.push_back(check_embedding_loss(
      options, rng, "supcon_loss",
      [](SeededRng& r, const std::vector<RealVector>& z,
         std::function<double(const std::vector<RealVector>&)>& value_fn) {
        const std::size_t n = z.size();
        std::vector<std::vector<std::size_t>> sets(n);
        for (std::size_t i = 0; i < n; ++i) {
          std::vector<std::size_t> others;
          for (std::size_t j = 0; j < n; ++j) {
            if (j != i) others.push_back(j);
          }
          r.shuffle(others);
          const std::size_t size = 1 + r.uniform_int(std::min<std::size_t>(4, n - 1));
          sets[i].assign(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(size));
        }
        const double tau = r.uniform(0.1, 1.0);
        value_fn = [sets, tau](const std::vector<RealVector>& probe) {
          return supcon_loss(probe, sets, tau).value;
        };
        return supcon_loss(z, sets, tau);
      }));

  std::size_t pecl_counter = 0;
  report.suites.push_back(check_embedding_loss(
      options, rng, "pecl_loss",
      [&pecl_counter](SeededRng& r, const std::vector<RealVector>& z,
                      std::function<double(const std::vector<RealVector>&)>& value_fn) {
        const std::size_t n = z.size();
        const std::size_t s = 3 + r.uniform_int(60);
        const auto labels = random_labels(r, n, s);
        ContrastiveConfig cc;
        cc.k = 1 + r.uniform_int(std::min<std::size_t>(10, n - 1));
        cc.tau = r.uniform(0.1, 1.0);
        constexpr SoftLabelSource kSources[] = {
            SoftLabelSource::kLabelCosineSquared, SoftLabelSource::kLabelCosine,
            SoftLabelSource::kConstantOne, SoftLabelSource::kEmbeddingCosine};
        cc.soft_label_source = kSources[pecl_counter++ % 4];

        if (cc.soft_label_source == SoftLabelSource::kEmbeddingCosine) {
          // Stop-gradient source: freeze the positive weights at the
          // unperturbed embeddings and differentiate only the softmax path.
          const Matrix sim = label_similarity_matrix(labels);
          const auto neighbor_sets = knn_neighbors(sim, cc.k);
          const Matrix soft = soft_labels(sim, cc.soft_label_source, &z);
          Matrix weights(n, n);
          for (const auto& set : neighbor_sets) {
            const double inv = 1.0 / static_cast<double>(set.neighbors.size());
            for (const std::size_t j : set.neighbors) {
              weights(set.anchor, j) = soft(set.anchor, j) * inv;
            }
          }
          const double tau = cc.tau;
          value_fn = [weights, tau](const std::vector<RealVector>& probe) {
            return weighted_contrastive_loss(probe, weights, tau).value;
          };
        } else {
          value_fn = [labels, cc](const std::vector<RealVector>& probe) {
            return pecl_loss(probe, labels, cc).value;
          };
        }
        return pecl_loss(z, labels, cc);
      }));

  report.suites.push_back(check_mlp_backward(options, rng));

  for (const auto& suite : report.suites) report.passed = report.passed && suite.passed();
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace pecl
