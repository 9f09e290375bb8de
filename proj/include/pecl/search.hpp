#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pecl/numeric.hpp"

namespace pecl {

struct SearchCandidate {
  double learning_rate = 0.001;
  std::size_t batch_size = 32;
  std::size_t k = 5;
  double alpha = 0.1;
  double tau = 0.5;
};

/// Random-search supports: lr ~ 10^U(-5,-3), batch in {8,16,32,64},
/// k ~ U{1..10} (upper limit 7 when batch = 8), alpha ~ 10^U(-3/2, 0),
/// tau ~ U(1/10, 1).
struct RandomSearchSpace {
  double log10_lr_min = -5.0;
  double log10_lr_max = -3.0;
  std::vector<std::size_t> batch_sizes = {8, 16, 32, 64};
  std::size_t k_max = 10;
  std::size_t k_max_batch8 = 7;
  double log10_alpha_min = -1.5;
  double log10_alpha_max = 0.0;
  double tau_min = 0.1;
  double tau_max = 1.0;
};

/// Draw order is fixed (lr, batch, k, alpha, tau) so candidate streams are
/// reproducible from the seed.
SearchCandidate sample_candidate(const RandomSearchSpace& space, SeededRng& rng);

/// Grid candidates in alpha-major order (k varies fastest within each alpha),
/// with fixed learning rate, batch size and temperature.
std::vector<SearchCandidate> grid_candidates(const std::vector<std::size_t>& ks,
                                             const std::vector<double>& alphas,
                                             double learning_rate, std::size_t batch_size,
                                             double tau);

/// Stable identifier for resume support (FNV-1a over the formatted fields).
std::string candidate_hash(const SearchCandidate& candidate,
                           const std::vector<std::uint64_t>& seeds);

}  // namespace pecl
