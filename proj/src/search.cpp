#include "pecl/search.hpp"

#include <cmath>
#include <cstdio>

#include "pecl/io.hpp"

namespace pecl {

SearchCandidate sample_candidate(const RandomSearchSpace& space, SeededRng& rng) {
  SearchCandidate c;
  c.learning_rate = std::pow(10.0, rng.uniform(space.log10_lr_min, space.log10_lr_max));
  c.batch_size = space.batch_sizes[rng.uniform_int(space.batch_sizes.size())];
  const std::size_t k_cap = (c.batch_size == 8) ? space.k_max_batch8 : space.k_max;
  c.k = 1 + rng.uniform_int(k_cap);
  c.alpha = std::pow(10.0, rng.uniform(space.log10_alpha_min, space.log10_alpha_max));
  c.tau = rng.uniform(space.tau_min, space.tau_max);
  return c;
}

std::vector<SearchCandidate> grid_candidates(const std::vector<std::size_t>& ks,
                                             const std::vector<double>& alphas,
                                             double learning_rate, std::size_t batch_size,
                                             double tau) {
  std::vector<SearchCandidate> out;
  out.reserve(ks.size() * alphas.size());
  for (const double alpha : alphas) {
    for (const std::size_t k : ks) {
      out.push_back(SearchCandidate{learning_rate, batch_size, k, alpha, tau});
    }
  }
  return out;
}

std::string candidate_hash(const SearchCandidate& candidate,
                           const std::vector<std::uint64_t>& seeds) {
  std::string text = format_double(candidate.learning_rate) + "|" +
                     std::to_string(candidate.batch_size) + "|" + std::to_string(candidate.k) +
                     "|" + format_double(candidate.alpha) + "|" + format_double(candidate.tau);
  for (const auto s : seeds) text += "|" + std::to_string(s);

  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : text) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

}  // namespace pecl
