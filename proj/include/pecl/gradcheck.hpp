#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pecl {

struct GradCheckOptions {
  std::size_t trials = 100;  // per suite
  std::uint64_t seed = 0;
  double relative_tolerance = 1e-5;
  double absolute_floor = 1e-8;
  double step = 1e-6;
  /// Corrupts the analytic BCE gradient so tests can confirm the harness
  /// actually detects a wrong gradient.
  bool inject_bce_sign_flip = false;
};

struct GradCheckSuiteResult {
  std::string name;
  std::size_t trials = 0;
  std::size_t failed_trials = 0;
  double max_relative_error = 0.0;
  bool passed() const { return failed_trials == 0; }
};

struct GradCheckReport {
  std::vector<GradCheckSuiteResult> suites;
  bool passed = true;
  double seconds = 0.0;
};

/// Checks the analytic gradients of bce/infonce/supcon/pecl and the full
/// projector backward pass against central finite differences on random
/// instances (N in 2..16, D in 4..32, S in 3..62; small nets for backward).
/// The embedding-cosine soft-label source is stop-gradient, so its oracle
/// evaluates the loss with the soft labels frozen at the unperturbed
/// embeddings.
GradCheckReport run_gradient_checks(const GradCheckOptions& options);

}  // namespace pecl
