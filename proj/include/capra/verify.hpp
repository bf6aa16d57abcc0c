#pragma once

#include "capra/io.hpp"
#include "capra/norms.hpp"
#include "capra/set_function.hpp"

#include <optional>
#include <string>
#include <vector>

namespace capra {

/// Result of checking one claim over randomized instances.
struct VerificationReport {
  std::string claim;
  std::string suite;
  std::string operation;
  Json inputs;
  int trials = 0;
  int failures = 0;
  double max_residual = 0.0;
  double tolerance = 0.0;
  bool passed = true;
  /// At most a handful of failing instances, plus any instance the claim asks to record.
  Json witnesses = Json::array();
  std::string timestamp;

  Json to_json() const;
};

struct VerifyConfig {
  NormSpec norm = NormSpec::lp(2.0);
  int d = 3;
  /// 0 picks the suite default.
  int trials = 0;
  std::uint64_t seed = 0;
  /// Negative keeps each claim's own tolerance.
  double tol = -1.0;
  /// Overrides the random set functions of suites that draw them.
  std::optional<SetFunction> F;
  /// Sample count of the sampling oracles.
  long samples = 100000;
  /// Worker threads; results do not depend on it.
  int threads = 0;
};

/// "theorem1", "theorem2", "appendixB", "hidden-convexity", "subdiff", "bounds", "conjugate".
const std::vector<std::string>& suite_names();
int default_trials(const std::string& suite);

/// Runs a suite. Every random draw derives from cfg.seed, so equal configs give equal
/// reports (timestamps are left empty for the caller to fill).
std::vector<VerificationReport> run_suite(const std::string& suite, const VerifyConfig& cfg);

/// Random nondecreasing finite set function; `normalized` forces F(empty) = 0 and
/// `positive` makes F(K) > 0 off the empty set.
SetFunction random_nondecreasing(int d, std::uint64_t seed, bool normalized, bool positive);

}  // namespace capra
