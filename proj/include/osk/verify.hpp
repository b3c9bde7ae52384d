#ifndef OSK_VERIFY_HPP
#define OSK_VERIFY_HPP

#include <string>
#include <vector>

#include "osk/hamgen.hpp"
#include "osk/maslov.hpp"

namespace osk::verify {

struct FailureRecord {
  int trial = 0;
  std::string detail;
  std::string replay_json;  // instance dump for replay, may be empty
};

struct SuiteResult {
  std::string suite;
  int trials = 0;
  std::vector<FailureRecord> failures;
  bool ok() const { return failures.empty(); }
};

struct SuiteConfig {
  int trials = 100;
  unsigned long long seed = 42;
  int n_max = 4;
  bool parallel = true;
};

const std::vector<std::string>& suite_names();

/// Runs one named randomized suite; unknown names raise InvalidInput.
/// Trials are independent (seeded per trial from config.seed) and may run
/// concurrently; failure records come back ordered by trial index.
SuiteResult run_suite(const std::string& name, const SuiteConfig& config,
                      const Tolerances& tol);

/// Doubles the grid density of a path through its evaluator (midpoint
/// insertion); used by the grid-independence checks.
SampledLagrangianPath double_density(const SampledLagrangianPath& path,
                                     const Tolerances& tol);

}  // namespace osk::verify

#endif  // OSK_VERIFY_HPP
