#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ghdo {

/// Outcome of one invariant suite: counts of passing cases and the worst
/// observed deviation (in the suite's own metric).
struct VerifyReport {
  std::string suite;
  std::size_t passed = 0;
  std::size_t total = 0;
  double worst = 0.0;
  std::vector<std::string> failures;

  bool ok() const { return passed == total; }
};

/// Names accepted by run_suite, in a fixed order.
const std::vector<std::string>& suite_names();

/// Runs schur, positivity, constructors, sampler, gradient or
/// tdvp-fixedpoint. Throws InputError for an unknown name.
VerifyReport run_suite(const std::string& name, std::uint64_t seed = 1, int threads = 1);

}  // namespace ghdo
