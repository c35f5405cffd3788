#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace spectral_homotopy {

struct SelftestOptions {
  /// Test hook: added to every entry of h(Lambda) inside the round-trip suite.
  double perturb_h = 0.0;
  unsigned long long seed = 20240611;
};

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

/// Oracle-equivalence, round-trip and finite-difference suites at reduced sizes.
/// Prints one status line per suite to `log`.
std::vector<SuiteResult> run_selftest(const SelftestOptions& options, std::ostream& log);

}  // namespace spectral_homotopy
