#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace secmpc {

struct CheckResult {
  std::string suite;
  bool passed = false;
  double metric = 0.0;  // worst observed deviation
  double tolerance = 0.0;
  std::string detail;
};

// Built-in consistency suites: piece cost against quadrature, the K = 1 timing
// optimum and its scaling, finite-difference Jacobians of every feature in
// the shipped scenarios and of every solver residual, and the temporal
// consistency of a deterministic closed loop.
std::vector<CheckResult> RunSelfChecks(std::uint64_t seed = 7);

}  // namespace secmpc
