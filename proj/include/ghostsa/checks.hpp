#pragma once

// Self-verifying invariant suites behind `ghostsa check --suite <name>`.
// Each check recomputes its reference from first principles (KKT residuals,
// support enumeration, finite differences) rather than trusting the solver.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ghostsa {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

inline constexpr std::string_view kCheckSuites[] = {"kernel", "estimator", "gradients"};

/// Throws InvalidArgument for an unknown suite name.
std::vector<CheckResult> run_check_suite(std::string_view suite, std::uint64_t seed = 1);

}  // namespace ghostsa
