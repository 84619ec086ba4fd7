#ifndef GRPOLAB_VERIFY_HPP_
#define GRPOLAB_VERIFY_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace grpolab {

// One verification check. margin >= 0 means the check passed; the margin is
// the distance to the failure surface (tolerance minus observed deviation,
// or the minimum slack of an inequality).
struct CheckResult {
  std::string suite;
  std::string name;
  double margin = 0.0;
  bool pass = false;
};

// One randomized improvement-bound instance.
struct BoundsRow {
  std::string variant;
  std::uint64_t seed = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

// Theorem-backed property suites with fixed seeds. `bounds_rows`, when given,
// receives the per-instance records of the bounds suite.
std::vector<CheckResult> verify_bounds(std::uint64_t seed, int instances,
                                       std::vector<BoundsRow>* bounds_rows);
std::vector<CheckResult> verify_unbiasedness(std::uint64_t seed);
std::vector<CheckResult> verify_recursion();
std::vector<CheckResult> verify_gradient(std::uint64_t seed);

std::vector<CheckResult> run_verify_suite(const std::string& suite,
                                          std::uint64_t seed, int instances,
                                          std::vector<BoundsRow>* bounds_rows);

}  // namespace grpolab

#endif  // GRPOLAB_VERIFY_HPP_
