#pragma once

#include <string>
#include <vector>

namespace emolign::verify {

struct CheckResult {
  std::string name;
  double worst_rel_err = 0.0;
  double tolerance = 0.0;
  long coords = 0;
  bool pass() const { return worst_rel_err < tolerance; }
};

// Finite-difference verification of every differentiable operation and of
// the full joint loss (with the inter-stage context frozen, since those
// inputs are stop-gradient by contract). Five seeds per check, at least 20
// sampled coordinates per tensor. Linear operations are held to 1e-6, the
// rest to 1e-4.
std::vector<CheckResult> run_gradcheck();

bool all_pass(const std::vector<CheckResult>& results);
std::string format_results(const std::vector<CheckResult>& results);

}  // namespace emolign::verify
