#pragma once

#include <functional>
#include <random>

#include "emolign/numgrad/tensor.hpp"

namespace emolign::numgrad {

// f builds a fresh graph from x's current values and returns a scalar tensor.
using ScalarFn = std::function<Tensor(Tensor&)>;

struct GradCheckResult {
  double max_rel_err = 0.0;
  Eigen::Index worst_coord = -1;
  double analytic = 0.0;
  double numeric = 0.0;
  Eigen::Index checked = 0;
};

// Compares the reverse-mode gradient of f at x against central finite
// differences on the given coordinates (all coordinates when empty).
// Relative error uses denominator max(|analytic|, |numeric|, 1e-8).
GradCheckResult grad_check_coords(const ScalarFn& f, Tensor& x, double step,
                                  const std::vector<Eigen::Index>& coords);

GradCheckResult grad_check(const ScalarFn& f, Tensor& x, double step);

// Samples up to n coordinates whose analytic gradient magnitude is at least
// min_magnitude; below the finite-difference noise floor the ratio test is
// meaningless, so such coordinates are instead required to have |numeric|
// under min_magnitude as well (counted as checked, rel err from the floor
// denominator). Falls back to the largest-|gradient| coordinates when fewer
// than n are eligible.
GradCheckResult grad_check_sampled(const ScalarFn& f, Tensor& x, double step, int n,
                                   std::mt19937_64& rng, double min_magnitude = 1e-6);

}  // namespace emolign::numgrad
