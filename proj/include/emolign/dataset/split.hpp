#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "emolign/dataset/sample.hpp"

namespace emolign::dataset {

struct SplitResult {
  std::vector<Sample> train;
  std::vector<Sample> val;
  std::vector<Sample> test;
};

// Seeded shuffle followed by a contiguous cut. Fractions must be positive
// and sum to 1 within 1e-9; boundaries are rounded to the nearest index.
SplitResult split(const std::vector<Sample>& samples,
                  const std::array<double, 3>& fractions, std::uint64_t seed);

}  // namespace emolign::dataset
