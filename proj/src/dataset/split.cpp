#include "emolign/dataset/split.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "emolign/common.hpp"

namespace emolign::dataset {

SplitResult split(const std::vector<Sample>& samples,
                  const std::array<double, 3>& fractions, std::uint64_t seed) {
  if (samples.empty()) throw ValidationError("split: empty sample list");
  for (double f : fractions) {
    if (!(f > 0.0)) throw ValidationError("split: fractions must be positive");
  }
  double sum = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ValidationError("split: fractions must sum to 1");
  }

  const std::size_t n = samples.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);

  auto n_train = static_cast<std::size_t>(
      std::llround(fractions[0] * static_cast<double>(n)));
  auto n_val = static_cast<std::size_t>(
      std::llround(fractions[1] * static_cast<double>(n)));
  n_train = std::min(n_train, n);
  n_val = std::min(n_val, n - n_train);

  SplitResult out;
  for (std::size_t i = 0; i < n; ++i) {
    const Sample& s = samples[idx[i]];
    if (i < n_train) {
      out.train.push_back(s);
    } else if (i < n_train + n_val) {
      out.val.push_back(s);
    } else {
      out.test.push_back(s);
    }
  }
  return out;
}

}  // namespace emolign::dataset
