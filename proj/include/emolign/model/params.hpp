#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "emolign/geometry/shape.hpp"
#include "emolign/model/config.hpp"
#include "emolign/numgrad/tensor.hpp"

namespace emolign::model {

inline constexpr std::uint32_t kParamsVersion = 1;

// All learnable tensors plus the canonical shape buffer. Tensor order is
// fixed and is the serialization order.
struct ModelParams {
  ModelConfig config;
  std::vector<std::pair<std::string, numgrad::Tensor>> tensors;
  geometry::Shape canonical = geometry::Shape::Zero();
  std::uint32_t version = kParamsVersion;

  numgrad::Tensor& find(const std::string& name);
  const numgrad::Tensor& find(const std::string& name) const;
  bool all_finite() const;
  void zero_grad();
};

// Names and shapes of every learnable tensor, in serialization order.
std::vector<std::pair<std::string, std::vector<int>>> tensor_layout(
    const ModelConfig& config);

// He-uniform weights (limit sqrt(6/fan_in)), zero biases, deterministic per
// seed. The canonical shape is the mean of train_shapes, similarity-scaled
// and centered to fill the frame with a 10% margin.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed,
                        const std::vector<geometry::Shape>& train_shapes);

// The normalization used on the mean shape; exposed for tests.
geometry::Shape normalize_canonical(const geometry::Shape& mean_shape, int frame);

}  // namespace emolign::model
