#pragma once

#include "emolign/common.hpp"

namespace emolign::model {

// Network and loss hyperparameters. The alpha/beta defaults are the shipped
// loss weighting; stage net widths are small on purpose (the synthetic task
// is desk-scale).
struct ModelConfig {
  int input_size = 64;
  int n_landmarks = 68;
  int n_stages = 2;
  int n_classes = 7;
  double heatmap_sigma = 2.0;
  int conv1_channels = 8;
  int conv2_channels = 16;
  int fc_width = 128;
  double alpha = 0.4;
  double beta = 0.6;

  void validate() const;
  int landmark_dim() const { return 2 * n_landmarks; }
  // flattened size after conv-pool-conv-pool
  int trunk_dim() const {
    int side = input_size / 4;
    return conv2_channels * side * side;
  }
};

}  // namespace emolign::model
