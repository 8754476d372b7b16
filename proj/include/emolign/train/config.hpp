#pragma once

#include <cstdint>
#include <string>

#include "emolign/model/config.hpp"

namespace emolign::train {

// Full training recipe. File values override defaults, CLI flags override
// file values. digest() covers every field that affects the numbers
// (hyperparameters, seed, schedule) and skips paths and stop_after, so a
// stopped-and-resumed run digests identically to a straight one.
struct TrainConfig {
  std::string dataset_dir;
  std::string checkpoint_dir;
  std::string log_file;  // default: <checkpoint_dir>/metrics.csv
  std::string resume;    // checkpoint to continue from
  std::string mode = "joint";  // joint | emotion_only | landmark_only

  std::uint64_t seed = 0;
  int epochs_a = 50;
  int epochs_b = 150;
  int batch_size = 32;
  double lr = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double alpha = 0.4;
  double beta = 0.6;
  int patience = 20;  // epochs without val improvement in phase B; 0 disables
  double val_fraction = 0.1;
  long stop_after = 0;  // pause after this global epoch; 0 runs to the end

  double heatmap_sigma = 2.0;
  int n_stages = 2;
  int conv1_channels = 8;
  int conv2_channels = 16;
  int fc_width = 128;
  std::string label_map_3 = "pos,neg,neg,pos,neg,neg,neu";

  static TrainConfig from_file(const std::string& path);
  void validate() const;
  model::ModelConfig model_config() const;
  std::uint64_t digest() const;
  std::string resolved_log_file() const;

  int phase_a_epochs() const;  // emotion_only folds phase A into phase B
  int total_epochs() const { return epochs_a + epochs_b; }
};

}  // namespace emolign::train
