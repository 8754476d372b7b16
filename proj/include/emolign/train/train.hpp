#pragma once

#include <string>
#include <vector>

#include "emolign/dataset/sample.hpp"
#include "emolign/train/config.hpp"

namespace emolign::train {

struct TrainResult {
  std::string last_checkpoint;  // state after the last completed epoch
  std::string best_checkpoint;  // best-validation snapshot (phase B), may be empty
  std::string log_file;
  long epochs_run = 0;
  bool early_stopped = false;
};

// Runs the stage-wise schedule: phase A trains stage 1 on the landmark term,
// phase B trains the full network on the mode's loss. emotion_only spends
// its whole budget in phase B. Writes last.ckpt every epoch, best.ckpt on
// validation improvement, and one train + one val row per epoch to the log.
TrainResult train(const TrainConfig& config);

// Per-epoch metrics for one split; exposed for the evaluation module/tests.
struct SplitMetrics {
  double landmark_term = 0.0;
  double emotion_term = 0.0;
  double total = 0.0;
  double acc7 = 0.0;
  double acc3 = 0.0;
  double nme = 0.0;
};

}  // namespace emolign::train
