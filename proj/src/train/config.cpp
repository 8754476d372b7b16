#include "emolign/train/config.hpp"

#include <cstdio>

#include "emolign/config_file.hpp"
#include "emolign/dataset/labels.hpp"

namespace emolign::train {

TrainConfig TrainConfig::from_file(const std::string& path) {
  KeyValues kv = KeyValues::parse_file(path);
  TrainConfig c;
  c.dataset_dir = kv.get_string("dataset_dir", c.dataset_dir);
  c.checkpoint_dir = kv.get_string("checkpoint_dir", c.checkpoint_dir);
  c.log_file = kv.get_string("log_file", c.log_file);
  c.resume = kv.get_string("resume", c.resume);
  c.mode = kv.get_string("mode", c.mode);
  c.seed = kv.get_u64("seed", c.seed);
  c.epochs_a = static_cast<int>(kv.get_int("epochs_a", c.epochs_a));
  c.epochs_b = static_cast<int>(kv.get_int("epochs_b", c.epochs_b));
  c.batch_size = static_cast<int>(kv.get_int("batch_size", c.batch_size));
  c.lr = kv.get_double("lr", c.lr);
  c.adam_beta1 = kv.get_double("adam_beta1", c.adam_beta1);
  c.adam_beta2 = kv.get_double("adam_beta2", c.adam_beta2);
  c.adam_eps = kv.get_double("adam_eps", c.adam_eps);
  c.alpha = kv.get_double("alpha", c.alpha);
  c.beta = kv.get_double("beta", c.beta);
  c.patience = static_cast<int>(kv.get_int("patience", c.patience));
  c.val_fraction = kv.get_double("val_fraction", c.val_fraction);
  c.stop_after = static_cast<long>(kv.get_int("stop_after", c.stop_after));
  c.heatmap_sigma = kv.get_double("heatmap_sigma", c.heatmap_sigma);
  c.n_stages = static_cast<int>(kv.get_int("n_stages", c.n_stages));
  c.conv1_channels = static_cast<int>(kv.get_int("conv1_channels", c.conv1_channels));
  c.conv2_channels = static_cast<int>(kv.get_int("conv2_channels", c.conv2_channels));
  c.fc_width = static_cast<int>(kv.get_int("fc_width", c.fc_width));
  c.label_map_3 = kv.get_string("label_map_3", c.label_map_3);
  kv.reject_unknown();
  return c;
}

void TrainConfig::validate() const {
  if (dataset_dir.empty()) throw ValidationError("train: dataset_dir is required");
  if (checkpoint_dir.empty()) throw ValidationError("train: checkpoint_dir is required");
  if (mode != "joint" && mode != "emotion_only" && mode != "landmark_only") {
    throw ValidationError("train: mode must be joint, emotion_only or landmark_only");
  }
  if (epochs_a < 0 || epochs_b < 0 || total_epochs() < 1) {
    throw ValidationError("train: need non-negative phase epochs, at least 1 total");
  }
  if (batch_size < 1) throw ValidationError("train: batch_size must be >= 1");
  if (!(lr > 0.0)) throw ValidationError("train: lr must be positive");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) ||
      !(adam_beta2 > 0.0 && adam_beta2 < 1.0) || !(adam_eps > 0.0)) {
    throw ValidationError("train: adam parameters out of range");
  }
  if (patience < 0) throw ValidationError("train: patience must be >= 0");
  if (!(val_fraction >= 0.0 && val_fraction <= 0.5)) {
    throw ValidationError("train: val_fraction must be in [0,0.5]");
  }
  if (stop_after < 0) throw ValidationError("train: stop_after must be >= 0");
  dataset::LabelMap3::parse(label_map_3);
  model_config().validate();
}

model::ModelConfig TrainConfig::model_config() const {
  model::ModelConfig m;
  m.heatmap_sigma = heatmap_sigma;
  m.n_stages = n_stages;
  m.conv1_channels = conv1_channels;
  m.conv2_channels = conv2_channels;
  m.fc_width = fc_width;
  m.alpha = alpha;
  m.beta = beta;
  return m;
}

std::uint64_t TrainConfig::digest() const {
  char buf[64];
  std::string text;
  auto add = [&text](const std::string& k, const std::string& v) {
    text += k;
    text += '=';
    text += v;
    text += '\n';
  };
  auto addf = [&](const std::string& k, double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    add(k, buf);
  };
  add("mode", mode);
  add("seed", std::to_string(seed));
  add("epochs_a", std::to_string(epochs_a));
  add("epochs_b", std::to_string(epochs_b));
  add("batch_size", std::to_string(batch_size));
  addf("lr", lr);
  addf("adam_beta1", adam_beta1);
  addf("adam_beta2", adam_beta2);
  addf("adam_eps", adam_eps);
  addf("alpha", alpha);
  addf("beta", beta);
  add("patience", std::to_string(patience));
  addf("val_fraction", val_fraction);
  addf("heatmap_sigma", heatmap_sigma);
  add("n_stages", std::to_string(n_stages));
  add("conv1_channels", std::to_string(conv1_channels));
  add("conv2_channels", std::to_string(conv2_channels));
  add("fc_width", std::to_string(fc_width));
  add("label_map_3", label_map_3);
  return fnv1a64(text);
}

std::string TrainConfig::resolved_log_file() const {
  if (!log_file.empty()) return log_file;
  return checkpoint_dir + "/metrics.csv";
}

int TrainConfig::phase_a_epochs() const {
  return mode == "emotion_only" ? 0 : epochs_a;
}

}  // namespace emolign::train
