#include "emolign/model/params.hpp"

#include <cmath>
#include <random>

namespace emolign::model {

using numgrad::Tensor;

void ModelConfig::validate() const {
  if (input_size != 64) throw ValidationError("model: input_size must be 64");
  if (n_landmarks != geometry::kLandmarkCount) {
    throw ValidationError("model: n_landmarks must be 68");
  }
  if (n_stages < 1 || n_stages > 2) {
    throw ValidationError("model: n_stages must be 1 or 2");
  }
  if (n_classes < 2) throw ValidationError("model: n_classes must be >= 2");
  if (!(heatmap_sigma > 0.0)) throw ValidationError("model: heatmap_sigma must be positive");
  if (conv1_channels < 1 || conv2_channels < 1 || fc_width < 1) {
    throw ValidationError("model: channel/width fields must be positive");
  }
  if (!(alpha >= 0.0) || !(beta >= 0.0) || !(alpha + beta > 0.0)) {
    throw ValidationError("model: need alpha >= 0, beta >= 0, alpha + beta > 0");
  }
}

Tensor& ModelParams::find(const std::string& name) {
  for (auto& [n, t] : tensors) {
    if (n == name) return t;
  }
  throw RuntimeError("model: no parameter named '" + name + "'");
}

const Tensor& ModelParams::find(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return t;
  }
  throw RuntimeError("model: no parameter named '" + name + "'");
}

bool ModelParams::all_finite() const {
  for (const auto& [n, t] : tensors) {
    if (!t.values().isFinite().all()) return false;
  }
  return geometry::shape_finite(canonical);
}

void ModelParams::zero_grad() {
  for (auto& [n, t] : tensors) t.zero_grad();
}

geometry::Shape normalize_canonical(const geometry::Shape& mean_shape, int frame) {
  const double margin = 0.1 * frame;
  const double span = frame - 2.0 * margin;
  Eigen::RowVector2d lo = mean_shape.colwise().minCoeff();
  Eigen::RowVector2d hi = mean_shape.colwise().maxCoeff();
  double w = hi.x() - lo.x(), h = hi.y() - lo.y();
  if (w < 1e-9 || h < 1e-9) {
    throw ValidationError("canonical shape: degenerate mean shape extent");
  }
  double s = std::min(span / w, span / h);
  Eigen::RowVector2d mid = 0.5 * (lo + hi);
  geometry::Shape out = mean_shape;
  out.rowwise() -= mid;
  out *= s;
  out.array() += frame / 2.0;
  return out;
}

std::vector<std::pair<std::string, std::vector<int>>> tensor_layout(
    const ModelConfig& config) {
  const int c1 = config.conv1_channels, c2 = config.conv2_channels;
  const int fc = config.fc_width, trunk = config.trunk_dim();
  const int ld = config.landmark_dim();
  std::vector<std::pair<std::string, std::vector<int>>> out;
  for (int s = 1; s <= config.n_stages; ++s) {
    const int in_ch = s == 1 ? 1 : 2;
    const std::string pre = "stage" + std::to_string(s) + "/";
    out.emplace_back(pre + "conv1_w", std::vector<int>{c1, in_ch, 3, 3});
    out.emplace_back(pre + "conv1_b", std::vector<int>{c1});
    out.emplace_back(pre + "conv2_w", std::vector<int>{c2, c1, 3, 3});
    out.emplace_back(pre + "conv2_b", std::vector<int>{c2});
    out.emplace_back(pre + "fc_w", std::vector<int>{trunk, fc});
    out.emplace_back(pre + "fc_b", std::vector<int>{fc});
    out.emplace_back(pre + "delta_w", std::vector<int>{fc, ld});
    out.emplace_back(pre + "delta_b", std::vector<int>{ld});
  }
  out.emplace_back("emotion/w", std::vector<int>{fc, config.n_classes});
  out.emplace_back("emotion/b", std::vector<int>{config.n_classes});
  return out;
}

namespace {

// biases end in "_b" or are "emotion/b"; everything else is a weight
bool is_bias(const std::string& name) {
  return name.size() >= 2 && name.compare(name.size() - 2, 2, "_b") == 0
             ? true
             : name == "emotion/b";
}

long fan_in_of(const std::vector<int>& shape) {
  if (shape.size() == 4) return static_cast<long>(shape[1]) * shape[2] * shape[3];
  if (shape.size() == 2) return shape[0];
  throw ValidationError("fan_in: unsupported weight rank");
}

}  // namespace

ModelParams init_params(const ModelConfig& config, std::uint64_t seed,
                        const std::vector<geometry::Shape>& train_shapes) {
  config.validate();
  if (train_shapes.empty()) {
    throw ValidationError("init_params: train_shapes must be non-empty");
  }

  geometry::Shape mean = geometry::Shape::Zero();
  for (const auto& s : train_shapes) mean += s;
  mean /= static_cast<double>(train_shapes.size());

  ModelParams p;
  p.config = config;
  p.canonical = normalize_canonical(mean, config.input_size);

  std::mt19937_64 rng(seed);
  for (auto& [name, shape] : tensor_layout(config)) {
    if (is_bias(name)) {
      Tensor t = Tensor::zeros(shape, true);
      t.set_label(name);
      p.tensors.emplace_back(name, std::move(t));
    } else {
      const double limit = std::sqrt(6.0 / static_cast<double>(fan_in_of(shape)));
      std::uniform_real_distribution<double> dist(-limit, limit);
      numgrad::Array v(numgrad::shape_numel(shape));
      for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = dist(rng);
      p.tensors.emplace_back(name, Tensor::variable(shape, std::move(v), name));
    }
  }
  return p;
}

}  // namespace emolign::model
