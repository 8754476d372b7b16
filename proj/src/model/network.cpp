#include "emolign/model/network.hpp"

#include <cmath>

#include "emolign/model/shape_ops.hpp"
#include "emolign/numgrad/ops.hpp"

namespace emolign::model {

using geometry::Image;
using geometry::Shape;
using geometry::SimilarityTransform;
using numgrad::Array;
using numgrad::Tensor;

namespace {

Shape row_to_shape(const Array& v, Eigen::Index row) {
  Shape s;
  const Eigen::Index base = row * 2 * geometry::kLandmarkCount;
  for (int k = 0; k < geometry::kLandmarkCount; ++k) {
    s(k, 0) = v[base + 2 * k];
    s(k, 1) = v[base + 2 * k + 1];
  }
  return s;
}

struct StageOut {
  Tensor features;  // [B, fc]
  Tensor delta;     // [B, 136]
};

StageOut run_stage(const ModelParams& p, const Tensor& x, int stage, int B) {
  const std::string pre = "stage" + std::to_string(stage) + "/";
  Tensor h = numgrad::conv2d(x, p.find(pre + "conv1_w"), p.find(pre + "conv1_b"));
  h = numgrad::relu(h);
  h = numgrad::maxpool2(h);
  h = numgrad::conv2d(h, p.find(pre + "conv2_w"), p.find(pre + "conv2_b"));
  h = numgrad::relu(h);
  h = numgrad::maxpool2(h);
  h = numgrad::reshape(h, {B, p.config.trunk_dim()});
  Tensor f = numgrad::relu(
      numgrad::dense(h, p.find(pre + "fc_w"), p.find(pre + "fc_b")));
  Tensor d = numgrad::dense(f, p.find(pre + "delta_w"), p.find(pre + "delta_b"));
  return {f, d};
}

}  // namespace

BatchForward forward_batch(const ModelParams& params,
                           const std::vector<Image>& images, ForwardScope scope,
                           const StageContext* frozen, StageContext* capture) {
  const ModelConfig& cfg = params.config;
  if (images.empty()) throw ValidationError("forward: empty batch");
  const int B = static_cast<int>(images.size());
  const int N = cfg.input_size;
  for (const Image& im : images) {
    if (im.rows() != N || im.cols() != N) {
      throw ValidationError("forward: image must be " + std::to_string(N) + "x" +
                            std::to_string(N));
    }
    if (!im.allFinite() || im.minCoeff() < 0.0 || im.maxCoeff() > 1.0) {
      throw ValidationError("forward: image values must lie in [0,1]");
    }
  }

  const int ld = cfg.landmark_dim();
  Array x1v(static_cast<Eigen::Index>(B) * N * N);
  for (int b = 0; b < B; ++b) {
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        x1v.data() + static_cast<Eigen::Index>(b) * N * N, N, N) = images[static_cast<std::size_t>(b)];
  }
  Tensor x1 = Tensor::constant({B, 1, N, N}, std::move(x1v));
  StageOut s1out = run_stage(params, x1, 1, B);

  Array s0v(static_cast<Eigen::Index>(B) * ld);
  for (int b = 0; b < B; ++b) {
    const Eigen::Index base = static_cast<Eigen::Index>(b) * ld;
    for (int k = 0; k < cfg.n_landmarks; ++k) {
      s0v[base + 2 * k] = params.canonical(k, 0);
      s0v[base + 2 * k + 1] = params.canonical(k, 1);
    }
  }
  Tensor s0 = Tensor::constant({B, ld}, std::move(s0v));
  Tensor s1 = numgrad::add(s1out.delta, s0);  // stage-1 transform is identity

  BatchForward out;
  out.s1 = s1;

  if (cfg.n_stages == 1) {
    out.s_final = s1;
    if (scope == ForwardScope::full) {
      out.logits = numgrad::dense(s1out.features, params.find("emotion/w"),
                                  params.find("emotion/b"));
    }
    return out;
  }
  if (scope == ForwardScope::stage1_only) {
    out.s_final = s1;
    return out;
  }

  StageContext local;
  const StageContext* ctx = frozen;
  if (ctx == nullptr) {
    local.t2.reserve(static_cast<std::size_t>(B));
    local.warped.reserve(static_cast<std::size_t>(B));
    local.heatmaps.reserve(static_cast<std::size_t>(B));
    for (int b = 0; b < B; ++b) {
      Shape s1b = row_to_shape(s1.values(), b);
      SimilarityTransform t;
      try {
        t = geometry::estimate_similarity(s1b, params.canonical);
      } catch (const ValidationError& e) {
        throw RuntimeError(std::string("forward stage 2: ") + e.what());
      }
      local.t2.push_back(t);
      local.warped.push_back(
          geometry::warp_image(images[static_cast<std::size_t>(b)], t, N, N));
      local.heatmaps.push_back(geometry::rasterize_heatmap(
          geometry::apply_transform(t, s1b), N, N, cfg.heatmap_sigma));
    }
    ctx = &local;
  }
  if (static_cast<int>(ctx->t2.size()) != B) {
    throw ValidationError("forward: frozen stage context batch mismatch");
  }
  if (capture) *capture = *ctx;

  Array x2v(static_cast<Eigen::Index>(B) * 2 * N * N);
  for (int b = 0; b < B; ++b) {
    const Eigen::Index base = static_cast<Eigen::Index>(b) * 2 * N * N;
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        x2v.data() + base, N, N) = ctx->warped[static_cast<std::size_t>(b)];
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        x2v.data() + base + N * N, N, N) = ctx->heatmaps[static_cast<std::size_t>(b)];
  }
  Tensor x2 = Tensor::constant({B, 2, N, N}, std::move(x2v));
  StageOut s2out = run_stage(params, x2, 2, B);

  Tensor t2s1 = landmark_transform(s1, ctx->t2);
  Tensor s2c = numgrad::add(t2s1, s2out.delta);

  std::vector<SimilarityTransform> inv;
  inv.reserve(ctx->t2.size());
  for (const auto& t : ctx->t2) {
    try {
      inv.push_back(geometry::invert_transform(t));
    } catch (const ValidationError& e) {
      throw RuntimeError(std::string("forward stage 2: ") + e.what());
    }
  }
  out.s_final = landmark_transform(s2c, inv);
  out.logits = numgrad::dense(s2out.features, params.find("emotion/w"),
                              params.find("emotion/b"));
  out.t2 = ctx->t2;
  return out;
}

ForwardOutput forward(const ModelParams& params, const Image& image) {
  BatchForward bf = forward_batch(params, {image}, ForwardScope::full);
  ForwardOutput o;
  o.S = row_to_shape(bf.s_final.values(), 0);
  o.stage_shapes.push_back(row_to_shape(bf.s1.values(), 0));
  if (params.config.n_stages == 2) o.stage_shapes.push_back(o.S);

  const Eigen::Index K = bf.logits.size();
  o.logits = Eigen::VectorXd(K);
  for (Eigen::Index i = 0; i < K; ++i) o.logits[i] = bf.logits.values()[i];
  const double m = o.logits.maxCoeff();
  Eigen::VectorXd ex = (o.logits.array() - m).exp();
  o.E = ex / ex.sum();
  return o;
}

LossBreakdown joint_loss(const BatchForward& out,
                         const std::vector<Shape>& gt_shapes,
                         const std::vector<int>& gt_labels,
                         const ModelConfig& config, LossTerms terms) {
  if (!terms.landmark && !terms.emotion) {
    throw ValidationError("joint_loss: every term masked out");
  }
  LossBreakdown lb;
  lb.alpha = config.alpha;
  lb.beta = config.beta;

  Tensor weighted_l, weighted_e;
  if (terms.landmark) {
    std::vector<double> d;
    d.reserve(gt_shapes.size());
    for (const Shape& g : gt_shapes) d.push_back(geometry::interpupil_distance(g));
    Tensor lt = nme_loss(out.s_final, gt_shapes, d);
    lb.landmark_term = lt.item();
    weighted_l = numgrad::scale(lt, config.alpha);
  }
  if (terms.emotion) {
    if (!out.logits.valid()) {
      throw ValidationError("joint_loss: emotion term requested but the forward pass skipped the emotion head");
    }
    Tensor et = numgrad::softmax_ce(out.logits, gt_labels);
    lb.emotion_term = et.item();
    weighted_e = numgrad::scale(et, config.beta);
  }
  if (terms.landmark && terms.emotion) {
    lb.total = numgrad::add(weighted_l, weighted_e);
  } else if (terms.landmark) {
    lb.total = weighted_l;
  } else {
    lb.total = weighted_e;
  }
  return lb;
}

int argmax_lowest(const Eigen::VectorXd& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

Prediction predict(const ModelParams& params, const Image& image) {
  ForwardOutput o = forward(params, image);
  Prediction p;
  p.S = o.S;
  p.probs = o.E;
  p.label = static_cast<dataset::Emotion7>(argmax_lowest(o.E));
  return p;
}

}  // namespace emolign::model
