#pragma once

#include <vector>

#include "emolign/dataset/labels.hpp"
#include "emolign/geometry/image.hpp"
#include "emolign/geometry/shape.hpp"
#include "emolign/model/params.hpp"
#include "emolign/numgrad/tensor.hpp"

namespace emolign::model {

// The constants computed between stages (stop-gradient): per-sample aligning
// transform, warped image and landmark heatmap. A gradient check must freeze
// these at the base point so finite differences probe the same function the
// tape differentiates.
struct StageContext {
  std::vector<geometry::SimilarityTransform> t2;
  std::vector<geometry::Image> warped;
  std::vector<geometry::Heatmap> heatmaps;
};

// stage1_only runs the first stage and skips the emotion head (phase A of
// training); full runs every configured stage plus the emotion head.
enum class ForwardScope { stage1_only, full };

// Tape handles from a batched forward pass. s_final and s1 are [B, 136]
// flattened x,y landmarks in the original image frame; logits is [B, classes]
// and is only valid when the emotion head ran.
struct BatchForward {
  numgrad::Tensor s_final;
  numgrad::Tensor s1;
  numgrad::Tensor logits;
  std::vector<geometry::SimilarityTransform> t2;
};

// images must be 64x64 with values in [0,1]. When frozen is non-null its
// stage context is used instead of recomputing; when capture is non-null the
// context that was used is copied out.
BatchForward forward_batch(const ModelParams& params,
                           const std::vector<geometry::Image>& images,
                           ForwardScope scope,
                           const StageContext* frozen = nullptr,
                           StageContext* capture = nullptr);

struct ForwardOutput {
  geometry::Shape S = geometry::Shape::Zero();   // final, image frame
  std::vector<geometry::Shape> stage_shapes;     // image frame, one per stage
  Eigen::VectorXd E;                             // softmax probabilities
  Eigen::VectorXd logits;
};

ForwardOutput forward(const ModelParams& params, const geometry::Image& image);

// Which loss terms are active; weights are applied either way and a masked
// term is recorded as zero.
struct LossTerms {
  bool landmark = true;
  bool emotion = true;
};

struct LossBreakdown {
  numgrad::Tensor total;        // scalar on the tape
  double landmark_term = 0.0;   // pre-alpha
  double emotion_term = 0.0;    // pre-beta
  double alpha = 0.0;
  double beta = 0.0;
};

// total = alpha*landmark_term + beta*emotion_term over the batch, with the
// landmark term evaluated in the original image frame and each sample's
// inter-pupil normalizer taken from its ground truth.
LossBreakdown joint_loss(const BatchForward& out,
                         const std::vector<geometry::Shape>& gt_shapes,
                         const std::vector<int>& gt_labels,
                         const ModelConfig& config, LossTerms terms = {});

struct Prediction {
  geometry::Shape S = geometry::Shape::Zero();
  dataset::Emotion7 label = dataset::Emotion7::neutral;
  Eigen::VectorXd probs;
};

// argmax of E with ties broken by the lowest class index.
Prediction predict(const ModelParams& params, const geometry::Image& image);

int argmax_lowest(const Eigen::VectorXd& v);

}  // namespace emolign::model
