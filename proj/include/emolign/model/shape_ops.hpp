#pragma once

#include <vector>

#include "emolign/geometry/shape.hpp"
#include "emolign/numgrad/tensor.hpp"

namespace emolign::model {

// Applies one similarity transform per batch row to flattened landmarks
// [B, 2*68] laid out x0,y0,x1,y1,... The transform parameters are constants;
// gradients flow through the point coordinates only.
numgrad::Tensor landmark_transform(
    const numgrad::Tensor& x,
    const std::vector<geometry::SimilarityTransform>& ts);

// Mean over the batch of (mean per-landmark distance to gt) / d[b], with gt
// and the normalizers d constant. Zero-distance landmarks contribute zero
// gradient (subgradient choice at the cone point).
numgrad::Tensor nme_loss(const numgrad::Tensor& pred,
                         const std::vector<geometry::Shape>& gt,
                         const std::vector<double>& d);

}  // namespace emolign::model
