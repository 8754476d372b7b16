#pragma once

#include <vector>

#include "emolign/numgrad/tensor.hpp"

namespace emolign::numgrad {

// out[b,o] = sum_i x[b,i]*w[i,o] + b[o]
Tensor dense(const Tensor& x, const Tensor& w, const Tensor& b);

// 3x3 cross-correlation, stride 1, zero padding 1. x:[B,C,H,W], k:[F,C,3,3], b:[F] -> [B,F,H,W]
Tensor conv2d(const Tensor& x, const Tensor& k, const Tensor& b);

// 2x2 non-overlapping max pooling; H and W must be even. Ties route the
// gradient to the first position in row-major scan order.
Tensor maxpool2(const Tensor& x);

Tensor relu(const Tensor& x);

// Mean over the batch of -log softmax(logits)[label]; max-subtraction stabilized.
Tensor softmax_ce(const Tensor& logits, const std::vector<int>& labels);

Tensor reshape(const Tensor& x, std::vector<int> shape);
Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double c);
Tensor sum(const Tensor& x);

}  // namespace emolign::numgrad
