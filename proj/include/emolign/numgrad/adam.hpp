#pragma once

#include "emolign/numgrad/tensor.hpp"

namespace emolign::numgrad {

struct AdamParams {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment estimates for one parameter tensor.
struct AdamSlot {
  Array m, v;
  long t = 0;  // number of steps applied so far
};

// Standard bias-corrected Adam update, t is the 1-based step count. Rejects
// non-finite gradients with the parameter's label in the message.
void adam_step(Tensor& param, const Array& grad, AdamSlot& slot, const AdamParams& cfg, long t);

}  // namespace emolign::numgrad
