#include "emolign/numgrad/adam.hpp"

#include <cmath>

namespace emolign::numgrad {

void adam_step(Tensor& param, const Array& grad, AdamSlot& slot, const AdamParams& cfg, long t) {
  const char* name = param.label().empty() ? "<unnamed>" : param.label().c_str();
  if (grad.size() != param.size())
    throw ValidationError("adam_step: gradient size " + std::to_string(grad.size()) +
                          " does not match parameter '" + std::string(name) + "' of size " +
                          std::to_string(param.size()));
  if (t < 1) throw ValidationError("adam_step: step count must be >= 1");
  if (!grad.isFinite().all())
    throw RuntimeError("adam_step: non-finite gradient for parameter '" + std::string(name) + "'");

  if (slot.m.size() != param.size()) {
    slot.m = Array::Zero(param.size());
    slot.v = Array::Zero(param.size());
  }
  slot.m = cfg.beta1 * slot.m + (1.0 - cfg.beta1) * grad;
  slot.v = cfg.beta2 * slot.v + (1.0 - cfg.beta2) * grad.square();
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  param.values() -= cfg.lr * (slot.m / bc1) / ((slot.v / bc2).sqrt() + cfg.eps);
  slot.t = t;
}

}  // namespace emolign::numgrad
