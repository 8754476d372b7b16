#include "emolign/model/shape_ops.hpp"

#include <cmath>

namespace emolign::model {

using geometry::kLandmarkCount;
using geometry::SimilarityTransform;
using numgrad::Array;
using numgrad::Node;
using numgrad::Tensor;

Tensor landmark_transform(const Tensor& x,
                          const std::vector<SimilarityTransform>& ts) {
  if (x.rank() != 2 || x.dim(1) != 2 * kLandmarkCount) {
    throw ValidationError("landmark_transform: expected [B," +
                          std::to_string(2 * kLandmarkCount) + "] input");
  }
  const int B = x.dim(0);
  if (ts.size() != static_cast<std::size_t>(B)) {
    throw ValidationError("landmark_transform: transform count does not match batch");
  }

  Array out(x.size());
  const Array& v = x.values();
  for (int b = 0; b < B; ++b) {
    const SimilarityTransform& t = ts[b];
    const Eigen::Index base = static_cast<Eigen::Index>(b) * 2 * kLandmarkCount;
    for (int k = 0; k < kLandmarkCount; ++k) {
      const double px = v[base + 2 * k], py = v[base + 2 * k + 1];
      out[base + 2 * k] = t.a * px - t.b * py + t.tx;
      out[base + 2 * k + 1] = t.b * px + t.a * py + t.ty;
    }
  }

  auto tcopy = ts;
  return numgrad::make_op(
      "landmark_transform", x.shape(), std::move(out), {x},
      [tcopy, B](Node& n) {
        Node& xin = *n.inputs[0];
        if (!xin.requires_grad) return;
        xin.ensure_grad();
        for (int b = 0; b < B; ++b) {
          const SimilarityTransform& t = tcopy[static_cast<std::size_t>(b)];
          const Eigen::Index base = static_cast<Eigen::Index>(b) * 2 * kLandmarkCount;
          for (int k = 0; k < kLandmarkCount; ++k) {
            const double gx = n.grad[base + 2 * k];
            const double gy = n.grad[base + 2 * k + 1];
            xin.grad[base + 2 * k] += t.a * gx + t.b * gy;
            xin.grad[base + 2 * k + 1] += -t.b * gx + t.a * gy;
          }
        }
      });
}

Tensor nme_loss(const Tensor& pred, const std::vector<geometry::Shape>& gt,
                const std::vector<double>& d) {
  if (pred.rank() != 2 || pred.dim(1) != 2 * kLandmarkCount) {
    throw ValidationError("nme_loss: expected [B," +
                          std::to_string(2 * kLandmarkCount) + "] input");
  }
  const int B = pred.dim(0);
  if (gt.size() != static_cast<std::size_t>(B) || d.size() != static_cast<std::size_t>(B)) {
    throw ValidationError("nme_loss: gt/d count does not match batch");
  }
  for (double di : d) {
    if (!(di > 0.0)) throw ValidationError("nme_loss: non-positive normalizer");
  }

  const Array& v = pred.values();
  double loss = 0.0;
  for (int b = 0; b < B; ++b) {
    const Eigen::Index base = static_cast<Eigen::Index>(b) * 2 * kLandmarkCount;
    double acc = 0.0;
    for (int k = 0; k < kLandmarkCount; ++k) {
      const double dx = v[base + 2 * k] - gt[static_cast<std::size_t>(b)](k, 0);
      const double dy = v[base + 2 * k + 1] - gt[static_cast<std::size_t>(b)](k, 1);
      acc += std::sqrt(dx * dx + dy * dy);
    }
    loss += acc / (kLandmarkCount * d[static_cast<std::size_t>(b)]);
  }
  loss /= B;

  auto gts = gt;
  auto ds = d;
  Array out(1);
  out[0] = loss;
  return numgrad::make_op(
      "nme_loss", {1}, std::move(out), {pred},
      [gts, ds, B](Node& n) {
        Node& pin = *n.inputs[0];
        if (!pin.requires_grad) return;
        pin.ensure_grad();
        const double g = n.grad[0];
        for (int b = 0; b < B; ++b) {
          const Eigen::Index base = static_cast<Eigen::Index>(b) * 2 * kLandmarkCount;
          const double w = g / (B * kLandmarkCount * ds[static_cast<std::size_t>(b)]);
          for (int k = 0; k < kLandmarkCount; ++k) {
            const double dx = pin.value[base + 2 * k] - gts[static_cast<std::size_t>(b)](k, 0);
            const double dy = pin.value[base + 2 * k + 1] - gts[static_cast<std::size_t>(b)](k, 1);
            const double dist = std::sqrt(dx * dx + dy * dy);
            if (dist < 1e-12) continue;
            pin.grad[base + 2 * k] += w * dx / dist;
            pin.grad[base + 2 * k + 1] += w * dy / dist;
          }
        }
      });
}

}  // namespace emolign::model
