#include "emolign/geometry/image.hpp"

#include <cmath>

namespace emolign::geometry {

double bilinear_sample(const Image& img, double x, double y) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double wx = x - x0;
  const double wy = y - y0;
  auto at = [&](int r, int c) -> double {
    if (r < 0 || r >= img.rows() || c < 0 || c >= img.cols()) return 0.0;
    return img(r, c);
  };
  const double top = at(y0, x0) * (1.0 - wx) + at(y0, x0 + 1) * wx;
  const double bot = at(y0 + 1, x0) * (1.0 - wx) + at(y0 + 1, x0 + 1) * wx;
  return top * (1.0 - wy) + bot * wy;
}

Image warp_image(const Image& img, const SimilarityTransform& t, int out_h, int out_w) {
  const SimilarityTransform inv = invert_transform(t);
  Image out(out_h, out_w);
  for (int r = 0; r < out_h; ++r) {
    for (int c = 0; c < out_w; ++c) {
      const Eigen::Vector2d q = inv(Eigen::Vector2d(c, r));
      out(r, c) = bilinear_sample(img, q.x(), q.y());
    }
  }
  return out;
}

Heatmap rasterize_heatmap(const Shape& s, int h, int w, double sigma) {
  if (!(sigma > 0.0))
    throw ValidationError("rasterize_heatmap: sigma must be positive, got " + std::to_string(sigma));
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  Heatmap out = Heatmap::Zero(h, w);
  Eigen::VectorXd wy(h), wx(w);
  for (int i = 0; i < kLandmarkCount; ++i) {
    // separable Gaussian: exp(-(dx^2+dy^2)/(2s^2)) as an outer product
    for (int r = 0; r < h; ++r) {
      const double dy = r - s(i, 1);
      wy[r] = std::exp(-dy * dy * inv2s2);
    }
    for (int c = 0; c < w; ++c) {
      const double dx = c - s(i, 0);
      wx[c] = std::exp(-dx * dx * inv2s2);
    }
    out = out.cwiseMax(wy * wx.transpose());
  }
  return out;
}

}  // namespace emolign::geometry
