#include "emolign/geometry/shape.hpp"

namespace emolign::geometry {

SimilarityTransform estimate_similarity(const Shape& src, const Shape& dst) {
  const Eigen::RowVector2d sc = src.colwise().mean();
  const Eigen::RowVector2d dc = dst.colwise().mean();
  const Shape s = src.rowwise() - sc;
  const Shape d = dst.rowwise() - dc;

  const double denom = s.squaredNorm();
  if (denom < 1e-12)
    throw ValidationError("estimate_similarity: degenerate source shape (zero variance)");

  const double a = (s.col(0).dot(d.col(0)) + s.col(1).dot(d.col(1))) / denom;
  const double b = (s.col(0).dot(d.col(1)) - s.col(1).dot(d.col(0))) / denom;

  SimilarityTransform t;
  t.a = a;
  t.b = b;
  t.tx = dc.x() - (a * sc.x() - b * sc.y());
  t.ty = dc.y() - (b * sc.x() + a * sc.y());
  return t;
}

Shape apply_transform(const SimilarityTransform& t, const Shape& s) {
  Shape out;
  out.col(0) = t.a * s.col(0) - t.b * s.col(1);
  out.col(1) = t.b * s.col(0) + t.a * s.col(1);
  out.col(0).array() += t.tx;
  out.col(1).array() += t.ty;
  return out;
}

SimilarityTransform invert_transform(const SimilarityTransform& t) {
  const double r2 = t.a * t.a + t.b * t.b;
  if (!(r2 > 0.0))
    throw ValidationError("invert_transform: non-invertible transform (a^2+b^2 = 0)");
  SimilarityTransform inv;
  inv.a = t.a / r2;
  inv.b = -t.b / r2;
  inv.tx = -(inv.a * t.tx - inv.b * t.ty);
  inv.ty = -(inv.b * t.tx + inv.a * t.ty);
  return inv;
}

SimilarityTransform compose(const SimilarityTransform& outer, const SimilarityTransform& inner) {
  SimilarityTransform t;
  t.a = outer.a * inner.a - outer.b * inner.b;
  t.b = outer.b * inner.a + outer.a * inner.b;
  const Eigen::Vector2d tr = outer(Eigen::Vector2d(inner.tx, inner.ty));
  t.tx = tr.x();
  t.ty = tr.y();
  return t;
}

double interpupil_distance(const Shape& s) {
  const Eigen::RowVector2d right = s.middleRows<6>(36).colwise().mean();
  const Eigen::RowVector2d left = s.middleRows<6>(42).colwise().mean();
  const double d = (left - right).norm();
  if (d < 1e-6)
    throw ValidationError("interpupil_distance: degenerate normalizer (" + std::to_string(d) + ")");
  return d;
}

double normalized_landmark_error(const Shape& pred, const Shape& gt) {
  const double d = interpupil_distance(gt);
  return (pred - gt).rowwise().norm().mean() / d;
}

bool shape_finite(const Shape& s) { return s.allFinite(); }

}  // namespace emolign::geometry
