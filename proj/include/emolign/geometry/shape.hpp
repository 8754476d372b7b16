#pragma once

#include <Eigen/Core>

#include "emolign/common.hpp"

namespace emolign::geometry {

// Standard 68-point markup: 0-16 jaw, 17-26 brows, 27-35 nose,
// 36-41 right eye, 42-47 left eye, 48-67 mouth.
inline constexpr int kLandmarkCount = 68;

// Row i = (x, y) in pixels; the coordinate frame (image or canonical) is
// named by context.
using Shape = Eigen::Matrix<double, kLandmarkCount, 2>;

// p -> (a*x - b*y + tx, b*x + a*y + ty): uniform scale + rotation + translation.
struct SimilarityTransform {
  double a = 1.0;
  double b = 0.0;
  double tx = 0.0;
  double ty = 0.0;

  Eigen::Matrix2d linear() const {
    Eigen::Matrix2d m;
    m << a, -b, b, a;
    return m;
  }
  Eigen::Vector2d translation() const { return {tx, ty}; }
  Eigen::Vector2d operator()(const Eigen::Vector2d& p) const {
    return {a * p.x() - b * p.y() + tx, b * p.x() + a * p.y() + ty};
  }
  static SimilarityTransform identity() { return {}; }
};

// Least-squares similarity transform mapping src onto dst (closed-form normal
// equations on the centered shapes). Rejects degenerate src.
SimilarityTransform estimate_similarity(const Shape& src, const Shape& dst);

Shape apply_transform(const SimilarityTransform& t, const Shape& s);

SimilarityTransform invert_transform(const SimilarityTransform& t);

// outer(inner(p))
SimilarityTransform compose(const SimilarityTransform& outer, const SimilarityTransform& inner);

// Euclidean distance between the centroids of the eye landmark groups
// (36-41 and 42-47). Rejects distances under 1e-6.
double interpupil_distance(const Shape& s);

// Mean per-landmark Euclidean distance divided by the ground truth's
// inter-pupil distance.
double normalized_landmark_error(const Shape& pred, const Shape& gt);

bool shape_finite(const Shape& s);

}  // namespace emolign::geometry
