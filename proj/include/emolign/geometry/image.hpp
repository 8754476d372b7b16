#pragma once

#include <Eigen/Core>

#include "emolign/geometry/shape.hpp"

namespace emolign::geometry {

// Grayscale image, row r / column c, values in [0,1] for processing.
using Image = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Heatmap = Image;

// Bilinear sample at (x=column, y=row); samples outside the image read as 0.
double bilinear_sample(const Image& img, double x, double y);

// Inverse-mapping warp: out(p) = img(T^-1(p)) with bilinear interpolation.
Image warp_image(const Image& img, const SimilarityTransform& t, int out_h, int out_w);

// out(p) = max_i exp(-|p - s_i|^2 / (2 sigma^2)); pointwise max keeps the peak at 1.
Heatmap rasterize_heatmap(const Shape& s, int h, int w, double sigma);

}  // namespace emolign::geometry
