#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>

namespace emolign::dataset {

// 8-bit grayscale raster, row-major, (row, col) indexing.
using ImageU8 =
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Binary PGM (P5, maxval 255). Reader accepts whitespace and '#' comments in
// the header, rejects anything else; writer emits a fixed minimal header.
ImageU8 read_pgm(const std::string& path);
void write_pgm(const std::string& path, const ImageU8& img);

}  // namespace emolign::dataset
