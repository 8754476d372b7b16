#pragma once

#include <string>
#include <vector>

#include "emolign/dataset/labels.hpp"
#include "emolign/dataset/pgm.hpp"
#include "emolign/geometry/image.hpp"
#include "emolign/geometry/shape.hpp"

namespace emolign::dataset {

inline constexpr int kImageSize = 64;

// One annotated face: raster, ground-truth landmarks in pixel coordinates
// (x right, y down, origin at the top-left pixel center) and emotion label.
struct Sample {
  std::string id;
  ImageU8 image;
  geometry::Shape shape;
  Emotion7 label = Emotion7::neutral;
};

// [0,255] -> [0,1] as double.
geometry::Image to_unit(const ImageU8& img);

// Dataset directory layout:
//   <root>/annotations.csv   header id,label,x0,y0,...,x67,y67
//   <root>/images/<id>.pgm
// Reads every row, pulls the referenced PGM and validates dimensions, label
// range and that coordinates lie in [0,64); errors carry file and line.
// Row order in the CSV is preserved.
std::vector<Sample> load_annotations(const std::string& root);

// Writes annotations.csv and one PGM per sample under root, creating the
// directories. Coordinates are written with six decimals.
void save_dataset(const std::string& root, const std::vector<Sample>& samples);

extern const char* const kAnnotationHeader;

}  // namespace emolign::dataset
