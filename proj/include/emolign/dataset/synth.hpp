#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "emolign/dataset/sample.hpp"
#include "emolign/geometry/image.hpp"

namespace emolign::dataset {

// Synthetic-face generator settings. Deformation magnitudes are
// dimensionless in [0,1] and scale the built-in per-emotion displacements;
// jitter and pose ranges are in pixels/degrees. Loadable from a key=value
// file, unknown keys rejected.
struct GenParams {
  std::uint64_t seed = 0;
  long count = 1000;

  double mouth_curve = 1.0;  // happy/sad corner movement, disgust lip raise
  double brow = 1.0;         // raise/furrow strength
  double eye_open = 1.0;     // lid widening strength
  double mouth_open = 1.0;   // jaw-drop strength

  double jitter_sigma = 0.5;  // per-point Gaussian noise, pixels
  double rot_deg = 10.0;      // pose rotation, uniform in +-rot_deg
  double scale_min = 0.95;    // pose scale, uniform in [scale_min, scale_max]
  double scale_max = 1.06;
  double trans_px = 1.5;      // pose translation, uniform in +-trans_px per axis

  static GenParams from_file(const std::string& path);
  void validate() const;
};

// Canonical 68-point template, iBUG ordering, in the 64x64 frame:
// 0-16 jaw, 17-21/22-26 brows, 27-30 nose bridge, 31-35 nose base,
// 36-41/42-47 eyes, 48-59 outer lip, 60-67 inner lip.
geometry::Shape face_template();

// Applies the label's deformation to a copy of the template.
geometry::Shape deform_for_emotion(const geometry::Shape& base, Emotion7 label,
                                   const GenParams& p);

// Rasterizes a face as a pure function of the landmarks: filled head
// ellipse fitted to the jaw, anti-aliased polylines for brows, eyes, nose
// and both lip rings, filled eye whites and mouth interior.
ImageU8 render_face(const geometry::Shape& shape);

// Draws count samples (uniform labels, deformation, Gaussian jitter, random
// similarity pose with bounded in-frame retries), writes the dataset under
// out_dir and returns the samples in file order.
std::vector<Sample> generate_synthetic(const GenParams& params,
                                       const std::string& out_dir);

}  // namespace emolign::dataset
