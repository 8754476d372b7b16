#pragma once

#include <array>
#include <string>

#include "emolign/common.hpp"

namespace emolign::dataset {

inline constexpr int kNumClasses7 = 7;
inline constexpr int kNumClasses3 = 3;

// Seven-grade emotion scale.
enum class Emotion7 : int {
  happy = 0,
  sad = 1,
  angry = 2,
  surprised = 3,
  disgust = 4,
  fear = 5,
  neutral = 6,
};

// Three-grade emotion scale.
enum class Emotion3 : int {
  positive = 0,
  negative = 1,
  neutral = 2,
};

const char* to_string(Emotion7 e);
const char* to_string(Emotion3 e);
Emotion7 emotion7_from_int(int v);  // rejects values outside [0,7)

// Configurable 7->3 coarsening. The default sends happy and surprised to
// positive, sad/angry/disgust/fear to negative and neutral to neutral; the
// convention can be overridden with a spec string of 7 comma-separated
// tokens (pos|neg|neu) in class order, e.g. "pos,neg,neg,pos,neg,neg,neu".
class LabelMap3 {
 public:
  static LabelMap3 defaults();
  static LabelMap3 parse(const std::string& spec);

  Emotion3 map(Emotion7 e) const { return to3_[static_cast<std::size_t>(e)]; }
  std::string describe() const;  // canonical spec string, echoed in reports
  bool operator==(const LabelMap3& o) const { return to3_ == o.to3_; }

 private:
  std::array<Emotion3, kNumClasses7> to3_{};
};

// Default-convention coarsening.
Emotion3 remap_7_to_3(Emotion7 e);

}  // namespace emolign::dataset
