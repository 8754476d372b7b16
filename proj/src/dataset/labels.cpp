#include "emolign/dataset/labels.hpp"

#include <sstream>

namespace emolign::dataset {

const char* to_string(Emotion7 e) {
  switch (e) {
    case Emotion7::happy: return "happy";
    case Emotion7::sad: return "sad";
    case Emotion7::angry: return "angry";
    case Emotion7::surprised: return "surprised";
    case Emotion7::disgust: return "disgust";
    case Emotion7::fear: return "fear";
    case Emotion7::neutral: return "neutral";
  }
  throw ValidationError("invalid Emotion7 value");
}

const char* to_string(Emotion3 e) {
  switch (e) {
    case Emotion3::positive: return "positive";
    case Emotion3::negative: return "negative";
    case Emotion3::neutral: return "neutral";
  }
  throw ValidationError("invalid Emotion3 value");
}

Emotion7 emotion7_from_int(int v) {
  if (v < 0 || v >= kNumClasses7) {
    throw ValidationError("emotion label " + std::to_string(v) +
                          " out of range [0," + std::to_string(kNumClasses7) + ")");
  }
  return static_cast<Emotion7>(v);
}

LabelMap3 LabelMap3::defaults() {
  return parse("pos,neg,neg,pos,neg,neg,neu");
}

LabelMap3 LabelMap3::parse(const std::string& spec) {
  LabelMap3 m;
  std::stringstream ss(spec);
  std::string tok;
  std::size_t i = 0;
  while (std::getline(ss, tok, ',')) {
    if (i >= m.to3_.size()) {
      throw ValidationError("label map spec '" + spec + "' has more than 7 entries");
    }
    if (tok == "pos") {
      m.to3_[i] = Emotion3::positive;
    } else if (tok == "neg") {
      m.to3_[i] = Emotion3::negative;
    } else if (tok == "neu") {
      m.to3_[i] = Emotion3::neutral;
    } else {
      throw ValidationError("label map spec entry '" + tok +
                            "' is not one of pos|neg|neu");
    }
    ++i;
  }
  if (i != m.to3_.size()) {
    throw ValidationError("label map spec '" + spec + "' has " +
                          std::to_string(i) + " entries, expected 7");
  }
  return m;
}

std::string LabelMap3::describe() const {
  std::string out;
  for (std::size_t i = 0; i < to3_.size(); ++i) {
    if (i) out += ',';
    switch (to3_[i]) {
      case Emotion3::positive: out += "pos"; break;
      case Emotion3::negative: out += "neg"; break;
      case Emotion3::neutral: out += "neu"; break;
    }
  }
  return out;
}

Emotion3 remap_7_to_3(Emotion7 e) {
  static const LabelMap3 kDefault = LabelMap3::defaults();
  return kDefault.map(e);
}

}  // namespace emolign::dataset
