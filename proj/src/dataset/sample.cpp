#include "emolign/dataset/sample.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "emolign/common.hpp"

namespace emolign::dataset {

namespace fs = std::filesystem;

const char* const kAnnotationHeader =
    "id,label,x0,y0,x1,y1,x2,y2,x3,y3,x4,y4,x5,y5,x6,y6,x7,y7,x8,y8,x9,y9,"
    "x10,y10,x11,y11,x12,y12,x13,y13,x14,y14,x15,y15,x16,y16,x17,y17,x18,y18,"
    "x19,y19,x20,y20,x21,y21,x22,y22,x23,y23,x24,y24,x25,y25,x26,y26,x27,y27,"
    "x28,y28,x29,y29,x30,y30,x31,y31,x32,y32,x33,y33,x34,y34,x35,y35,x36,y36,"
    "x37,y37,x38,y38,x39,y39,x40,y40,x41,y41,x42,y42,x43,y43,x44,y44,x45,y45,"
    "x46,y46,x47,y47,x48,y48,x49,y49,x50,y50,x51,y51,x52,y52,x53,y53,x54,y54,"
    "x55,y55,x56,y56,x57,y57,x58,y58,x59,y59,x60,y60,x61,y61,x62,y62,x63,y63,"
    "x64,y64,x65,y65,x66,y66,x67,y67";

geometry::Image to_unit(const ImageU8& img) {
  return img.cast<double>() / 255.0;
}

namespace {

[[noreturn]] void row_error(const std::string& file, long line,
                            const std::string& msg) {
  throw ValidationError(file + ":" + std::to_string(line) + ": " + msg);
}

double parse_coord(const std::string& tok, const std::string& file, long line,
                   long col) {
  char* end = nullptr;
  double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0') {
    row_error(file, line, "bad coordinate '" + tok + "' in column " +
                              std::to_string(col));
  }
  if (!(v >= 0.0 && v < static_cast<double>(kImageSize))) {
    row_error(file, line, "coordinate " + tok + " outside [0," +
                              std::to_string(kImageSize) + ")");
  }
  return v;
}

}  // namespace

std::vector<Sample> load_annotations(const std::string& root) {
  const std::string csv_path = (fs::path(root) / "annotations.csv").string();
  std::ifstream in(csv_path);
  if (!in) throw ValidationError("cannot open " + csv_path);

  std::string line;
  if (!std::getline(in, line)) {
    throw ValidationError(csv_path + ": missing header row");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kAnnotationHeader) {
    throw ValidationError(csv_path + ":1: unexpected header row");
  }

  std::vector<Sample> samples;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) fields.push_back(tok);
    const std::size_t expected = 2 + 2 * geometry::kLandmarkCount;
    if (fields.size() != expected) {
      row_error(csv_path, line_no,
                "expected " + std::to_string(expected) + " fields, got " +
                    std::to_string(fields.size()));
    }

    Sample s;
    s.id = fields[0];
    if (s.id.empty()) row_error(csv_path, line_no, "empty sample id");

    char* end = nullptr;
    long lbl = std::strtol(fields[1].c_str(), &end, 10);
    if (end == fields[1].c_str() || *end != '\0') {
      row_error(csv_path, line_no, "bad label '" + fields[1] + "'");
    }
    if (lbl < 0 || lbl >= kNumClasses7) {
      row_error(csv_path, line_no,
                "label " + std::to_string(lbl) + " out of range [0,7)");
    }
    s.label = static_cast<Emotion7>(lbl);

    for (int i = 0; i < geometry::kLandmarkCount; ++i) {
      s.shape(i, 0) = parse_coord(fields[2 + 2 * i], csv_path, line_no, 2 + 2 * i);
      s.shape(i, 1) = parse_coord(fields[3 + 2 * i], csv_path, line_no, 3 + 2 * i);
    }

    const std::string img_path =
        (fs::path(root) / "images" / (s.id + ".pgm")).string();
    try {
      s.image = read_pgm(img_path);
    } catch (const ValidationError& e) {
      row_error(csv_path, line_no, e.what());
    }
    if (s.image.rows() != kImageSize || s.image.cols() != kImageSize) {
      row_error(csv_path, line_no,
                img_path + ": expected " + std::to_string(kImageSize) + "x" +
                    std::to_string(kImageSize) + " image, got " +
                    std::to_string(s.image.cols()) + "x" +
                    std::to_string(s.image.rows()));
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

void save_dataset(const std::string& root, const std::vector<Sample>& samples) {
  const fs::path rootp(root);
  fs::create_directories(rootp / "images");

  std::ofstream csv(rootp / "annotations.csv", std::ios::trunc);
  if (!csv) throw RuntimeError("cannot open " + (rootp / "annotations.csv").string());
  csv << kAnnotationHeader << '\n';

  char buf[32];
  for (const auto& s : samples) {
    if (s.id.empty()) throw ValidationError("sample with empty id");
    csv << s.id << ',' << static_cast<int>(s.label);
    for (int i = 0; i < geometry::kLandmarkCount; ++i) {
      std::snprintf(buf, sizeof(buf), "%.6f", s.shape(i, 0));
      csv << ',' << buf;
      std::snprintf(buf, sizeof(buf), "%.6f", s.shape(i, 1));
      csv << ',' << buf;
    }
    csv << '\n';
    write_pgm((rootp / "images" / (s.id + ".pgm")).string(), s.image);
  }
  if (!csv) throw RuntimeError("failed writing annotations under " + root);
}

}  // namespace emolign::dataset
