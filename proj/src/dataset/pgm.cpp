#include "emolign/dataset/pgm.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>

#include "emolign/common.hpp"

namespace emolign::dataset {

namespace {

// Reads one whitespace-delimited header token, skipping '#' comment lines.
std::string next_token(std::istream& in, const std::string& path) {
  std::string tok;
  for (;;) {
    int c = in.get();
    if (c == EOF) {
      throw ValidationError(path + ": truncated PGM header");
    }
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok += static_cast<char>(c);
  }
}

long parse_header_int(const std::string& tok, const std::string& path,
                      const char* what) {
  char* end = nullptr;
  long v = std::strtol(tok.c_str(), &end, 10);
  if (end == tok.c_str() || *end != '\0' || v <= 0) {
    throw ValidationError(path + ": bad PGM " + what + " '" + tok + "'");
  }
  return v;
}

}  // namespace

ImageU8 read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);

  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  if (m0 != 'P' || m1 != '5') {
    throw ValidationError(path + ": not a binary PGM (expected magic P5)");
  }

  long w = parse_header_int(next_token(in, path), path, "width");
  long h = parse_header_int(next_token(in, path), path, "height");
  long maxval = parse_header_int(next_token(in, path), path, "maxval");
  if (maxval != 255) {
    throw ValidationError(path + ": unsupported PGM maxval " +
                          std::to_string(maxval) + " (expected 255)");
  }
  // next_token consumed exactly one whitespace byte after maxval

  ImageU8 img(h, w);
  in.read(reinterpret_cast<char*>(img.data()),
          static_cast<std::streamsize>(img.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.size())) {
    throw ValidationError(path + ": truncated PGM pixel data (expected " +
                          std::to_string(img.size()) + " bytes, got " +
                          std::to_string(in.gcount()) + ")");
  }
  return img;
}

void write_pgm(const std::string& path, const ImageU8& img) {
  if (img.rows() <= 0 || img.cols() <= 0) {
    throw ValidationError("refusing to write empty PGM " + path);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeError("cannot open " + path + " for writing");
  out << "P5\n" << img.cols() << ' ' << img.rows() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data()),
            static_cast<std::streamsize>(img.size()));
  if (!out) throw RuntimeError("failed writing PGM data to " + path);
}

}  // namespace emolign::dataset
