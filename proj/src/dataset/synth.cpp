#include "emolign/dataset/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "emolign/common.hpp"
#include "emolign/config_file.hpp"
#include "emolign/geometry/shape.hpp"

namespace emolign::dataset {

using geometry::Shape;
using geometry::SimilarityTransform;

GenParams GenParams::from_file(const std::string& path) {
  KeyValues kv = KeyValues::parse_file(path);
  GenParams p;
  p.seed = kv.get_u64("seed", p.seed);
  p.count = kv.get_int("count", p.count);
  p.mouth_curve = kv.get_double("mouth_curve", p.mouth_curve);
  p.brow = kv.get_double("brow", p.brow);
  p.eye_open = kv.get_double("eye_open", p.eye_open);
  p.mouth_open = kv.get_double("mouth_open", p.mouth_open);
  p.jitter_sigma = kv.get_double("jitter_sigma", p.jitter_sigma);
  p.rot_deg = kv.get_double("rot_deg", p.rot_deg);
  p.scale_min = kv.get_double("scale_min", p.scale_min);
  p.scale_max = kv.get_double("scale_max", p.scale_max);
  p.trans_px = kv.get_double("trans_px", p.trans_px);
  kv.reject_unknown();
  p.validate();
  return p;
}

void GenParams::validate() const {
  if (count <= 0) throw ValidationError("gen: count must be positive");
  auto mag = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ValidationError(std::string("gen: ") + name + " must be in [0,1]");
    }
  };
  mag(mouth_curve, "mouth_curve");
  mag(brow, "brow");
  mag(eye_open, "eye_open");
  mag(mouth_open, "mouth_open");
  if (!(jitter_sigma >= 0.0 && jitter_sigma <= 2.0)) {
    throw ValidationError("gen: jitter_sigma must be in [0,2]");
  }
  if (!(rot_deg >= 0.0 && rot_deg <= 30.0)) {
    throw ValidationError("gen: rot_deg must be in [0,30]");
  }
  if (!(scale_min >= 0.8 && scale_min <= scale_max && scale_max <= 1.25)) {
    throw ValidationError("gen: scale range must satisfy 0.8 <= min <= max <= 1.25");
  }
  if (!(trans_px >= 0.0 && trans_px <= 8.0)) {
    throw ValidationError("gen: trans_px must be in [0,8]");
  }
}

Shape face_template() {
  Shape s;
  // Jaw: semicircle of radius 20 around (32,34), chin at (32,54).
  for (int i = 0; i <= 16; ++i) {
    double a = M_PI * i / 16.0;
    s(i, 0) = 32.0 - 20.0 * std::cos(a);
    s(i, 1) = 34.0 + 20.0 * std::sin(a);
  }
  auto set = [&s](int i, double x, double y) {
    s(i, 0) = x;
    s(i, 1) = y;
  };
  // Brows.
  set(17, 16.0, 22.0);
  set(18, 19.0, 20.8);
  set(19, 22.0, 20.4);
  set(20, 25.0, 20.8);
  set(21, 28.0, 22.0);
  set(22, 36.0, 22.0);
  set(23, 39.0, 20.8);
  set(24, 42.0, 20.4);
  set(25, 45.0, 20.8);
  set(26, 48.0, 22.0);
  // Nose bridge and base.
  set(27, 32.0, 26.0);
  set(28, 32.0, 30.0);
  set(29, 32.0, 34.0);
  set(30, 32.0, 38.0);
  set(31, 28.0, 40.0);
  set(32, 30.0, 41.0);
  set(33, 32.0, 41.5);
  set(34, 34.0, 41.0);
  set(35, 36.0, 40.0);
  // Eyes, centers (22,26) and (42,26).
  set(36, 18.0, 26.0);
  set(37, 20.5, 24.0);
  set(38, 23.5, 24.0);
  set(39, 26.0, 26.0);
  set(40, 23.5, 28.0);
  set(41, 20.5, 28.0);
  set(42, 38.0, 26.0);
  set(43, 40.5, 24.0);
  set(44, 43.5, 24.0);
  set(45, 46.0, 26.0);
  set(46, 43.5, 28.0);
  set(47, 40.5, 28.0);
  // Outer lip ring.
  set(48, 25.0, 48.0);
  set(49, 27.5, 46.5);
  set(50, 30.0, 45.8);
  set(51, 32.0, 45.5);
  set(52, 34.0, 45.8);
  set(53, 36.5, 46.5);
  set(54, 39.0, 48.0);
  set(55, 36.5, 49.8);
  set(56, 34.0, 50.6);
  set(57, 32.0, 50.8);
  set(58, 30.0, 50.6);
  set(59, 27.5, 49.8);
  // Inner lip ring.
  set(60, 27.0, 48.0);
  set(61, 30.0, 47.2);
  set(62, 32.0, 47.0);
  set(63, 34.0, 47.2);
  set(64, 37.0, 48.0);
  set(65, 34.0, 48.8);
  set(66, 32.0, 49.0);
  set(67, 30.0, 48.8);
  return s;
}

namespace {

void open_mouth(Shape& s, double o) {
  if (o == 0.0) return;
  s(48, 1) += 1.0 * o;
  s(54, 1) += 1.0 * o;
  for (int i = 49; i <= 53; ++i) s(i, 1) -= 0.6 * o;
  s(55, 1) += 2.4 * o;
  s(56, 1) += 3.4 * o;
  s(57, 1) += 3.8 * o;
  s(58, 1) += 3.4 * o;
  s(59, 1) += 2.4 * o;
  s(60, 1) += 0.9 * o;
  s(64, 1) += 0.9 * o;
  for (int i = 61; i <= 63; ++i) s(i, 1) -= 0.8 * o;
  s(65, 1) += 2.6 * o;
  s(66, 1) += 3.0 * o;
  s(67, 1) += 2.6 * o;
}

void widen_eyes(Shape& s, double e) {
  if (e == 0.0) return;
  for (int i : {37, 38, 43, 44}) s(i, 1) -= 1.2 * e;
  for (int i : {40, 41, 46, 47}) s(i, 1) += 1.2 * e;
}

// direction +1 moves corners up (smile), -1 down (frown)
void curve_mouth(Shape& s, double m, double direction) {
  double d = direction * m;
  s(48, 1) -= 3.0 * d;
  s(54, 1) -= 3.0 * d;
  for (int i : {49, 53, 55, 59}) s(i, 1) -= 1.8 * d;
  s(60, 1) -= 2.4 * d;
  s(64, 1) -= 2.4 * d;
  for (int i : {61, 63, 65, 67}) s(i, 1) -= 1.2 * d;
  // smiles widen slightly, frowns narrow
  s(48, 0) -= 0.8 * d;
  s(54, 0) += 0.8 * d;
}

}  // namespace

Shape deform_for_emotion(const Shape& base, Emotion7 label, const GenParams& p) {
  Shape s = base;
  const double m = p.mouth_curve, b = p.brow, e = p.eye_open, o = p.mouth_open;
  // weights from outer to inner brow end; the inner end moves most
  static const double kIn[5] = {0.4, 0.7, 1.0, 1.3, 1.6};
  static const double kDown[5] = {0.4, 0.8, 1.2, 1.6, 2.0};

  switch (label) {
    case Emotion7::happy:
      curve_mouth(s, m, +1.0);
      break;
    case Emotion7::sad:
      curve_mouth(s, m, -1.0);
      break;
    case Emotion7::angry:
      for (int k = 0; k < 5; ++k) {
        s(17 + k, 0) += kIn[k] * b;
        s(17 + k, 1) += kDown[k] * b;
        s(26 - k, 0) -= kIn[k] * b;
        s(26 - k, 1) += kDown[k] * b;
      }
      break;
    case Emotion7::surprised:
      for (int i = 17; i <= 26; ++i) s(i, 1) -= 3.0 * b;
      widen_eyes(s, e);
      open_mouth(s, o);
      break;
    case Emotion7::disgust:
      s(30, 1) -= 0.6 * m;
      for (int i = 31; i <= 35; ++i) s(i, 1) -= 1.2 * m;
      for (int i = 49; i <= 53; ++i) s(i, 1) -= 1.5 * m;
      for (int i = 61; i <= 63; ++i) s(i, 1) -= 1.2 * m;
      for (int i = 17; i <= 26; ++i) s(i, 1) += 1.5 * b;
      break;
    case Emotion7::fear:
      for (int k = 0; k < 5; ++k) {
        s(17 + k, 1) -= 2.2 * b;
        s(26 - k, 1) -= 2.2 * b;
        s(17 + k, 0) += 0.5 * kIn[k] * b;
        s(26 - k, 0) -= 0.5 * kIn[k] * b;
      }
      widen_eyes(s, e);
      open_mouth(s, 0.45 * o);
      break;
    case Emotion7::neutral:
      break;
  }
  return s;
}

namespace {

using geometry::Image;
using Vec2 = Eigen::Vector2d;

void blend(Image& img, Eigen::Index r, Eigen::Index c, double alpha, double v) {
  if (alpha <= 0.0) return;
  img(r, c) += alpha * (v - img(r, c));
}

double dist_to_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  Vec2 ab = b - a;
  double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + t * ab)).norm();
}

void draw_segment(Image& img, const Vec2& a, const Vec2& b, double half_width,
                  double v) {
  const double pad = half_width + 1.0;
  Eigen::Index c0 = static_cast<Eigen::Index>(std::floor(std::min(a.x(), b.x()) - pad));
  Eigen::Index c1 = static_cast<Eigen::Index>(std::ceil(std::max(a.x(), b.x()) + pad));
  Eigen::Index r0 = static_cast<Eigen::Index>(std::floor(std::min(a.y(), b.y()) - pad));
  Eigen::Index r1 = static_cast<Eigen::Index>(std::ceil(std::max(a.y(), b.y()) + pad));
  c0 = std::max<Eigen::Index>(c0, 0);
  r0 = std::max<Eigen::Index>(r0, 0);
  c1 = std::min<Eigen::Index>(c1, img.cols() - 1);
  r1 = std::min<Eigen::Index>(r1, img.rows() - 1);
  for (Eigen::Index r = r0; r <= r1; ++r) {
    for (Eigen::Index c = c0; c <= c1; ++c) {
      double d = dist_to_segment(Vec2(static_cast<double>(c), static_cast<double>(r)), a, b);
      blend(img, r, c, std::clamp(half_width + 0.5 - d, 0.0, 1.0), v);
    }
  }
}

void draw_polyline(Image& img, const Shape& s, int first, int last, bool closed,
                   double half_width, double v) {
  for (int i = first; i < last; ++i) {
    draw_segment(img, s.row(i), s.row(i + 1), half_width, v);
  }
  if (closed) draw_segment(img, s.row(last), s.row(first), half_width, v);
}

void fill_polygon(Image& img, const Shape& s, int first, int last, double v) {
  const int n = last - first + 1;
  double xmin = 1e18, xmax = -1e18, ymin = 1e18, ymax = -1e18;
  for (int i = first; i <= last; ++i) {
    xmin = std::min(xmin, s(i, 0));
    xmax = std::max(xmax, s(i, 0));
    ymin = std::min(ymin, s(i, 1));
    ymax = std::max(ymax, s(i, 1));
  }
  Eigen::Index c0 = std::max<Eigen::Index>(static_cast<Eigen::Index>(std::floor(xmin - 1.0)), 0);
  Eigen::Index c1 = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::ceil(xmax + 1.0)), img.cols() - 1);
  Eigen::Index r0 = std::max<Eigen::Index>(static_cast<Eigen::Index>(std::floor(ymin - 1.0)), 0);
  Eigen::Index r1 = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::ceil(ymax + 1.0)), img.rows() - 1);

  for (Eigen::Index r = r0; r <= r1; ++r) {
    for (Eigen::Index c = c0; c <= c1; ++c) {
      Vec2 p(static_cast<double>(c), static_cast<double>(r));
      bool inside = false;
      double dmin = 1e18;
      for (int i = 0; i < n; ++i) {
        Vec2 a = s.row(first + i);
        Vec2 b = s.row(first + (i + 1) % n);
        if ((a.y() > p.y()) != (b.y() > p.y())) {
          double xi = a.x() + (p.y() - a.y()) / (b.y() - a.y()) * (b.x() - a.x());
          if (p.x() < xi) inside = !inside;
        }
        dmin = std::min(dmin, dist_to_segment(p, a, b));
      }
      double alpha = inside ? std::min(1.0, 0.5 + dmin) : std::max(0.0, 0.5 - dmin);
      blend(img, r, c, alpha, v);
    }
  }
}

void fill_head(Image& img, const Shape& s, double v) {
  Vec2 left = s.row(0), right = s.row(16), chin = s.row(8);
  Vec2 c = 0.5 * (left + right);
  Vec2 u = right - left;
  double a = 0.5 * u.norm();
  if (a < 1e-9) return;
  u /= 2.0 * a;
  Vec2 w(-u.y(), u.x());
  if (w.dot(chin - c) < 0.0) w = -w;
  double b = w.dot(chin - c);
  if (b < 1e-9) return;
  double b_up = 1.2 * b;  // forehead extends the ellipse upward

  double reach = std::max(a, std::max(b, b_up)) + 2.0;
  Eigen::Index c0 = std::max<Eigen::Index>(static_cast<Eigen::Index>(std::floor(c.x() - reach)), 0);
  Eigen::Index c1 = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::ceil(c.x() + reach)), img.cols() - 1);
  Eigen::Index r0 = std::max<Eigen::Index>(static_cast<Eigen::Index>(std::floor(c.y() - reach)), 0);
  Eigen::Index r1 = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::ceil(c.y() + reach)), img.rows() - 1);

  for (Eigen::Index r = r0; r <= r1; ++r) {
    for (Eigen::Index cc = c0; cc <= c1; ++cc) {
      Vec2 p(static_cast<double>(cc), static_cast<double>(r));
      double xi = u.dot(p - c);
      double eta = w.dot(p - c);
      double bb = eta >= 0.0 ? b : b_up;
      double f = std::sqrt((xi / a) * (xi / a) + (eta / bb) * (eta / bb));
      double d = (f - 1.0) * std::min(a, bb);
      blend(img, r, cc, std::clamp(0.5 - d, 0.0, 1.0), v);
    }
  }
}

}  // namespace

ImageU8 render_face(const Shape& shape) {
  if (!geometry::shape_finite(shape)) {
    throw ValidationError("render_face: non-finite landmark");
  }
  Image img = Image::Constant(kImageSize, kImageSize, 0.25);

  fill_head(img, shape, 0.80);

  draw_polyline(img, shape, 17, 21, false, 0.7, 0.15);  // brows
  draw_polyline(img, shape, 22, 26, false, 0.7, 0.15);
  draw_polyline(img, shape, 27, 30, false, 0.5, 0.45);  // nose bridge
  draw_polyline(img, shape, 31, 35, false, 0.5, 0.35);  // nose base

  fill_polygon(img, shape, 36, 41, 0.97);  // eye whites
  fill_polygon(img, shape, 42, 47, 0.97);
  draw_polyline(img, shape, 36, 41, true, 0.45, 0.10);  // eye outlines
  draw_polyline(img, shape, 42, 47, true, 0.45, 0.10);

  fill_polygon(img, shape, 60, 67, 0.12);               // mouth interior
  draw_polyline(img, shape, 48, 59, true, 0.55, 0.20);  // lip rings
  draw_polyline(img, shape, 60, 67, true, 0.40, 0.20);

  ImageU8 out(kImageSize, kImageSize);
  for (Eigen::Index r = 0; r < img.rows(); ++r) {
    for (Eigen::Index c = 0; c < img.cols(); ++c) {
      double v = std::clamp(img(r, c), 0.0, 1.0);
      out(r, c) = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
  }
  return out;
}

namespace {

bool in_frame(const Shape& s) {
  return (s.array() >= 0.0).all() &&
         (s.array() < static_cast<double>(kImageSize)).all();
}

SimilarityTransform draw_pose(std::mt19937_64& rng, const GenParams& p,
                              double shrink) {
  std::uniform_real_distribution<double> rot(-p.rot_deg, p.rot_deg);
  std::uniform_real_distribution<double> sc(p.scale_min, p.scale_max);
  std::uniform_real_distribution<double> tr(-p.trans_px, p.trans_px);
  double theta = rot(rng) * shrink * M_PI / 180.0;
  double s = 1.0 + (sc(rng) - 1.0) * shrink;
  double tx = tr(rng) * shrink;
  double ty = tr(rng) * shrink;
  // rotate+scale about the frame center, then translate
  const double cx = kImageSize / 2.0, cy = kImageSize / 2.0;
  SimilarityTransform t;
  t.a = s * std::cos(theta);
  t.b = s * std::sin(theta);
  Eigen::Vector2d c(cx, cy);
  Eigen::Vector2d shift = c - t.linear() * c;
  t.tx = shift.x() + tx;
  t.ty = shift.y() + ty;
  return t;
}

}  // namespace

std::vector<Sample> generate_synthetic(const GenParams& params,
                                       const std::string& out_dir) {
  params.validate();
  std::mt19937_64 rng(params.seed);
  std::uniform_int_distribution<int> label_draw(0, kNumClasses7 - 1);
  const Shape base = face_template();

  std::vector<Sample> samples;
  samples.reserve(static_cast<std::size_t>(params.count));
  char idbuf[32];

  for (long i = 0; i < params.count; ++i) {
    Emotion7 label = static_cast<Emotion7>(label_draw(rng));
    Shape deformed = deform_for_emotion(base, label, params);
    if (params.jitter_sigma > 0.0) {
      std::normal_distribution<double> gauss(0.0, params.jitter_sigma);
      for (int k = 0; k < geometry::kLandmarkCount; ++k) {
        deformed(k, 0) += gauss(rng);
        deformed(k, 1) += gauss(rng);
      }
    }

    Shape posed;
    bool ok = false;
    double shrink = 1.0;
    for (int attempt = 0; attempt < 8; ++attempt) {
      posed = geometry::apply_transform(draw_pose(rng, params, shrink), deformed);
      if (in_frame(posed)) {
        ok = true;
        break;
      }
      shrink *= 0.5;
    }
    if (!ok) {
      throw RuntimeError("gen: sample " + std::to_string(i) +
                         " could not be posed in frame after 8 retries");
    }

    Sample s;
    std::snprintf(idbuf, sizeof(idbuf), "%06ld", i);
    s.id = idbuf;
    s.label = label;
    s.shape = posed;
    s.image = render_face(posed);
    samples.push_back(std::move(s));
  }

  save_dataset(out_dir, samples);
  return samples;
}

}  // namespace emolign::dataset
