#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "emolign/dataset/labels.hpp"
#include "emolign/dataset/pgm.hpp"
#include "emolign/dataset/sample.hpp"
#include "emolign/dataset/split.hpp"
#include "emolign/dataset/synth.hpp"

using namespace emolign;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / "emolign_test_dataset" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void spit(const fs::path& p, const std::string& content) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << content;
}

template <typename E, typename F>
std::string thrown(F&& f) {
  try {
    f();
  } catch (const E& e) {
    return e.what();
  }
  return {};
}

std::string row_of_zeros(const std::string& id, int label) {
  std::string row = id + "," + std::to_string(label);
  for (int i = 0; i < 136; ++i) row += ",1.0";
  return row;
}

}  // namespace

TEST_CASE("label enums round-trip and the default 3-way map") {
  CHECK(std::string(dataset::to_string(dataset::Emotion7::happy)) == "happy");
  CHECK(std::string(dataset::to_string(dataset::Emotion3::negative)) == "negative");
  CHECK(dataset::emotion7_from_int(6) == dataset::Emotion7::neutral);
  CHECK_THROWS_AS(dataset::emotion7_from_int(7), ValidationError);
  CHECK_THROWS_AS(dataset::emotion7_from_int(-1), ValidationError);

  // positive: happy, surprised; neutral: neutral; the rest negative
  using E7 = dataset::Emotion7;
  using E3 = dataset::Emotion3;
  const std::array<E3, 7> want = {E3::positive, E3::negative, E3::negative, E3::positive,
                                  E3::negative, E3::negative, E3::neutral};
  for (int i = 0; i < 7; ++i)
    CHECK(dataset::remap_7_to_3(static_cast<E7>(i)) == want[static_cast<std::size_t>(i)]);
}

TEST_CASE("label map parses, compares, and rejects malformed strings") {
  auto def = dataset::LabelMap3::defaults();
  auto parsed = dataset::LabelMap3::parse("pos,neg,neg,pos,neg,neg,neu");
  CHECK(def == parsed);
  CHECK(parsed.describe() == "pos,neg,neg,pos,neg,neg,neu");
  auto flipped = dataset::LabelMap3::parse("neg,neg,neg,pos,neg,neg,neu");
  CHECK(!(flipped == def));
  CHECK(flipped.map(dataset::Emotion7::happy) == dataset::Emotion3::negative);
  CHECK_THROWS_AS(dataset::LabelMap3::parse("pos,neg"), ValidationError);
  CHECK_THROWS_AS(dataset::LabelMap3::parse("pos,neg,neg,pos,neg,neg,up"), ValidationError);
}

TEST_CASE("pgm round trip is bit exact and rejects malformed files") {
  auto dir = scratch("pgm");
  dataset::ImageU8 img(3, 2);
  img << 0, 255, 7, 128, 42, 1;
  dataset::write_pgm((dir / "a.pgm").string(), img);
  dataset::ImageU8 back = dataset::read_pgm((dir / "a.pgm").string());
  CHECK(back.rows() == 3);
  CHECK(back.cols() == 2);
  CHECK((back == img));

  spit(dir / "bad_magic.pgm", "P2\n2 2\n255\nxxxx");
  CHECK_THROWS_AS(dataset::read_pgm((dir / "bad_magic.pgm").string()), ValidationError);
  spit(dir / "bad_maxval.pgm", "P5\n2 2\n999\nxxxx");
  CHECK_THROWS_AS(dataset::read_pgm((dir / "bad_maxval.pgm").string()), ValidationError);
  spit(dir / "short.pgm", "P5\n4 4\n255\nxy");
  const std::string msg =
      thrown<ValidationError>([&] { dataset::read_pgm((dir / "short.pgm").string()); });
  CHECK(msg.find("truncated") != std::string::npos);
  CHECK_THROWS_AS(dataset::read_pgm((dir / "missing.pgm").string()), ValidationError);
  // comments in the header are legal
  spit(dir / "comment.pgm", "P5\n# a comment\n2 1\n255\nab");
  dataset::ImageU8 c = dataset::read_pgm((dir / "comment.pgm").string());
  CHECK(c(0, 0) == 'a');
  CHECK(c(0, 1) == 'b');
}

TEST_CASE("generation is deterministic byte for byte") {
  auto d1 = scratch("gen1");
  auto d2 = scratch("gen2");
  dataset::GenParams p;
  p.count = 40;
  p.seed = 123;
  auto s1 = dataset::generate_synthetic(p, d1.string());
  auto s2 = dataset::generate_synthetic(p, d2.string());
  REQUIRE(s1.size() == 40);
  CHECK(slurp(d1 / "annotations.csv") == slurp(d2 / "annotations.csv"));
  for (const auto& s : s1)
    CHECK(slurp(d1 / "images" / (s.id + ".pgm")) == slurp(d2 / "images" / (s.id + ".pgm")));

  dataset::GenParams q = p;
  q.seed = 124;
  auto d3 = scratch("gen3");
  dataset::generate_synthetic(q, d3.string());
  CHECK(slurp(d1 / "annotations.csv") != slurp(d3 / "annotations.csv"));
}

TEST_CASE("generated samples stay in frame and reload identically") {
  auto dir = scratch("roundtrip");
  dataset::GenParams p;
  p.count = 60;
  p.seed = 9;
  auto written = dataset::generate_synthetic(p, dir.string());
  auto loaded = dataset::load_annotations(dir.string());
  REQUIRE(loaded.size() == written.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded[i].id == written[i].id);
    CHECK(loaded[i].label == written[i].label);
    CHECK((loaded[i].image == written[i].image));
    // coordinates survive the six-decimal round trip
    CHECK((loaded[i].shape - written[i].shape).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(loaded[i].shape.minCoeff() >= 0.0);
    CHECK(loaded[i].shape.maxCoeff() < 64.0);
  }
}

TEST_CASE("annotation validation points at the offending line") {
  auto dir = scratch("badcsv");
  const std::string header = dataset::kAnnotationHeader;

  spit(dir / "annotations.csv", header + "\n");
  CHECK(dataset::load_annotations(dir.string()).empty());

  // row "a" is fully valid, so it needs a real image on disk; the loader must
  // then stop at row "b" on line 3
  fs::create_directories(dir / "images");
  dataset::write_pgm((dir / "images" / "a.pgm").string(),
                     dataset::ImageU8::Zero(64, 64));
  spit(dir / "annotations.csv", header + "\n" + row_of_zeros("a", 0) + "\n" +
                                    row_of_zeros("b", 7) + "\n");
  std::string msg =
      thrown<ValidationError>([&] { dataset::load_annotations(dir.string()); });
  CHECK(msg.find(":3:") != std::string::npos);
  CHECK(msg.find("label") != std::string::npos);

  spit(dir / "annotations.csv", "id,label\n");
  CHECK_THROWS_AS(dataset::load_annotations(dir.string()), ValidationError);

  spit(dir / "annotations.csv", header + "\na,0,1.0\n");
  msg = thrown<ValidationError>([&] { dataset::load_annotations(dir.string()); });
  CHECK(msg.find(":2:") != std::string::npos);

  std::string row = row_of_zeros("a", 0);
  row.replace(row.rfind(",1.0"), 4, ",64.0");  // coordinate at the frame edge
  spit(dir / "annotations.csv", header + "\n" + row + "\n");
  msg = thrown<ValidationError>([&] { dataset::load_annotations(dir.string()); });
  CHECK(msg.find("outside") != std::string::npos);

  // valid row but missing image file
  spit(dir / "annotations.csv", header + "\n" + row_of_zeros("ghost", 0) + "\n");
  CHECK_THROWS_AS(dataset::load_annotations(dir.string()), ValidationError);

  CHECK_THROWS_AS(dataset::load_annotations((dir / "nowhere").string()), ValidationError);
}

TEST_CASE("save then load preserves sample content") {
  auto dir = scratch("save");
  std::vector<dataset::Sample> samples(3);
  std::mt19937_64 rng(2);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    samples[i].id = "s" + std::to_string(i);
    samples[i].label = static_cast<dataset::Emotion7>(i * 2);
    samples[i].image = dataset::render_face(dataset::face_template());
    geometry::Shape sh = dataset::face_template();
    sh.array() += 0.25 * static_cast<double>(i);
    samples[i].shape = sh;
  }
  dataset::save_dataset(dir.string(), samples);
  auto back = dataset::load_annotations(dir.string());
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].id == samples[i].id);
    CHECK(back[i].label == samples[i].label);
    CHECK((back[i].image == samples[i].image));
    CHECK((back[i].shape - samples[i].shape).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("rendering is a pure function of the landmarks") {
  const geometry::Shape base = dataset::face_template();
  dataset::ImageU8 a = dataset::render_face(base);
  dataset::ImageU8 b = dataset::render_face(base);
  CHECK((a == b));
  dataset::GenParams p;
  geometry::Shape happy = dataset::deform_for_emotion(base, dataset::Emotion7::happy, p);
  CHECK(!(dataset::render_face(happy) == a));
}

TEST_CASE("emotion deformations separate happy from sad geometrically") {
  auto dir = scratch("separate");
  dataset::GenParams p;
  p.count = 500;
  p.seed = 1;
  auto samples = dataset::generate_synthetic(p, dir.string());

  using Vec = Eigen::Matrix<double, 136, 1>;
  auto flat = [](const geometry::Shape& s) {
    Vec v;
    for (int i = 0; i < 68; ++i) {
      v[2 * i] = s(i, 0);
      v[2 * i + 1] = s(i, 1);
    }
    return v;
  };
  std::map<dataset::Emotion7, Vec> centroid;
  std::map<dataset::Emotion7, int> count;
  for (const auto& s : samples) {
    if (s.label != dataset::Emotion7::happy && s.label != dataset::Emotion7::sad) continue;
    auto [it, fresh] = centroid.try_emplace(s.label, Vec::Zero());
    it->second += flat(s.shape);
    ++count[s.label];
  }
  REQUIRE(count[dataset::Emotion7::happy] > 20);
  REQUIRE(count[dataset::Emotion7::sad] > 20);
  for (auto& [label, c] : centroid) c /= count[label];

  int correct = 0, total = 0;
  for (const auto& s : samples) {
    if (s.label != dataset::Emotion7::happy && s.label != dataset::Emotion7::sad) continue;
    const Vec v = flat(s.shape);
    const double dh = (v - centroid[dataset::Emotion7::happy]).norm();
    const double ds = (v - centroid[dataset::Emotion7::sad]).norm();
    const auto guess = dh < ds ? dataset::Emotion7::happy : dataset::Emotion7::sad;
    correct += guess == s.label;
    ++total;
  }
  CHECK(static_cast<double>(correct) / total > 0.95);
}

TEST_CASE("labels come out roughly balanced at scale") {
  auto dir = scratch("balance");
  dataset::GenParams p;
  p.count = 7000;
  p.seed = 0;
  auto samples = dataset::generate_synthetic(p, dir.string());
  std::array<int, 7> counts{};
  for (const auto& s : samples) ++counts[static_cast<std::size_t>(s.label)];
  for (int c : counts) {
    CHECK(c > 900);
    CHECK(c < 1100);
  }
}

TEST_CASE("gen params load from file and reject junk") {
  auto dir = scratch("genparams");
  spit(dir / "p.cfg", "seed=5\ncount=12\nmouth_curve=0.8\nrot_deg=3\n");
  auto p = dataset::GenParams::from_file((dir / "p.cfg").string());
  CHECK(p.seed == 5);
  CHECK(p.count == 12);
  CHECK(p.mouth_curve == doctest::Approx(0.8));
  CHECK(p.rot_deg == doctest::Approx(3.0));
  CHECK(p.scale_min == doctest::Approx(0.95));  // untouched default

  spit(dir / "junk.cfg", "seed=5\nbogus_key=1\n");
  const std::string msg = thrown<ValidationError>(
      [&] { dataset::GenParams::from_file((dir / "junk.cfg").string()); });
  CHECK(msg.find("bogus_key") != std::string::npos);

  dataset::GenParams bad;
  bad.count = 0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = dataset::GenParams{};
  bad.mouth_curve = 2.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = dataset::GenParams{};
  bad.scale_min = 1.2;
  bad.scale_max = 1.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = dataset::GenParams{};
  bad.rot_deg = 45.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("split respects fractions, stays disjoint, and is seed deterministic") {
  std::vector<dataset::Sample> samples(100);
  for (int i = 0; i < 100; ++i) samples[static_cast<std::size_t>(i)].id = std::to_string(i);

  auto r1 = dataset::split(samples, {0.7, 0.15, 0.15}, 42);
  auto r2 = dataset::split(samples, {0.7, 0.15, 0.15}, 42);
  CHECK(r1.train.size() == 70);
  CHECK(r1.val.size() == 15);
  CHECK(r1.test.size() == 15);

  std::map<std::string, int> seen;
  for (const auto& s : r1.train) ++seen[s.id];
  for (const auto& s : r1.val) ++seen[s.id];
  for (const auto& s : r1.test) ++seen[s.id];
  CHECK(seen.size() == 100);
  for (const auto& [id, n] : seen) CHECK(n == 1);

  auto ids = [](const std::vector<dataset::Sample>& v) {
    std::string out;
    for (const auto& s : v) out += s.id + ",";
    return out;
  };
  CHECK(ids(r1.train) == ids(r2.train));
  auto r3 = dataset::split(samples, {0.7, 0.15, 0.15}, 43);
  CHECK(ids(r1.train) != ids(r3.train));

  CHECK_THROWS_AS(dataset::split(samples, {0.5, 0.2, 0.2}, 0), ValidationError);
  CHECK_THROWS_AS(dataset::split(samples, {-0.1, 0.6, 0.5}, 0), ValidationError);
}
