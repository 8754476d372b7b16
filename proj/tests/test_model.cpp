#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "emolign/dataset/synth.hpp"
#include "emolign/model/config.hpp"
#include "emolign/model/network.hpp"
#include "emolign/model/params.hpp"
#include "emolign/model/shape_ops.hpp"
#include "emolign/numgrad/ops.hpp"

using namespace emolign;
using geometry::Shape;
using numgrad::Array;
using numgrad::Tensor;

namespace {

model::ModelConfig small_config() {
  model::ModelConfig c;
  c.conv1_channels = 3;
  c.conv2_channels = 4;
  c.fc_width = 12;
  return c;
}

model::ModelParams small_params(std::uint64_t seed = 1) {
  std::vector<Shape> shapes{dataset::face_template()};
  return model::init_params(small_config(), seed, shapes);
}

std::vector<geometry::Image> noise_images(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<geometry::Image> out;
  for (int i = 0; i < n; ++i) {
    geometry::Image img(64, 64);
    for (int r = 0; r < 64; ++r)
      for (int c = 0; c < 64; ++c) img(r, c) = u(rng);
    out.push_back(img);
  }
  return out;
}

// interpupil distance exactly 20: eyes collapsed onto their centers
Shape exact_gt() {
  Shape s = dataset::face_template();
  for (int i = 36; i < 42; ++i) {
    s(i, 0) = 22.0;
    s(i, 1) = 26.0;
  }
  for (int i = 42; i < 48; ++i) {
    s(i, 0) = 42.0;
    s(i, 1) = 26.0;
  }
  return s;
}

}  // namespace

TEST_CASE("config invariants") {
  model::ModelConfig c;
  CHECK(c.alpha == 0.4);
  CHECK(c.beta == 0.6);
  c.validate();
  CHECK(c.landmark_dim() == 136);
  CHECK(c.trunk_dim() == 16 * 16 * 16);

  c.n_stages = 3;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = model::ModelConfig{};
  c.alpha = -0.1;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = model::ModelConfig{};
  c.alpha = 0.0;
  c.beta = 0.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = model::ModelConfig{};
  c.heatmap_sigma = 0.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("tensor layout names, shapes, and the stage-2 input channels") {
  auto layout = model::tensor_layout(small_config());
  REQUIRE(layout.size() == 18);
  CHECK(layout[0].first == "stage1/conv1_w");
  CHECK(layout[0].second == std::vector<int>{3, 1, 3, 3});
  CHECK(layout[8].first == "stage2/conv1_w");
  CHECK(layout[8].second == std::vector<int>{3, 2, 3, 3});  // warped + heatmap
  CHECK(layout[16].first == "emotion/w");
  CHECK(layout[16].second == std::vector<int>{12, 7});
  CHECK(layout[17].first == "emotion/b");
  // delta head emits flattened landmarks
  CHECK(layout[6].first == "stage1/delta_w");
  CHECK(layout[6].second == std::vector<int>{12, 136});
}

TEST_CASE("init is deterministic, He-bounded, with zero biases") {
  model::ModelParams a = small_params(3), b = small_params(3), c = small_params(4);
  bool all_equal = true, any_diff = false;
  for (std::size_t i = 0; i < a.tensors.size(); ++i) {
    all_equal = all_equal && (a.tensors[i].second.values() == b.tensors[i].second.values()).all();
    any_diff = any_diff || (a.tensors[i].second.values() != c.tensors[i].second.values()).any();
  }
  CHECK(all_equal);
  CHECK(any_diff);

  const auto& conv1 = a.find("stage1/conv1_w");
  const double limit = std::sqrt(6.0 / (1 * 9));
  CHECK(conv1.values().abs().maxCoeff() <= limit);
  CHECK(conv1.values().abs().maxCoeff() > 0.1 * limit);
  CHECK((a.find("stage1/conv1_b").values() == 0.0).all());
  CHECK((a.find("emotion/b").values() == 0.0).all());
  CHECK(a.all_finite());
  CHECK_THROWS_AS(a.find("stage9/conv1_w"), RuntimeError);
}

TEST_CASE("canonical shape fills the frame with a 10 percent margin") {
  model::ModelParams p = small_params();
  const double lo = p.canonical.minCoeff();
  const double hi = p.canonical.maxCoeff();
  CHECK(lo >= 6.4 - 1e-9);
  CHECK(hi <= 57.6 + 1e-9);
  // the tight axis touches both margins
  const double w = p.canonical.col(0).maxCoeff() - p.canonical.col(0).minCoeff();
  const double h = p.canonical.col(1).maxCoeff() - p.canonical.col(1).minCoeff();
  CHECK(std::max(w, h) == doctest::Approx(51.2).epsilon(1e-9));

  Shape flat = Shape::Zero();
  CHECK_THROWS_AS(model::normalize_canonical(flat, 64), ValidationError);
}

TEST_CASE("zero delta heads collapse the prediction onto the canonical shape") {
  model::ModelParams p = small_params();
  for (const char* name : {"stage1/delta_w", "stage1/delta_b", "stage2/delta_w",
                           "stage2/delta_b"}) {
    p.find(name).values().setZero();
  }
  auto images = noise_images(2, 11);
  model::BatchForward out = model::forward_batch(p, images, model::ForwardScope::full);
  for (int b = 0; b < 2; ++b) {
    for (int k = 0; k < 68; ++k) {
      CHECK(std::abs(out.s_final.values()[b * 136 + 2 * k] - p.canonical(k, 0)) < 1e-9);
      CHECK(std::abs(out.s_final.values()[b * 136 + 2 * k + 1] - p.canonical(k, 1)) < 1e-9);
    }
  }
}

TEST_CASE("landmark_transform applies per-row transforms to point pairs") {
  Array v(2 * 136);
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i % 17) - 8.0;
  Tensor x = Tensor::variable({2, 136}, v, "x");
  geometry::SimilarityTransform t0{2.0, 0.0, 1.0, -1.0};
  geometry::SimilarityTransform t1{0.0, 1.0, 0.0, 0.0};  // rotate 90 degrees
  Tensor y = model::landmark_transform(x, {t0, t1});
  for (int k = 0; k < 68; ++k) {
    const double px = v[2 * k], py = v[2 * k + 1];
    CHECK(y.values()[2 * k] == doctest::Approx(2.0 * px + 1.0).epsilon(1e-14));
    CHECK(y.values()[2 * k + 1] == doctest::Approx(2.0 * py - 1.0).epsilon(1e-14));
    const double qx = v[136 + 2 * k], qy = v[136 + 2 * k + 1];
    CHECK(y.values()[136 + 2 * k] == doctest::Approx(-qy).epsilon(1e-14));
    CHECK(y.values()[136 + 2 * k + 1] == doctest::Approx(qx).epsilon(1e-14));
  }
  CHECK_THROWS_AS(model::landmark_transform(x, {t0}), ValidationError);
}

TEST_CASE("nme_loss equals the plain geometry NME") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> n(0.0, 2.0);
  const Shape gt = exact_gt();
  Shape pred = gt;
  for (int k = 0; k < 68; ++k) {
    pred(k, 0) += n(rng);
    pred(k, 1) += n(rng);
  }
  Array v(136);
  for (int k = 0; k < 68; ++k) {
    v[2 * k] = pred(k, 0);
    v[2 * k + 1] = pred(k, 1);
  }
  Tensor t = Tensor::variable({1, 136}, v, "pred");
  Tensor loss = model::nme_loss(t, {gt}, {geometry::interpupil_distance(gt)});
  CHECK(loss.item() ==
        doctest::Approx(geometry::normalized_landmark_error(pred, gt)).epsilon(1e-12));
  CHECK_THROWS_AS(model::nme_loss(t, {gt}, {0.0}), ValidationError);
  CHECK_THROWS_AS(model::nme_loss(t, {gt, gt}, {20.0, 20.0}), ValidationError);
}

TEST_CASE("loss decomposition on a constructed example") {
  const Shape gt = exact_gt();
  Array sv(136);
  for (int k = 0; k < 68; ++k) {
    sv[2 * k] = gt(k, 0) + 10.0;  // every landmark off by exactly 10 px
    sv[2 * k + 1] = gt(k, 1);
  }
  model::BatchForward out;
  out.s_final = Tensor::variable({1, 136}, sv, "s");
  out.logits = Tensor::variable({1, 7}, Array::Zero(7), "logits");

  model::ModelConfig cfg;  // alpha 0.4, beta 0.6
  model::LossBreakdown lb = model::joint_loss(out, {gt}, {4}, cfg);
  CHECK(lb.landmark_term == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(lb.emotion_term == doctest::Approx(std::log(7.0)).epsilon(1e-14));
  // 0.4 * 0.5 + 0.6 * ln 7
  CHECK(lb.total.item() == doctest::Approx(1.3675460894331879).epsilon(1e-14));
  CHECK(std::abs(lb.total.item() - (lb.alpha * lb.landmark_term + lb.beta * lb.emotion_term)) <
        1e-12);

  // doubling both weights exactly doubles the total (power-of-two scaling)
  model::ModelConfig twice = cfg;
  twice.alpha = 0.8;
  twice.beta = 1.2;
  model::LossBreakdown lb2 = model::joint_loss(out, {gt}, {4}, twice);
  CHECK(lb2.total.item() == 2.0 * lb.total.item());

  CHECK_THROWS_AS(model::joint_loss(out, {gt}, {4}, cfg, {false, false}), ValidationError);
}

TEST_CASE("masked terms cut the corresponding gradients") {
  model::ModelParams p = small_params(7);
  auto images = noise_images(2, 21);
  std::vector<Shape> gts{exact_gt(), exact_gt()};
  std::vector<int> labels{0, 3};

  SUBCASE("emotion masked: the emotion head gets no gradient") {
    model::BatchForward out = model::forward_batch(p, images, model::ForwardScope::full);
    p.zero_grad();
    model::LossBreakdown lb =
        model::joint_loss(out, gts, labels, p.config, {true, false});
    CHECK(lb.emotion_term == 0.0);
    lb.total.backward();
    CHECK((p.find("emotion/w").grad() == 0.0).all());
    CHECK((p.find("stage2/delta_w").grad() != 0.0).any());
  }
  SUBCASE("landmark masked: the delta heads get no gradient") {
    model::BatchForward out = model::forward_batch(p, images, model::ForwardScope::full);
    p.zero_grad();
    model::LossBreakdown lb =
        model::joint_loss(out, gts, labels, p.config, {false, true});
    CHECK(lb.landmark_term == 0.0);
    lb.total.backward();
    CHECK((p.find("stage1/delta_w").grad() == 0.0).all());
    CHECK((p.find("stage2/delta_w").grad() == 0.0).all());
    CHECK((p.find("emotion/w").grad() != 0.0).any());
  }
}

TEST_CASE("probabilities normalize and ties resolve to the lowest class") {
  model::ModelParams p = small_params();
  auto images = noise_images(1, 31);
  model::ForwardOutput o = model::forward(p, images[0]);
  CHECK(o.E.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(o.E.minCoeff() > 0.0);
  CHECK(o.stage_shapes.size() == 2);

  Eigen::VectorXd flat = Eigen::VectorXd::Constant(7, 0.3);
  CHECK(model::argmax_lowest(flat) == 0);
  flat[4] = 0.9;
  flat[5] = 0.9;
  CHECK(model::argmax_lowest(flat) == 4);

  model::Prediction pr = model::predict(p, images[0]);
  CHECK(pr.probs.size() == 7);
  CHECK(static_cast<int>(pr.label) == model::argmax_lowest(pr.probs));
}

TEST_CASE("single-stage configuration skips the cascade") {
  model::ModelConfig c = small_config();
  c.n_stages = 1;
  std::vector<Shape> shapes{dataset::face_template()};
  model::ModelParams p = model::init_params(c, 2, shapes);
  CHECK(model::tensor_layout(c).size() == 10);
  auto images = noise_images(2, 41);
  model::BatchForward out = model::forward_batch(p, images, model::ForwardScope::full);
  CHECK(out.logits.valid());
  CHECK(out.s_final.node() == out.s1.node());
  CHECK(out.t2.empty());
}

TEST_CASE("forward validates its inputs") {
  model::ModelParams p = small_params();
  CHECK_THROWS_AS(model::forward_batch(p, {}, model::ForwardScope::full), ValidationError);
  geometry::Image small = geometry::Image::Zero(32, 32);
  CHECK_THROWS_AS(model::forward_batch(p, {small}, model::ForwardScope::full),
                  ValidationError);
  geometry::Image hot = geometry::Image::Constant(64, 64, 1.5);
  CHECK_THROWS_AS(model::forward_batch(p, {hot}, model::ForwardScope::full), ValidationError);

  auto images = noise_images(1, 51);
  model::BatchForward s1only =
      model::forward_batch(p, images, model::ForwardScope::stage1_only);
  CHECK(!s1only.logits.valid());
  CHECK_THROWS_AS(
      model::joint_loss(s1only, {exact_gt()}, {0}, p.config, {true, true}),
      ValidationError);
}

TEST_CASE("a frozen stage context reproduces the captured forward exactly") {
  model::ModelParams p = small_params(9);
  auto images = noise_images(2, 61);
  model::StageContext ctx;
  model::BatchForward a =
      model::forward_batch(p, images, model::ForwardScope::full, nullptr, &ctx);
  model::BatchForward b =
      model::forward_batch(p, images, model::ForwardScope::full, &ctx);
  CHECK((a.s_final.values() == b.s_final.values()).all());
  CHECK((a.logits.values() == b.logits.values()).all());

  model::StageContext wrong = ctx;
  wrong.t2.pop_back();
  CHECK_THROWS_AS(model::forward_batch(p, images, model::ForwardScope::full, &wrong),
                  ValidationError);
}
