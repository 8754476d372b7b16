#include "emolign/verify/verify.hpp"

#include <algorithm>
#include <cstdio>
#include <random>

#include "emolign/dataset/synth.hpp"
#include "emolign/geometry/image.hpp"
#include "emolign/geometry/shape.hpp"
#include "emolign/model/network.hpp"
#include "emolign/model/params.hpp"
#include "emolign/model/shape_ops.hpp"
#include "emolign/numgrad/grad_check.hpp"
#include "emolign/numgrad/ops.hpp"

namespace emolign::verify {

namespace {

using numgrad::Array;
using numgrad::GradCheckResult;
using numgrad::ScalarFn;
using numgrad::Tensor;

constexpr int kSeeds = 5;
constexpr int kCoordsPerTensor = 20;
// Linear maps have no finite-difference truncation term, so a wide step keeps
// the probe far above roundoff.
constexpr double kLinearStep = 1e-2;
constexpr double kLinearTol = 1e-6;
constexpr double kNonlinearStep = 1e-5;
constexpr double kNonlinearTol = 1e-4;

Array randu(std::mt19937_64& rng, Eigen::Index n, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  Array a(n);
  for (Eigen::Index i = 0; i < n; ++i) a[i] = d(rng);
  return a;
}

void merge(CheckResult& agg, const GradCheckResult& r) {
  agg.worst_rel_err = std::max(agg.worst_rel_err, r.max_rel_err);
  agg.coords += static_cast<long>(r.checked);
}

void check_inputs(CheckResult& agg, const ScalarFn& f, std::vector<Tensor*> inputs,
                  double step, std::mt19937_64& rng, double min_magnitude = 1e-6) {
  for (Tensor* t : inputs)
    merge(agg, numgrad::grad_check_sampled(f, *t, step, kCoordsPerTensor, rng, min_magnitude));
}

CheckResult check_dense() {
  CheckResult c{"dense", 0.0, kLinearTol, 0};
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(100 + seed);
    Tensor x = Tensor::variable({4, 6}, randu(rng, 24, -1.0, 1.0), "x");
    Tensor w = Tensor::variable({6, 5}, randu(rng, 30, -1.0, 1.0), "w");
    Tensor b = Tensor::variable({5}, randu(rng, 5, -1.0, 1.0), "b");
    ScalarFn f = [&](Tensor&) { return numgrad::sum(numgrad::dense(x, w, b)); };
    check_inputs(c, f, {&x, &w, &b}, kLinearStep, rng);
  }
  return c;
}

CheckResult check_conv2d() {
  CheckResult c{"conv2d", 0.0, kLinearTol, 0};
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(200 + seed);
    Tensor x = Tensor::variable({2, 3, 6, 6}, randu(rng, 2 * 3 * 36, -1.0, 1.0), "x");
    Tensor k = Tensor::variable({4, 3, 3, 3}, randu(rng, 4 * 27, -1.0, 1.0), "k");
    Tensor b = Tensor::variable({4}, randu(rng, 4, -1.0, 1.0), "b");
    ScalarFn f = [&](Tensor&) { return numgrad::sum(numgrad::conv2d(x, k, b)); };
    check_inputs(c, f, {&x, &k, &b}, kLinearStep, rng);
  }
  return c;
}

CheckResult check_maxpool2() {
  CheckResult c{"maxpool2", 0.0, kNonlinearTol, 0};
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(300 + seed);
    Tensor x = Tensor::variable({2, 3, 6, 6}, randu(rng, 2 * 3 * 36, -1.0, 1.0), "x");
    ScalarFn f = [&](Tensor&) { return numgrad::sum(numgrad::maxpool2(x)); };
    check_inputs(c, f, {&x}, kNonlinearStep, rng);
  }
  return c;
}

CheckResult check_relu() {
  CheckResult c{"relu", 0.0, kNonlinearTol, 0};
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(400 + seed);
    Tensor x = Tensor::variable({3, 7}, randu(rng, 21, -1.0, 1.0), "x");
    // A second linear layer after the relu exposes sign errors that a plain
    // sum would hide for coordinates with positive values.
    Tensor w = Tensor::variable({7, 4}, randu(rng, 28, -1.0, 1.0), "w");
    Tensor b = Tensor::variable({4}, randu(rng, 4, -1.0, 1.0), "b");
    ScalarFn f = [&](Tensor&) {
      return numgrad::sum(numgrad::dense(numgrad::relu(x), w, b));
    };
    check_inputs(c, f, {&x}, kNonlinearStep, rng);
  }
  return c;
}

CheckResult check_softmax_ce() {
  CheckResult c{"softmax_ce", 0.0, kNonlinearTol, 0};
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(500 + seed);
    Tensor logits = Tensor::variable({5, 7}, randu(rng, 35, -2.0, 2.0), "logits");
    std::vector<int> labels(5);
    std::uniform_int_distribution<int> ld(0, 6);
    for (int& l : labels) l = ld(rng);
    ScalarFn f = [&](Tensor&) { return numgrad::softmax_ce(logits, labels); };
    check_inputs(c, f, {&logits}, kNonlinearStep, rng);
  }
  return c;
}

CheckResult check_glue() {
  CheckResult c{"reshape/add/scale/sum", 0.0, kLinearTol, 0};
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(600 + seed);
    Tensor x = Tensor::variable({2, 3, 4}, randu(rng, 24, -1.0, 1.0), "x");
    Tensor y = Tensor::variable({6, 4}, randu(rng, 24, -1.0, 1.0), "y");
    ScalarFn f = [&](Tensor&) {
      Tensor r = numgrad::reshape(x, {6, 4});
      return numgrad::sum(numgrad::add(numgrad::scale(r, -1.7), y));
    };
    check_inputs(c, f, {&x, &y}, kLinearStep, rng);
  }
  return c;
}

CheckResult check_landmark_transform() {
  CheckResult c{"landmark_transform", 0.0, kLinearTol, 0};
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(700 + seed);
    Tensor x = Tensor::variable({2, 136}, randu(rng, 272, -1.0, 1.0), "pts");
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    std::vector<geometry::SimilarityTransform> ts(2);
    for (auto& t : ts) t = {1.0 + 0.3 * d(rng), 0.4 * d(rng), 2.0 * d(rng), 2.0 * d(rng)};
    // Weighting the output keeps per-coordinate gradients distinct instead of
    // the row-constant values a plain sum would produce.
    Tensor w = Tensor::variable({136, 3}, randu(rng, 408, -1.0, 1.0), "w");
    Tensor b = Tensor::zeros({3});
    ScalarFn f = [&](Tensor&) {
      return numgrad::sum(numgrad::dense(model::landmark_transform(x, ts), w, b));
    };
    check_inputs(c, f, {&x}, kLinearStep, rng);
  }
  return c;
}

CheckResult check_nme_loss() {
  CheckResult c{"nme_loss", 0.0, kNonlinearTol, 0};
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(800 + seed);
    std::vector<geometry::Shape> gt;
    std::vector<double> d;
    Array base(272);
    std::uniform_real_distribution<double> off(-3.0, 3.0);
    for (int bi = 0; bi < 2; ++bi) {
      geometry::Shape s = dataset::face_template();
      gt.push_back(s);
      d.push_back(geometry::interpupil_distance(s));
      for (int k = 0; k < geometry::kLandmarkCount; ++k) {
        base[bi * 136 + 2 * k] = s(k, 0) + off(rng);
        base[bi * 136 + 2 * k + 1] = s(k, 1) + off(rng);
      }
    }
    Tensor pred = Tensor::variable({2, 136}, base, "pred");
    ScalarFn f = [&](Tensor&) { return model::nme_loss(pred, gt, d); };
    check_inputs(c, f, {&pred}, kNonlinearStep, rng);
  }
  return c;
}

// Full joint loss through both stages with the inter-stage context frozen at
// the base point. Ground truths are shrunk so the inter-pupil normalizer is
// small, which lifts the landmark-branch gradients well above the
// finite-difference noise floor.
CheckResult check_full_model() {
  CheckResult c{"joint_loss (full model)", 0.0, kNonlinearTol, 0};
  model::ModelConfig mcfg;
  mcfg.conv1_channels = 4;
  mcfg.conv2_channels = 6;
  mcfg.fc_width = 16;
  constexpr int kBatch = 2;
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(900 + seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> jit(-1.0, 1.0);

    std::vector<geometry::Image> images;
    std::vector<geometry::Shape> gts;
    std::vector<int> labels;
    std::uniform_int_distribution<int> ld(0, 6);
    for (int bi = 0; bi < kBatch; ++bi) {
      geometry::Image img(64, 64);
      for (int r = 0; r < 64; ++r)
        for (int col = 0; col < 64; ++col) img(r, col) = unit(rng);
      images.push_back(img);
      geometry::Shape s = dataset::face_template();
      for (int k = 0; k < geometry::kLandmarkCount; ++k) {
        s(k, 0) = 32.0 + 0.3 * (s(k, 0) - 32.0) + 0.2 * jit(rng);
        s(k, 1) = 32.0 + 0.3 * (s(k, 1) - 32.0) + 0.2 * jit(rng);
      }
      gts.push_back(s);
      labels.push_back(ld(rng));
    }

    std::vector<geometry::Shape> canon{dataset::face_template()};
    model::ModelParams params = model::init_params(mcfg, 900 + seed, canon);
    // Zero-initialized biases put relu inputs exactly on the kink (clamped
    // activations feeding zero-bias convolutions), where one-sided
    // subgradients and central differences legitimately disagree. Jitter
    // every parameter so the check runs at a generic point.
    for (auto& kv : params.tensors) kv.second.values() += randu(rng, kv.second.size(), -0.05, 0.05);

    model::StageContext frozen;
    model::forward_batch(params, images, model::ForwardScope::full, nullptr, &frozen);

    ScalarFn f = [&](Tensor&) {
      model::BatchForward out =
          model::forward_batch(params, images, model::ForwardScope::full, &frozen);
      return model::joint_loss(out, gts, labels, mcfg).total;
    };
    for (auto& kv : params.tensors)
      merge(c, numgrad::grad_check_sampled(f, kv.second, 1e-4, kCoordsPerTensor, rng, 1e-4));
  }
  return c;
}

}  // namespace

std::vector<CheckResult> run_gradcheck() {
  std::vector<CheckResult> out;
  out.push_back(check_dense());
  out.push_back(check_conv2d());
  out.push_back(check_maxpool2());
  out.push_back(check_relu());
  out.push_back(check_softmax_ce());
  out.push_back(check_glue());
  out.push_back(check_landmark_transform());
  out.push_back(check_nme_loss());
  out.push_back(check_full_model());
  return out;
}

bool all_pass(const std::vector<CheckResult>& results) {
  return std::all_of(results.begin(), results.end(),
                     [](const CheckResult& r) { return r.pass(); });
}

std::string format_results(const std::vector<CheckResult>& results) {
  std::string out;
  char line[160];
  for (const auto& r : results) {
    std::snprintf(line, sizeof(line), "%-26s coords %-5ld worst rel err %.3e  (tol %.0e)  %s\n",
                  r.name.c_str(), r.coords, r.worst_rel_err, r.tolerance,
                  r.pass() ? "ok" : "FAIL");
    out += line;
  }
  return out;
}

}  // namespace emolign::verify
