#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "emolign/numgrad/adam.hpp"
#include "emolign/numgrad/grad_check.hpp"
#include "emolign/numgrad/ops.hpp"
#include "emolign/numgrad/tensor.hpp"

using namespace emolign;
using numgrad::Array;
using numgrad::Tensor;

namespace {

Array arr(std::initializer_list<double> v) {
  Array a(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) a[i++] = x;
  return a;
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

}  // namespace

TEST_CASE("tensor shape and item") {
  Tensor t = Tensor::variable({2, 3}, arr({1, 2, 3, 4, 5, 6}), "t");
  CHECK(t.rank() == 2);
  CHECK(t.dim(0) == 2);
  CHECK(t.size() == 6);
  CHECK(Tensor::scalar(3.5).item() == 3.5);
  CHECK_THROWS_AS((void)t.item(), ValidationError);
  CHECK_THROWS_AS(Tensor::variable({2, 3}, arr({1, 2}), "bad"), ValidationError);
}

TEST_CASE("dense against a hand-worked example") {
  Tensor x = Tensor::variable({1, 2}, arr({1, 2}), "x");
  Tensor w = Tensor::variable({2, 1}, arr({3, 4}), "w");
  Tensor b = Tensor::variable({1}, arr({5}), "b");
  Tensor y = numgrad::dense(x, w, b);
  CHECK(y.values()[0] == doctest::Approx(16.0).epsilon(1e-15));
  numgrad::sum(y).backward();
  CHECK(x.grad()[0] == 3.0);
  CHECK(x.grad()[1] == 4.0);
  CHECK(w.grad()[0] == 1.0);
  CHECK(w.grad()[1] == 2.0);
  CHECK(b.grad()[0] == 1.0);
}

TEST_CASE("gradient accumulates across branches") {
  Tensor x = Tensor::variable({3}, arr({1, -2, 3}), "x");
  Tensor y = numgrad::sum(numgrad::add(numgrad::scale(x, 2.0), numgrad::scale(x, 3.0)));
  y.backward();
  for (int i = 0; i < 3; ++i) CHECK(x.grad()[i] == 5.0);
  CHECK(y.item() == doctest::Approx(2.0 * 2 + 3.0 * 2).epsilon(1e-15));
}

TEST_CASE("relu clamps values and gradient") {
  Tensor x = Tensor::variable({4}, arr({-1.0, 0.0, 2.0, -0.5}), "x");
  Tensor y = numgrad::relu(x);
  CHECK(y.values()[0] == 0.0);
  CHECK(y.values()[2] == 2.0);
  numgrad::sum(y).backward();
  CHECK(x.grad()[0] == 0.0);
  CHECK(x.grad()[1] == 0.0);
  CHECK(x.grad()[2] == 1.0);
  CHECK(x.grad()[3] == 0.0);
}

TEST_CASE("maxpool2 picks window maxima and routes ties to the first slot") {
  // one 2x4 image: windows {9,1,3,3} and {5,5,2,0}
  Tensor x = Tensor::variable({1, 1, 2, 4}, arr({9, 1, 5, 5, 3, 3, 2, 0}), "x");
  Tensor y = numgrad::maxpool2(x);
  REQUIRE(y.size() == 2);
  CHECK(y.values()[0] == 9.0);
  CHECK(y.values()[1] == 5.0);
  numgrad::sum(y).backward();
  CHECK(x.grad()[0] == 1.0);  // 9
  CHECK(x.grad()[2] == 1.0);  // first 5 in scan order
  CHECK(x.grad()[3] == 0.0);  // second 5
  CHECK(x.grad()[4] == 0.0);
  CHECK_THROWS_AS(numgrad::maxpool2(Tensor::variable({1, 1, 3, 4}, Array::Zero(12), "odd")),
                  ValidationError);
}

TEST_CASE("conv2d hand-worked 2x2 all-ones kernel") {
  // x = [[1,2],[3,4]], 3x3 ones kernel, zero padding: out[0,0] sums the
  // 2x2 neighborhood that lies in frame.
  Tensor x = Tensor::variable({1, 1, 2, 2}, arr({1, 2, 3, 4}), "x");
  Tensor k = Tensor::variable({1, 1, 3, 3}, Array::Ones(9), "k");
  Tensor b = Tensor::variable({1}, arr({0}), "b");
  Tensor y = numgrad::conv2d(x, k, b);
  CHECK(y.values()[0] == 10.0);  // whole image in every window
  CHECK(y.values()[1] == 10.0);
  CHECK(y.values()[2] == 10.0);
  CHECK(y.values()[3] == 10.0);
  numgrad::sum(y).backward();
  // each input feeds all four outputs
  for (int i = 0; i < 4; ++i) CHECK(x.grad()[i] == 4.0);
  CHECK(b.grad()[0] == 4.0);
}

TEST_CASE("softmax cross entropy on uniform logits equals log K") {
  Tensor logits = Tensor::variable({2, 7}, Array::Zero(14), "logits");
  Tensor loss = numgrad::softmax_ce(logits, {3, 0});
  CHECK(loss.item() == doctest::Approx(1.9459101490553132).epsilon(1e-14));  // ln 7
  loss.backward();
  // (softmax - onehot)/B with uniform probabilities
  for (int b = 0; b < 2; ++b) {
    for (int k = 0; k < 7; ++k) {
      const double expect = (1.0 / 7.0 - ((b == 0 ? k == 3 : k == 0) ? 1.0 : 0.0)) / 2.0;
      CHECK(logits.grad()[b * 7 + k] == doctest::Approx(expect).epsilon(1e-14));
    }
  }
  CHECK_THROWS_AS(numgrad::softmax_ce(logits, {7, 0}), ValidationError);
  CHECK_THROWS_AS(numgrad::softmax_ce(logits, {0}), ValidationError);
}

TEST_CASE("softmax cross entropy is shift invariant and overflow safe") {
  Tensor a = Tensor::variable({1, 3}, arr({1.0, 2.0, 3.0}), "a");
  Tensor b = Tensor::variable({1, 3}, arr({1001.0, 1002.0, 1003.0}), "b");
  const double la = numgrad::softmax_ce(a, {1}).item();
  const double lb = numgrad::softmax_ce(b, {1}).item();
  CHECK(la == doctest::Approx(lb).epsilon(1e-12));
  CHECK(std::isfinite(lb));
}

TEST_CASE("reshape preserves data and rejects wrong volume") {
  Tensor x = Tensor::variable({2, 3}, arr({1, 2, 3, 4, 5, 6}), "x");
  Tensor y = numgrad::reshape(x, {3, 2});
  CHECK(y.values()[4] == 5.0);
  CHECK_THROWS_AS(numgrad::reshape(x, {4, 2}), ValidationError);
  numgrad::sum(numgrad::scale(y, 2.0)).backward();
  for (int i = 0; i < 6; ++i) CHECK(x.grad()[i] == 2.0);
}

TEST_CASE("graph reachability tracks only ancestors of the root") {
  Tensor x = Tensor::variable({2}, arr({1, 2}), "x");
  Tensor y = Tensor::variable({2}, arr({3, 4}), "y");
  Tensor z = numgrad::sum(numgrad::add(x, y));
  Tensor w = numgrad::scale(x, 2.0);  // separate branch, not an ancestor of z
  numgrad::Graph g = numgrad::Graph::reachable(z);
  bool saw_w = false;
  for (const auto& n : g.order) saw_w = saw_w || (n == w.node());
  CHECK(!saw_w);
  bool saw_x = false;
  for (const auto& n : g.order) saw_x = saw_x || (n == x.node());
  CHECK(saw_x);
  // producers come before consumers
  for (std::size_t i = 1; i < g.order.size(); ++i)
    CHECK(g.order[i - 1]->seq < g.order[i]->seq);
}

TEST_CASE("finite differences confirm each op on random inputs") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto rand_arr = [&](Eigen::Index n) {
    Array a(n);
    for (Eigen::Index i = 0; i < n; ++i) a[i] = u(rng);
    return a;
  };
  Tensor x = Tensor::variable({3, 4, 6, 6}, rand_arr(3 * 4 * 36), "x");
  Tensor k = Tensor::variable({2, 4, 3, 3}, rand_arr(2 * 4 * 9), "k");
  Tensor b = Tensor::variable({2}, rand_arr(2), "b");
  numgrad::ScalarFn f = [&](Tensor&) {
    Tensor h = numgrad::relu(numgrad::conv2d(x, k, b));
    return numgrad::sum(numgrad::maxpool2(h));
  };
  for (Tensor* t : {&x, &k, &b}) {
    auto r = numgrad::grad_check_sampled(f, *t, 1e-5, 25, rng);
    CHECK(r.max_rel_err < 1e-4);
    CHECK(r.checked >= std::min<Eigen::Index>(25, t->size()));
  }
}

TEST_CASE("grad check flags a wrong backward") {
  Tensor x = Tensor::variable({4}, arr({0.3, -0.7, 1.1, 0.4}), "x");
  numgrad::ScalarFn f = [&](Tensor&) {
    // deliberately wrong backward: claims d/dx = 3x instead of 2
    return numgrad::make_op("bad", {1}, Array::Constant(1, 2.0 * x.values().sum()), {x},
                            [xn = x.node()](numgrad::Node& n) {
                              xn->ensure_grad();
                              xn->grad += 3.0 * xn->value * n.grad[0];
                            });
  };
  auto r = numgrad::grad_check(f, x, 1e-5);
  CHECK(r.max_rel_err > 1e-2);
}

TEST_CASE("adam first step moves by lr times the gradient sign scale") {
  Tensor p = Tensor::variable({3}, arr({1.0, -2.0, 0.5}), "p");
  Array g = arr({0.2, -0.4, 0.0});
  numgrad::AdamSlot slot;
  numgrad::AdamParams cfg;
  numgrad::adam_step(p, g, slot, cfg, slot.t + 1);
  // bias-corrected first step: lr * g / (|g| + eps)
  CHECK(p.values()[0] == doctest::Approx(1.0 - 1e-3 * 0.2 / (0.2 + 1e-8)).epsilon(1e-12));
  CHECK(p.values()[1] == doctest::Approx(-2.0 + 1e-3 * 0.4 / (0.4 + 1e-8)).epsilon(1e-12));
  CHECK(p.values()[2] == 0.5);  // zero gradient, zero step
  CHECK(slot.t == 1);
  numgrad::adam_step(p, g, slot, cfg, slot.t + 1);
  CHECK(slot.t == 2);
}

TEST_CASE("adam validates sizes, step counter, and gradient finiteness") {
  Tensor p = Tensor::variable({2}, arr({1.0, 2.0}), "weights");
  numgrad::AdamSlot slot;
  numgrad::AdamParams cfg;
  CHECK_THROWS_AS(numgrad::adam_step(p, Array::Zero(3), slot, cfg, 1), ValidationError);
  CHECK_THROWS_AS(numgrad::adam_step(p, Array::Zero(2), slot, cfg, 0), ValidationError);
  Array bad = arr({1.0, std::nan("")});
  const std::string msg =
      thrown<RuntimeError>([&] { numgrad::adam_step(p, bad, slot, cfg, 1); });
  CHECK(msg.find("weights") != std::string::npos);
}

TEST_CASE("adam trajectories are deterministic") {
  auto run = [] {
    Tensor p = Tensor::variable({4}, arr({0.1, 0.2, 0.3, 0.4}), "p");
    numgrad::AdamSlot slot;
    numgrad::AdamParams cfg;
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int t = 1; t <= 50; ++t) {
      Array g(4);
      for (int i = 0; i < 4; ++i) g[i] = n(rng);
      numgrad::adam_step(p, g, slot, cfg, slot.t + 1);
    }
    return p.values();
  };
  Array a = run(), b = run();
  for (int i = 0; i < 4; ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("adam drives a quadratic toward its minimum") {
  // f(p) = sum (p - c)^2 via the tape: dense with identity weight reproduces p
  Tensor p = Tensor::variable({1, 2}, arr({4.0, -3.0}), "p");
  const double c0 = 1.0, c1 = -1.0;
  numgrad::AdamSlot slot;
  numgrad::AdamParams cfg;
  cfg.lr = 0.05;
  for (int t = 1; t <= 400; ++t) {
    p.zero_grad();
    Array g(2);
    g[0] = 2.0 * (p.values()[0] - c0);
    g[1] = 2.0 * (p.values()[1] - c1);
    numgrad::adam_step(p, g, slot, cfg, slot.t + 1);
  }
  CHECK(p.values()[0] == doctest::Approx(c0).epsilon(1e-2));
  CHECK(p.values()[1] == doctest::Approx(c1).epsilon(1e-2));
}

TEST_CASE("backward requires a scalar root and grad access requires allocation") {
  Tensor x = Tensor::variable({2}, arr({1, 2}), "x");
  CHECK_THROWS_AS(numgrad::add(x, x).backward(), ValidationError);
  Tensor c = Tensor::constant({2}, arr({1, 2}));
  CHECK(!c.requires_grad());
}
