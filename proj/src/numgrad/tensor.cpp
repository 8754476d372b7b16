#include "emolign/numgrad/tensor.hpp"

#include <algorithm>
#include <unordered_set>

namespace emolign::numgrad {

namespace {

std::atomic<std::uint64_t> g_seq{1};

std::shared_ptr<Node> new_node(std::vector<int> shape, Array value) {
  auto n = std::make_shared<Node>();
  Eigen::Index want = shape_numel(shape);
  if (value.size() != want)
    throw ValidationError("tensor: " + std::to_string(value.size()) + " values do not fill shape " +
                          shape_str(shape));
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->seq = g_seq.fetch_add(1, std::memory_order_relaxed);
  return n;
}

}  // namespace

std::string shape_str(const std::vector<int>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Eigen::Index shape_numel(const std::vector<int>& shape) {
  Eigen::Index n = 1;
  for (int d : shape) {
    if (d <= 0) throw ValidationError("tensor: non-positive dimension in shape " + shape_str(shape));
    n *= d;
  }
  return n;
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  Eigen::Index n = shape_numel(shape);
  auto node = new_node(std::move(shape), Array::Zero(n));
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::constant(std::vector<int> shape, Array values) {
  return Tensor(new_node(std::move(shape), std::move(values)));
}

Tensor Tensor::variable(std::vector<int> shape, Array values, const std::string& label) {
  auto node = new_node(std::move(shape), std::move(values));
  node->requires_grad = true;
  node->label = label;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double v) {
  Array a(1);
  a[0] = v;
  return constant({1}, std::move(a));
}

double Tensor::item() const {
  if (size() != 1) throw ValidationError("item: tensor of shape " + shape_str(shape()) + " is not scalar");
  return node_->value[0];
}

Array& Tensor::grad() {
  node_->ensure_grad();
  return node_->grad;
}

const Array& Tensor::grad() const {
  node_->ensure_grad();
  return node_->grad;
}

void Tensor::set_requires_grad(bool b) {
  node_->requires_grad = b;
  if (b) node_->ensure_grad();
}

void Tensor::zero_grad() {
  node_->ensure_grad();
  node_->grad.setZero();
}

Graph Graph::reachable(const Tensor& root) {
  Graph g;
  std::unordered_set<const Node*> seen;
  std::vector<std::shared_ptr<Node>> stack{root.node()};
  while (!stack.empty()) {
    auto n = stack.back();
    stack.pop_back();
    if (!n || seen.count(n.get())) continue;
    seen.insert(n.get());
    g.order.push_back(n);
    for (const auto& in : n->inputs) stack.push_back(in);
  }
  // seq is monotone along data dependencies, so ascending seq is topological.
  std::sort(g.order.begin(), g.order.end(),
            [](const auto& a, const auto& b) { return a->seq < b->seq; });
  return g;
}

void Tensor::backward() const {
  if (!valid()) throw ValidationError("backward: empty tensor");
  if (size() != 1)
    throw ValidationError("backward: root must be scalar, got shape " + shape_str(shape()));
  Graph g = Graph::reachable(*this);
  node_->ensure_grad();
  node_->grad[0] += 1.0;
  for (auto it = g.order.rbegin(); it != g.order.rend(); ++it) {
    Node& n = **it;
    if (!n.backprop || !n.requires_grad) continue;
    n.ensure_grad();
    n.backprop(n);
  }
}

Tensor make_op(const std::string& label, std::vector<int> shape, Array value,
               std::vector<Tensor> inputs, std::function<void(Node&)> backprop) {
  auto node = std::make_shared<Node>();
  Eigen::Index want = shape_numel(shape);
  if (value.size() != want)
    throw RuntimeError("op " + label + ": produced " + std::to_string(value.size()) +
                       " values for shape " + shape_str(shape));
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->label = label;
  bool any_grad = false;
  for (const auto& t : inputs) {
    node->inputs.push_back(t.node());
    any_grad = any_grad || t.requires_grad();
  }
  node->requires_grad = any_grad;
  if (any_grad) node->backprop = std::move(backprop);
  node->seq = g_seq.fetch_add(1, std::memory_order_relaxed);
  return Tensor::wrap(std::move(node));
}

}  // namespace emolign::numgrad
