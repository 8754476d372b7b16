#pragma once

#include <Eigen/Core>
#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "emolign/common.hpp"

namespace emolign::numgrad {

using Array = Eigen::ArrayXd;

// One executed operation (or leaf) on the tape. `seq` is the execution order;
// every operation's seq is larger than the seq of all of its inputs, so sorting
// by seq yields a topological order of the recorded graph.
struct Node {
  std::vector<int> shape;
  Array value;
  Array grad;  // allocated lazily; same length as value when present
  bool requires_grad = false;
  std::uint64_t seq = 0;
  std::string label;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backprop;  // reads this->grad, accumulates into inputs

  bool has_grad() const { return grad.size() == value.size() && value.size() > 0; }
  void ensure_grad() {
    if (!has_grad()) grad = Array::Zero(value.size());
  }
};

std::string shape_str(const std::vector<int>& shape);
Eigen::Index shape_numel(const std::vector<int>& shape);

// Value-semantic handle to a tape node. Copies share the underlying node.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor constant(std::vector<int> shape, Array values);
  static Tensor variable(std::vector<int> shape, Array values, const std::string& label = "");
  static Tensor scalar(double v);

  bool valid() const { return node_ != nullptr; }
  const std::vector<int>& shape() const { return node_->shape; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  int dim(int i) const { return node_->shape.at(static_cast<std::size_t>(i)); }
  Eigen::Index size() const { return node_->value.size(); }

  Array& values() { return node_->value; }
  const Array& values() const { return node_->value; }
  double value_at(Eigen::Index i) const { return node_->value[i]; }

  // Scalar value of a size-1 tensor.
  double item() const;

  Array& grad();
  const Array& grad() const;
  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool b);
  void zero_grad();

  const std::string& label() const { return node_->label; }
  void set_label(std::string label) { node_->label = std::move(label); }

  // Reverse pass from this (scalar) tensor; accumulates into the grads of
  // every reachable tensor that requires gradient.
  void backward() const;

  std::shared_ptr<Node> node() const { return node_; }
  static Tensor wrap(std::shared_ptr<Node> n) { return Tensor(std::move(n)); }

 private:
  explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}
  std::shared_ptr<Node> node_;
};

// Ordered record of the operations reachable from a root, producers first.
struct Graph {
  std::vector<std::shared_ptr<Node>> order;
  static Graph reachable(const Tensor& root);
};

// Extension point for modules that add their own differentiable operations:
// records an op node with the given inputs and backward closure. The output
// requires grad iff any input does; the closure is dropped otherwise.
Tensor make_op(const std::string& label, std::vector<int> shape, Array value,
               std::vector<Tensor> inputs, std::function<void(Node&)> backprop);

}  // namespace emolign::numgrad
