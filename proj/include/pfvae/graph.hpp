#pragma once

#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "pfvae/tensor.hpp"

namespace pfvae {

// Thrown when an operation produces a NaN or Inf. Training catches this to
// abort cleanly while keeping the last good checkpoint.
struct NonFiniteError : std::runtime_error {
  explicit NonFiniteError(const std::string& msg) : std::runtime_error(msg) {}
};

// One node in a define-by-run computation graph. The graph is rebuilt from
// scratch every step; nodes are freed when the last Var referencing them
// goes out of scope.
struct Node {
  Tensor value;
  Tensor grad;             // allocated lazily on first accumulation
  bool grad_ready = false; // grad holds real data
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  void accumulate(const Tensor& g);
  void zero_grad();
};

// Value-semantics handle to a graph node.
class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  static Var constant(Tensor value) { return Var(std::move(value), false); }
  static Var scalar(double v) { return Var(Tensor::scalar(v), false); }

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const;
  const Tensor& grad() const;
  bool requires_grad() const { return node_ && node_->requires_grad; }
  void zero_grad() { if (node_) node_->zero_grad(); }
  std::shared_ptr<Node> node() const { return node_; }

  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<Node> node_;
};

// While alive, newly created ops record no parents and no backward functions:
// forward evaluation only. Used for finite-difference probes and inference.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
  static bool active();

 private:
  bool prev_;
};

// Elementwise arithmetic. Operands must have identical shapes, except that a
// one-element tensor broadcasts against any shape.
Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& a);

Var operator+(const Var& a, double b);
Var operator+(double a, const Var& b);
Var operator-(const Var& a, double b);
Var operator-(double a, const Var& b);
Var operator*(const Var& a, double b);
Var operator*(double a, const Var& b);
Var operator/(const Var& a, double b);
Var operator/(double a, const Var& b);

Var tanh(const Var& x);
Var exp(const Var& x);
Var log(const Var& x);  // domain error on non-positive input
Var square(const Var& x);
Var sigmoid(const Var& x);
Var softplus(const Var& x);
// Pass-through gradient inside [lo, hi], zero outside.
Var clamp(const Var& x, double lo, double hi);

// [m,k]x[k,n] -> [m,n], or [m,k]x[k] -> [m].
Var matmul(const Var& a, const Var& b);
// Rank-1 inner product -> scalar.
Var dot(const Var& a, const Var& b);

Var sum(const Var& x);
Var sum(const Var& x, std::size_t axis);
Var mean(const Var& x);
Var mean(const Var& x, std::size_t axis);

// Reverse-mode sweep from a scalar loss. Seeds d(loss)/d(loss) = 1, walks the
// graph in reverse topological order and accumulates gradients additively
// into every node that requires them.
void backward(const Var& loss);

struct Parameter {
  std::string name;
  Var var;
};

// Named trainable leaves in insertion order. Insertion order is the canonical
// parameter order used by the optimizer and the checkpoint format.
class ParameterSet {
 public:
  Var add(const std::string& name, Tensor init);
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  std::size_t size() const { return items_.size(); }

  std::vector<Parameter>::iterator begin() { return items_.begin(); }
  std::vector<Parameter>::iterator end() { return items_.end(); }
  std::vector<Parameter>::const_iterator begin() const { return items_.begin(); }
  std::vector<Parameter>::const_iterator end() const { return items_.end(); }

  void zero_grad();
  // Snapshot of current gradients, zeros for parameters the last backward
  // sweep never reached.
  std::map<std::string, Tensor> gradients() const;

 private:
  std::vector<Parameter> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Test hook: while alive, the backward rule for tanh is deliberately wrong.
// Lets callers verify that a gradient checker actually detects bad gradients.
class ScopedGradientFault {
 public:
  ScopedGradientFault();
  ~ScopedGradientFault();
  static bool active();
};

}  // namespace pfvae
