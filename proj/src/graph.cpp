#include "pfvae/graph.hpp"

#include <cmath>
#include <unordered_set>
#include <utility>

#include "pfvae/scalarops.hpp"

namespace pfvae {

namespace {

thread_local bool g_no_grad = false;
thread_local bool g_tanh_fault = false;

void check_finite(const Tensor& v, const char* op) {
  if (!v.all_finite()) {
    throw NonFiniteError(std::string("non-finite value produced by op '") + op + "'");
  }
}

Var make_op(const char* op, Tensor value, std::vector<std::shared_ptr<Node>> parents,
            std::function<void(Node&)> backward_fn) {
  check_finite(value, op);
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->op = op;
  if (!g_no_grad) {
    for (const auto& p : parents) {
      if (p && p->requires_grad) {
        node->requires_grad = true;
        break;
      }
    }
    if (node->requires_grad) {
      node->parents = std::move(parents);
      node->backward_fn = std::move(backward_fn);
    }
  }
  return Var(std::move(node));
}

std::shared_ptr<Node> checked_node(const Var& v, const char* op) {
  auto n = v.node();
  if (!n) throw std::invalid_argument(std::string(op) + ": undefined operand");
  return n;
}

// Which operand, if any, is a one-element tensor broadcast against the other.
enum class Broadcast { kNone, kLeft, kRight };

Broadcast binary_mode(const Tensor& a, const Tensor& b, const char* op) {
  if (a.same_shape(b)) return Broadcast::kNone;
  if (a.is_scalar()) return Broadcast::kLeft;
  if (b.is_scalar()) return Broadcast::kRight;
  throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                              b.shape_str());
}

// Elementwise binary op. da and db are the partial derivatives as functions
// of the two operand elements.
Var elementwise_binary(const char* op, const Var& av, const Var& bv, double (*fwd)(double, double),
                       double (*da)(double, double), double (*db)(double, double)) {
  auto an = checked_node(av, op);
  auto bn = checked_node(bv, op);
  const Tensor& a = an->value;
  const Tensor& b = bn->value;
  Broadcast mode = binary_mode(a, b, op);
  const Tensor& wide = (mode == Broadcast::kLeft) ? b : a;
  Tensor out(wide.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::size_t ai = (mode == Broadcast::kLeft) ? 0 : i;
    std::size_t bi = (mode == Broadcast::kRight) ? 0 : i;
    out[i] = fwd(a[ai], b[bi]);
  }
  return make_op(op, std::move(out), {an, bn}, [an, bn, mode, da, db](Node& self) {
    const Tensor& a = an->value;
    const Tensor& b = bn->value;
    const Tensor& g = self.grad;
    if (an->requires_grad) {
      Tensor ga(a.shape());
      for (std::size_t i = 0; i < g.size(); ++i) {
        std::size_t ai = (mode == Broadcast::kLeft) ? 0 : i;
        std::size_t bi = (mode == Broadcast::kRight) ? 0 : i;
        ga[ai] += g[i] * da(a[ai], b[bi]);
      }
      an->accumulate(ga);
    }
    if (bn->requires_grad) {
      Tensor gb(b.shape());
      for (std::size_t i = 0; i < g.size(); ++i) {
        std::size_t ai = (mode == Broadcast::kLeft) ? 0 : i;
        std::size_t bi = (mode == Broadcast::kRight) ? 0 : i;
        gb[bi] += g[i] * db(a[ai], b[bi]);
      }
      bn->accumulate(gb);
    }
  });
}

// Elementwise unary op. dfdx receives the input element and the already
// computed output element, so ops like tanh can reuse the forward value.
Var elementwise_unary(const char* op, const Var& xv, double (*fwd)(double),
                      double (*dfdx)(double, double)) {
  auto xn = checked_node(xv, op);
  const Tensor& x = xn->value;
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(x[i]);
  return make_op(op, std::move(out), {xn}, [xn, dfdx](Node& self) {
    if (!xn->requires_grad) return;
    const Tensor& x = xn->value;
    const Tensor& y = self.value;
    const Tensor& g = self.grad;
    Tensor gx(x.shape());
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] = g[i] * dfdx(x[i], y[i]);
    xn->accumulate(gx);
  });
}

}  // namespace

void Node::accumulate(const Tensor& g) {
  if (!grad_ready) {
    grad = Tensor(value.shape());
    grad_ready = true;
  }
  if (g.size() != grad.size()) {
    throw std::invalid_argument("grad accumulate: shape mismatch " + g.shape_str() + " vs " +
                                grad.shape_str());
  }
  for (std::size_t i = 0; i < g.size(); ++i) grad[i] += g[i];
}

void Node::zero_grad() {
  grad = Tensor();
  grad_ready = false;
}

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

const Tensor& Var::value() const {
  if (!node_) throw std::invalid_argument("var: value() on undefined var");
  return node_->value;
}

const Tensor& Var::grad() const {
  if (!node_) throw std::invalid_argument("var: grad() on undefined var");
  if (!node_->grad_ready) {
    node_->grad = Tensor(node_->value.shape());
    node_->grad_ready = true;
  }
  return node_->grad;
}

NoGradGuard::NoGradGuard() : prev_(g_no_grad) { g_no_grad = true; }
NoGradGuard::~NoGradGuard() { g_no_grad = prev_; }
bool NoGradGuard::active() { return g_no_grad; }

ScopedGradientFault::ScopedGradientFault() { g_tanh_fault = true; }
ScopedGradientFault::~ScopedGradientFault() { g_tanh_fault = false; }
bool ScopedGradientFault::active() { return g_tanh_fault; }

Var operator+(const Var& a, const Var& b) {
  return elementwise_binary(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Var operator-(const Var& a, const Var& b) {
  return elementwise_binary(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Var operator*(const Var& a, const Var& b) {
  return elementwise_binary(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

Var operator/(const Var& a, const Var& b) {
  return elementwise_binary(
      "div", a, b, [](double x, double y) { return x / y; },
      [](double, double y) { return 1.0 / y; },
      [](double x, double y) { return -x / (y * y); });
}

Var operator-(const Var& a) {
  return elementwise_unary(
      "neg", a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Var operator+(const Var& a, double b) { return a + Var::scalar(b); }
Var operator+(double a, const Var& b) { return Var::scalar(a) + b; }
Var operator-(const Var& a, double b) { return a - Var::scalar(b); }
Var operator-(double a, const Var& b) { return Var::scalar(a) - b; }
Var operator*(const Var& a, double b) { return a * Var::scalar(b); }
Var operator*(double a, const Var& b) { return Var::scalar(a) * b; }
Var operator/(const Var& a, double b) { return a / Var::scalar(b); }
Var operator/(double a, const Var& b) { return Var::scalar(a) / b; }

Var tanh(const Var& x) {
  return elementwise_unary(
      "tanh", x, [](double v) { return std::tanh(v); },
      [](double, double y) {
        double d = 1.0 - y * y;
        // Deliberately corrupted derivative under the test-only fault hook.
        return g_tanh_fault ? d * 1.01 : d;
      });
}

Var exp(const Var& x) {
  return elementwise_unary(
      "exp", x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Var log(const Var& x) {
  auto xn = checked_node(x, "log");
  for (std::size_t i = 0; i < xn->value.size(); ++i) {
    if (!(xn->value[i] > 0.0)) throw std::domain_error("log: non-positive operand");
  }
  return elementwise_unary(
      "log", x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Var square(const Var& x) {
  return elementwise_unary(
      "square", x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Var sigmoid(const Var& x) {
  return elementwise_unary(
      "sigmoid", x, [](double v) { return stable_sigmoid(v); },
      [](double, double y) { return y * (1.0 - y); });
}

Var softplus(const Var& x) {
  return elementwise_unary(
      "softplus", x, [](double v) { return stable_softplus(v); },
      [](double v, double) { return stable_sigmoid(v); });
}

Var clamp(const Var& x, double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("clamp: lo > hi");
  auto xn = checked_node(x, "clamp");
  const Tensor& xv = xn->value;
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(std::max(xv[i], lo), hi);
  return make_op("clamp", std::move(out), {xn}, [xn, lo, hi](Node& self) {
    if (!xn->requires_grad) return;
    const Tensor& xv = xn->value;
    const Tensor& g = self.grad;
    Tensor gx(xv.shape());
    for (std::size_t i = 0; i < g.size(); ++i) {
      gx[i] = (xv[i] >= lo && xv[i] <= hi) ? g[i] : 0.0;
    }
    xn->accumulate(gx);
  });
}

Var matmul(const Var& a, const Var& b) {
  auto an = checked_node(a, "matmul");
  auto bn = checked_node(b, "matmul");
  const Tensor& av = an->value;
  const Tensor& bv = bn->value;
  auto mismatch = [&]() {
    return std::invalid_argument("matmul: shape mismatch " + av.shape_str() + " vs " +
                                 bv.shape_str());
  };
  if (av.rank() != 2) throw mismatch();
  std::size_t m = av.dim(0), k = av.dim(1);

  if (bv.rank() == 2) {
    if (bv.dim(0) != k) throw mismatch();
    std::size_t n = bv.dim(1);
    Tensor out(Shape{m, n});
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t l = 0; l < k; ++l) {
        double ail = av[i * k + l];
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] += ail * bv[l * n + j];
      }
    }
    return make_op("matmul", std::move(out), {an, bn}, [an, bn, m, k, n](Node& self) {
      const Tensor& av = an->value;
      const Tensor& bv = bn->value;
      const Tensor& g = self.grad;
      if (an->requires_grad) {
        Tensor ga(Shape{m, k});
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            double gij = g[i * n + j];
            for (std::size_t l = 0; l < k; ++l) ga[i * k + l] += gij * bv[l * n + j];
          }
        an->accumulate(ga);
      }
      if (bn->requires_grad) {
        Tensor gb(Shape{k, n});
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t l = 0; l < k; ++l) {
            double ail = av[i * k + l];
            for (std::size_t j = 0; j < n; ++j) gb[l * n + j] += ail * g[i * n + j];
          }
        bn->accumulate(gb);
      }
    });
  }

  if (bv.rank() == 1) {
    if (bv.dim(0) != k) throw mismatch();
    Tensor out(Shape{m});
    for (std::size_t i = 0; i < m; ++i) {
      double acc = 0.0;
      for (std::size_t l = 0; l < k; ++l) acc += av[i * k + l] * bv[l];
      out[i] = acc;
    }
    return make_op("matmul", std::move(out), {an, bn}, [an, bn, m, k](Node& self) {
      const Tensor& av = an->value;
      const Tensor& bv = bn->value;
      const Tensor& g = self.grad;
      if (an->requires_grad) {
        Tensor ga(Shape{m, k});
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t l = 0; l < k; ++l) ga[i * k + l] = g[i] * bv[l];
        an->accumulate(ga);
      }
      if (bn->requires_grad) {
        Tensor gb(Shape{k});
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t l = 0; l < k; ++l) gb[l] += av[i * k + l] * g[i];
        bn->accumulate(gb);
      }
    });
  }

  throw mismatch();
}

Var dot(const Var& a, const Var& b) {
  auto an = checked_node(a, "dot");
  auto bn = checked_node(b, "dot");
  const Tensor& av = an->value;
  const Tensor& bv = bn->value;
  if (av.rank() != 1 || bv.rank() != 1 || av.size() != bv.size()) {
    throw std::invalid_argument("dot: shape mismatch " + av.shape_str() + " vs " + bv.shape_str());
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) acc += av[i] * bv[i];
  return make_op("dot", Tensor::scalar(acc), {an, bn}, [an, bn](Node& self) {
    const Tensor& av = an->value;
    const Tensor& bv = bn->value;
    double g = self.grad[0];
    if (an->requires_grad) {
      Tensor ga(av.shape());
      for (std::size_t i = 0; i < av.size(); ++i) ga[i] = g * bv[i];
      an->accumulate(ga);
    }
    if (bn->requires_grad) {
      Tensor gb(bv.shape());
      for (std::size_t i = 0; i < bv.size(); ++i) gb[i] = g * av[i];
      bn->accumulate(gb);
    }
  });
}

Var sum(const Var& x) {
  auto xn = checked_node(x, "sum");
  double acc = 0.0;
  for (std::size_t i = 0; i < xn->value.size(); ++i) acc += xn->value[i];
  return make_op("sum", Tensor::scalar(acc), {xn}, [xn](Node& self) {
    if (!xn->requires_grad) return;
    xn->accumulate(Tensor::full(xn->value.shape(), self.grad[0]));
  });
}

Var sum(const Var& x, std::size_t axis) {
  auto xn = checked_node(x, "sum");
  const Tensor& xv = xn->value;
  if (axis >= xv.rank()) {
    throw std::invalid_argument("sum: invalid axis " + std::to_string(axis) + " for rank " +
                                std::to_string(xv.rank()));
  }
  Shape out_shape = xv.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= xv.shape()[i];
  for (std::size_t i = axis + 1; i < xv.rank(); ++i) inner *= xv.shape()[i];
  std::size_t axis_n = xv.shape()[axis];

  Tensor out(out_shape);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t a = 0; a < axis_n; ++a)
      for (std::size_t in = 0; in < inner; ++in)
        out[o * inner + in] += xv[(o * axis_n + a) * inner + in];

  return make_op("sum", std::move(out), {xn}, [xn, outer, axis_n, inner](Node& self) {
    if (!xn->requires_grad) return;
    const Tensor& g = self.grad;
    Tensor gx(xn->value.shape());
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t a = 0; a < axis_n; ++a)
        for (std::size_t in = 0; in < inner; ++in)
          gx[(o * axis_n + a) * inner + in] = g[o * inner + in];
    xn->accumulate(gx);
  });
}

Var mean(const Var& x) {
  auto xn = checked_node(x, "mean");
  double n = static_cast<double>(xn->value.size());
  return sum(x) / n;
}

Var mean(const Var& x, std::size_t axis) {
  auto xn = checked_node(x, "mean");
  const Tensor& xv = xn->value;
  if (axis >= xv.rank()) {
    throw std::invalid_argument("mean: invalid axis " + std::to_string(axis) + " for rank " +
                                std::to_string(xv.rank()));
  }
  return sum(x, axis) / static_cast<double>(xv.shape()[axis]);
}

void backward(const Var& loss) {
  auto root = loss.node();
  if (!root) throw std::invalid_argument("backward: undefined loss");
  if (!root->value.is_scalar()) {
    throw std::invalid_argument("backward: loss must be scalar, got " + root->value.shape_str());
  }
  if (!root->requires_grad) return;

  // Iterative post-order DFS over the requires-grad subgraph. The post-order
  // list has producers before consumers, so the reversed list is the order
  // for the reverse sweep.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.get(), 0);
  visited.insert(root.get());
  while (!stack.empty()) {
    auto [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      ++stack.back().second;
      Node* p = node->parents[idx].get();
      if (p && p->requires_grad && visited.insert(p).second) {
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->accumulate(Tensor::full(root->value.shape(), 1.0));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && n->grad_ready) n->backward_fn(*n);
  }
}

Var ParameterSet::add(const std::string& name, Tensor init) {
  if (name.empty()) throw std::invalid_argument("parameter: empty name");
  if (index_.count(name)) throw std::invalid_argument("parameter '" + name + "' already registered");
  Var v(std::move(init), /*requires_grad=*/true);
  index_[name] = items_.size();
  items_.push_back(Parameter{name, v});
  return v;
}

Parameter& ParameterSet::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::invalid_argument("parameter '" + name + "' not found");
  return items_[it->second];
}

const Parameter& ParameterSet::at(const std::string& name) const {
  return const_cast<ParameterSet*>(this)->at(name);
}

void ParameterSet::zero_grad() {
  for (auto& p : items_) p.var.zero_grad();
}

std::map<std::string, Tensor> ParameterSet::gradients() const {
  std::map<std::string, Tensor> out;
  for (const auto& p : items_) {
    auto node = p.var.node();
    out[p.name] = node->grad_ready ? node->grad : Tensor(node->value.shape());
  }
  return out;
}

}  // namespace pfvae
