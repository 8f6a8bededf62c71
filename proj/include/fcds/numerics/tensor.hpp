#pragma once

// Dense row-major tensors (rank 1 or 2) with a dynamically recorded
// reverse-mode tape.
//
// A Tensor is a shared handle: copies alias the same storage, the way a
// framework tensor does. Every op returns a fresh node that keeps its
// inputs alive; parameters are leaves and never point forward into a
// graph, so dropping the loss frees the whole tape.
//
// Rank-1 tensors of length n behave as row vectors [1 x n] in every op.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace fcds::num {

using Shape = std::vector<std::size_t>;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << ']';
  return os.str();
}

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  bool leaf = true;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
  std::size_t rows() const { return shape.size() == 1 ? 1 : shape[0]; }
  std::size_t cols() const { return shape.size() == 1 ? shape[0] : shape[1]; }
};

inline std::size_t checked_numel(const Shape& shape) {
  if (shape.empty() || shape.size() > 2)
    throw ShapeError("tensor rank must be 1 or 2, got shape " + shape_str(shape));
  std::size_t n = 1;
  for (auto d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive: " + shape_str(shape));
    n *= d;
  }
  return n;
}

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false) {
    const auto n = detail::checked_numel(shape);
    if (values.size() != n)
      throw ShapeError("value count " + std::to_string(values.size()) + " does not match shape " +
                       shape_str(shape));
    auto node = std::make_shared<detail::Node>();
    node->shape = std::move(shape);
    node->value = std::move(values);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
  }
  static Tensor zeros(Shape shape, bool requires_grad = false) {
    const auto n = detail::checked_numel(shape);
    return from(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
  }
  static Tensor filled(Shape shape, double v) {
    const auto n = detail::checked_numel(shape);
    return from(std::move(shape), std::vector<double>(n, v));
  }
  static Tensor scalar(double v, bool requires_grad = false) { return from({1}, {v}, requires_grad); }
  static Tensor vector(std::vector<double> v, bool requires_grad = false) {
    Shape s{v.size()};
    return from(std::move(s), std::move(v), requires_grad);
  }
  static Tensor matrix(std::size_t r, std::size_t c, std::vector<double> v, bool requires_grad = false) {
    return from({r, c}, std::move(v), requires_grad);
  }

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t numel() const { return node_->value.size(); }
  std::size_t rows() const { return node_->rows(); }
  std::size_t cols() const { return node_->cols(); }

  std::span<const double> values() const { return node_->value; }
  // Leaves only: graph nodes downstream of a mutated leaf keep stale values.
  std::span<double> mutable_values() { return node_->value; }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() {
    node_->ensure_grad();
    return node_->grad;
  }
  bool has_grad() const { return node_->grad.size() == node_->value.size(); }

  double item() const {
    if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape()));
    return node_->value[0];
  }
  double operator[](std::size_t i) const { return node_->value.at(i); }
  double at(std::size_t r, std::size_t c) const { return node_->value.at(r * cols() + c); }

  bool requires_grad() const { return node_->requires_grad; }
  bool is_leaf() const { return node_->leaf; }
  Tensor& set_requires_grad(bool on) {
    if (!node_->leaf) throw std::logic_error("requires_grad can only be set on leaf tensors");
    node_->requires_grad = on;
    return *this;
  }
  void zero_grad() { node_->grad.clear(); }

  Tensor detach() const { return from(shape(), node_->value); }

  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

namespace detail {

// Records an op result. Inputs that need gradients become parents; the
// backward function reads self.grad and accumulates into parents.
inline Tensor record(Shape shape, std::vector<double> value, const std::vector<Tensor>& inputs,
                     std::function<void(Node&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  bool needs = false;
  for (const auto& t : inputs) needs = needs || t.requires_grad();
  if (needs) {
    node->requires_grad = true;
    node->leaf = false;
    node->parents.reserve(inputs.size());
    for (const auto& t : inputs) node->parents.push_back(t.node());
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor(std::move(node));
}

// Returns the parent's grad buffer when it participates, else nullptr.
inline double* grad_of(Node& self, std::size_t parent) {
  Node& p = *self.parents[parent];
  if (!p.requires_grad) return nullptr;
  p.ensure_grad();
  return p.grad.data();
}

inline std::size_t normalize_axis(const Tensor& x, int axis) {
  if (x.rank() == 1) {
    if (axis != 0 && axis != -1) throw ShapeError("axis out of range for rank-1 tensor");
    return 1;  // along the row of the [1 x n] view
  }
  if (axis == -1) axis = 1;
  if (axis != 0 && axis != 1) throw ShapeError("axis out of range for rank-2 tensor");
  return static_cast<std::size_t>(axis);
}

// Lanes of a reduction along `axis` over the 2-D view.
struct Lanes {
  std::size_t count, length, lane_stride, elem_stride;
  std::size_t index(std::size_t lane, std::size_t k) const { return lane * lane_stride + k * elem_stride; }
};

inline Lanes lanes_of(const Tensor& x, std::size_t axis) {
  const auto r = x.rows(), c = x.cols();
  if (axis == 1) return {r, c, c, 1};
  return {c, r, 1, c};
}

inline Shape reduced_shape(const Tensor& x, std::size_t axis) {
  if (x.rank() == 1) return {1};
  return {axis == 1 ? x.rows() : x.cols()};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Reverse pass.

// Accumulates d(loss)/d(t) into every participating leaf with
// requires_grad. Interior buffers are rebuilt on every call, so repeated
// calls add to the leaves without double counting.
inline void backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1)
    throw ShapeError("backward() needs a scalar loss, got shape " +
                     (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
  if (!loss.requires_grad()) return;

  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  for (auto* n : order)
    if (!n->leaf) n->grad.assign(n->value.size(), 0.0);
  loss.node()->ensure_grad();
  loss.node()->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if (!(*it)->leaf && (*it)->backward_fn) (*it)->backward_fn(**it);
}

// ---------------------------------------------------------------------------
// Elementwise.

enum class BinaryOp { Add, Sub, Mul };

inline Tensor binary(BinaryOp op, const Tensor& a, const Tensor& b) {
  const bool a_big = a.numel() >= b.numel();
  const Tensor& big = a_big ? a : b;
  const Tensor& small = a_big ? b : a;
  const std::size_t n = big.numel();
  const std::size_t last = big.cols();
  enum class Mode { Same, Scalar, Row } mode;
  if (small.numel() == n && small.cols() == big.cols())
    mode = Mode::Same;
  else if (small.numel() == 1)
    mode = Mode::Scalar;
  else if (small.numel() == last && small.rows() == 1)
    mode = Mode::Row;
  else
    throw ShapeError("incompatible shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()));

  auto bidx = [mode, last](std::size_t i) -> std::size_t {
    switch (mode) {
      case Mode::Same: return i;
      case Mode::Scalar: return 0;
      case Mode::Row: return i % last;
    }
    return i;
  };
  auto ai = [&](std::size_t i) { return a_big ? i : bidx(i); };
  auto bi = [&](std::size_t i) { return a_big ? bidx(i) : i; };

  std::vector<double> out(n);
  const auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < n; ++i) {
    const double x = av[ai(i)], y = bv[bi(i)];
    out[i] = op == BinaryOp::Add ? x + y : op == BinaryOp::Sub ? x - y : x * y;
  }
  return detail::record(big.shape(), std::move(out), {a, b}, [op, a_big, mode, last, n](detail::Node& self) {
    auto bidx = [mode, last](std::size_t i) -> std::size_t {
      return mode == Mode::Same ? i : mode == Mode::Scalar ? 0 : i % last;
    };
    const auto& av = self.parents[0]->value;
    const auto& bv = self.parents[1]->value;
    double* ga = detail::grad_of(self, 0);
    double* gb = detail::grad_of(self, 1);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t ia = a_big ? i : bidx(i), ib = a_big ? bidx(i) : i;
      const double g = self.grad[i];
      switch (op) {
        case BinaryOp::Add:
          if (ga) ga[ia] += g;
          if (gb) gb[ib] += g;
          break;
        case BinaryOp::Sub:
          if (ga) ga[ia] += g;
          if (gb) gb[ib] -= g;
          break;
        case BinaryOp::Mul:
          if (ga) ga[ia] += g * bv[ib];
          if (gb) gb[ib] += g * av[ia];
          break;
      }
    }
  });
}

inline Tensor add(const Tensor& a, const Tensor& b) { return binary(BinaryOp::Add, a, b); }
inline Tensor sub(const Tensor& a, const Tensor& b) { return binary(BinaryOp::Sub, a, b); }
inline Tensor mul(const Tensor& a, const Tensor& b) { return binary(BinaryOp::Mul, a, b); }

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }

namespace detail {

// f gives the value, df the derivative given (input, output).
template <class F, class DF>
Tensor unary(const Tensor& x, F f, DF df) {
  std::vector<double> out(x.numel());
  const auto xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(xv[i]);
  return record(x.shape(), std::move(out), {x}, [df](Node& self) {
    double* gx = grad_of(self, 0);
    if (!gx) return;
    const auto& xv = self.parents[0]->value;
    for (std::size_t i = 0; i < self.value.size(); ++i) gx[i] += self.grad[i] * df(xv[i], self.value[i]);
  });
}

}  // namespace detail

inline Tensor sigmoid(const Tensor& x) {
  return detail::unary(
      x,
      [](double v) { return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)); },
      [](double, double y) { return y * (1.0 - y); });
}
inline Tensor tanh(const Tensor& x) {
  return detail::unary(x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}
// Derivative at exactly zero is taken as 0. NaN passes through.
inline Tensor relu(const Tensor& x) {
  return detail::unary(x, [](double v) { return v < 0 ? 0.0 : v; }, [](double v, double) { return v > 0 ? 1.0 : 0.0; });
}
inline Tensor max_with_zero(const Tensor& x) { return relu(x); }
inline Tensor leaky_relu(const Tensor& x, double slope = 0.01) {
  return detail::unary(
      x, [slope](double v) { return v < 0 ? slope * v : v; }, [slope](double v, double) { return v > 0 ? 1.0 : slope; });
}
inline Tensor exp(const Tensor& x) {
  return detail::unary(x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}
inline Tensor log(const Tensor& x) {
  return detail::unary(x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}
inline Tensor scale(const Tensor& x, double k) {
  return detail::unary(x, [k](double v) { return k * v; }, [k](double, double) { return k; });
}
inline Tensor add_constant(const Tensor& x, double k) {
  return detail::unary(x, [k](double v) { return v + k; }, [](double, double) { return 1.0; });
}
inline Tensor neg(const Tensor& x) { return scale(x, -1.0); }

enum class ElementwiseOp { Add, Sub, Mul, Sigmoid, Tanh, Relu, LeakyRelu, MaxWithZero };

// Single dispatch point over the elementwise family; `slope` applies to
// LeakyRelu only.
inline Tensor elementwise(ElementwiseOp op, std::span<const Tensor> inputs, double slope = 0.01) {
  const std::size_t arity =
      (op == ElementwiseOp::Add || op == ElementwiseOp::Sub || op == ElementwiseOp::Mul) ? 2 : 1;
  if (inputs.size() != arity) throw ShapeError("elementwise: wrong number of inputs");
  switch (op) {
    case ElementwiseOp::Add: return add(inputs[0], inputs[1]);
    case ElementwiseOp::Sub: return sub(inputs[0], inputs[1]);
    case ElementwiseOp::Mul: return mul(inputs[0], inputs[1]);
    case ElementwiseOp::Sigmoid: return sigmoid(inputs[0]);
    case ElementwiseOp::Tanh: return tanh(inputs[0]);
    case ElementwiseOp::Relu: return relu(inputs[0]);
    case ElementwiseOp::LeakyRelu: return leaky_relu(inputs[0], slope);
    case ElementwiseOp::MaxWithZero: return max_with_zero(inputs[0]);
  }
  throw ShapeError("elementwise: unknown op");
}

// ---------------------------------------------------------------------------
// Linear algebra.

// numpy-style: a rank-1 left operand is a row vector and the result drops
// that axis; a rank-1 right operand is a column vector likewise.
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.rank() == 1 ? 1 : a.shape()[0];
  const std::size_t k = a.rank() == 1 ? a.shape()[0] : a.shape()[1];
  const std::size_t kb = b.rank() == 1 ? b.shape()[0] : b.shape()[0];
  const std::size_t n = b.rank() == 1 ? 1 : b.shape()[1];
  if (k != kb)
    throw ShapeError("matmul: inner dimensions differ, " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  std::vector<double> out(m * n, 0.0);
  const auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double x = av[i * k + p];
      if (x == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += x * bv[p * n + j];
    }
  Shape shape;
  if (a.rank() == 1 && b.rank() == 1)
    shape = {1};
  else if (a.rank() == 1)
    shape = {n};
  else if (b.rank() == 1)
    shape = {m};
  else
    shape = {m, n};
  return detail::record(std::move(shape), std::move(out), {a, b}, [m, k, n](detail::Node& self) {
    const auto& av = self.parents[0]->value;
    const auto& bv = self.parents[1]->value;
    const auto& g = self.grad;
    if (double* ga = detail::grad_of(self, 0))  // g . b^T
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0;
          for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * bv[p * n + j];
          ga[i * k + p] += s;
        }
    if (double* gb = detail::grad_of(self, 1))  // a^T . g
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double x = av[i * k + p];
          if (x == 0.0) continue;
          for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += x * g[i * n + j];
        }
  });
}

inline Tensor transpose(const Tensor& a) {
  const std::size_t r = a.rank() == 1 ? 1 : a.shape()[0];
  const std::size_t c = a.cols();
  std::vector<double> out(r * c);
  const auto av = a.values();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = av[i * c + j];
  return detail::record({c, r}, std::move(out), {a}, [r, c](detail::Node& self) {
    if (double* ga = detail::grad_of(self, 0))
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += self.grad[j * r + i];
  });
}

// Cosine similarity of two equally sized tensors, shape [1].
inline Tensor cosine(const Tensor& a, const Tensor& b) {
  if (a.numel() != b.numel()) throw ShapeError("cosine: size mismatch");
  const auto av = a.values(), bv = b.values();
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    dot += av[i] * bv[i];
    na += av[i] * av[i];
    nb += bv[i] * bv[i];
  }
  na = std::sqrt(na);
  nb = std::sqrt(nb);
  const double denom = na * nb;
  const double c = denom > 0 ? dot / denom : 0.0;
  return detail::record({1}, {c}, {a, b}, [dot, na, nb, c](detail::Node& self) {
    if (na == 0 || nb == 0) return;
    const double g = self.grad[0];
    const auto& av = self.parents[0]->value;
    const auto& bv = self.parents[1]->value;
    // d cos / d a = b/(|a||b|) - cos * a/|a|^2
    if (double* ga = detail::grad_of(self, 0))
      for (std::size_t i = 0; i < av.size(); ++i) ga[i] += g * (bv[i] / (na * nb) - c * av[i] / (na * na));
    if (double* gb = detail::grad_of(self, 1))
      for (std::size_t i = 0; i < bv.size(); ++i) gb[i] += g * (av[i] / (na * nb) - c * bv[i] / (nb * nb));
    (void)dot;
  });
}

// out[i][j] = m[i][j] / sum_k |m[i][k]|. Rows must have nonzero mass.
inline Tensor row_normalize_abs(const Tensor& m) {
  const std::size_t r = m.rows(), c = m.cols();
  std::vector<double> sums(r, 0.0), out(m.numel());
  const auto mv = m.values();
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) sums[i] += std::abs(mv[i * c + j]);
    if (sums[i] == 0.0) throw std::domain_error("row_normalize_abs: row " + std::to_string(i) + " has zero mass");
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = mv[i * c + j] / sums[i];
  }
  return detail::record(m.shape(), std::move(out), {m}, [r, c, sums](detail::Node& self) {
    double* gm = detail::grad_of(self, 0);
    if (!gm) return;
    const auto& mv = self.parents[0]->value;
    for (std::size_t i = 0; i < r; ++i) {
      const double s = sums[i];
      double gdotm = 0;
      for (std::size_t j = 0; j < c; ++j) gdotm += self.grad[i * c + j] * mv[i * c + j];
      for (std::size_t k = 0; k < c; ++k) {
        const double x = mv[i * c + k];
        const double sign = x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0);
        gm[i * c + k] += self.grad[i * c + k] / s - sign * gdotm / (s * s);
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Reductions.

enum class ReduceOp { Sum, Mean, Max, LogSumExp, Softmax };

inline Tensor sum(const Tensor& x) {
  double s = 0;
  for (double v : x.values()) s += v;
  return detail::record({1}, {s}, {x}, [](detail::Node& self) {
    if (double* gx = detail::grad_of(self, 0))
      for (std::size_t i = 0; i < self.parents[0]->value.size(); ++i) gx[i] += self.grad[0];
  });
}

inline Tensor sum(const Tensor& x, int axis) {
  const auto ax = detail::normalize_axis(x, axis);
  const auto L = detail::lanes_of(x, ax);
  std::vector<double> out(L.count, 0.0);
  const auto xv = x.values();
  for (std::size_t l = 0; l < L.count; ++l)
    for (std::size_t k = 0; k < L.length; ++k) out[l] += xv[L.index(l, k)];
  return detail::record(detail::reduced_shape(x, ax), std::move(out), {x}, [L](detail::Node& self) {
    if (double* gx = detail::grad_of(self, 0))
      for (std::size_t l = 0; l < L.count; ++l)
        for (std::size_t k = 0; k < L.length; ++k) gx[L.index(l, k)] += self.grad[l];
  });
}

inline Tensor mean(const Tensor& x, int axis) {
  const auto ax = detail::normalize_axis(x, axis);
  const auto L = detail::lanes_of(x, ax);
  return scale(sum(x, axis), 1.0 / static_cast<double>(L.length));
}

inline Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

// Gradient flows to the first maximal element of each lane.
inline Tensor max(const Tensor& x, int axis) {
  const auto ax = detail::normalize_axis(x, axis);
  const auto L = detail::lanes_of(x, ax);
  std::vector<double> out(L.count);
  std::vector<std::size_t> arg(L.count);
  const auto xv = x.values();
  for (std::size_t l = 0; l < L.count; ++l) {
    std::size_t best = L.index(l, 0);
    for (std::size_t k = 1; k < L.length; ++k)
      if (xv[L.index(l, k)] > xv[best]) best = L.index(l, k);
    arg[l] = best;
    out[l] = xv[best];
  }
  return detail::record(detail::reduced_shape(x, ax), std::move(out), {x}, [arg](detail::Node& self) {
    if (double* gx = detail::grad_of(self, 0))
      for (std::size_t l = 0; l < arg.size(); ++l) gx[arg[l]] += self.grad[l];
  });
}

// Max-shifted, so large inputs do not overflow.
inline Tensor logsumexp(const Tensor& x, int axis) {
  const auto ax = detail::normalize_axis(x, axis);
  const auto L = detail::lanes_of(x, ax);
  const auto xv = x.values();
  std::vector<double> out(L.count);
  std::vector<double> soft(x.numel());
  for (std::size_t l = 0; l < L.count; ++l) {
    double m = xv[L.index(l, 0)];
    for (std::size_t k = 1; k < L.length; ++k) m = std::max(m, xv[L.index(l, k)]);
    double s = 0;
    for (std::size_t k = 0; k < L.length; ++k) s += std::exp(xv[L.index(l, k)] - m);
    out[l] = m + std::log(s);
    for (std::size_t k = 0; k < L.length; ++k) soft[L.index(l, k)] = std::exp(xv[L.index(l, k)] - m) / s;
  }
  return detail::record(detail::reduced_shape(x, ax), std::move(out), {x}, [L, soft](detail::Node& self) {
    if (double* gx = detail::grad_of(self, 0))
      for (std::size_t l = 0; l < L.count; ++l)
        for (std::size_t k = 0; k < L.length; ++k) gx[L.index(l, k)] += self.grad[l] * soft[L.index(l, k)];
  });
}

inline Tensor softmax(const Tensor& x, int axis) {
  const auto ax = detail::normalize_axis(x, axis);
  const auto L = detail::lanes_of(x, ax);
  const auto xv = x.values();
  std::vector<double> out(x.numel());
  for (std::size_t l = 0; l < L.count; ++l) {
    double m = xv[L.index(l, 0)];
    for (std::size_t k = 1; k < L.length; ++k) m = std::max(m, xv[L.index(l, k)]);
    double s = 0;
    for (std::size_t k = 0; k < L.length; ++k) s += (out[L.index(l, k)] = std::exp(xv[L.index(l, k)] - m));
    for (std::size_t k = 0; k < L.length; ++k) out[L.index(l, k)] /= s;
  }
  return detail::record(x.shape(), std::move(out), {x}, [L](detail::Node& self) {
    double* gx = detail::grad_of(self, 0);
    if (!gx) return;
    const auto& y = self.value;
    for (std::size_t l = 0; l < L.count; ++l) {
      double dot = 0;
      for (std::size_t k = 0; k < L.length; ++k) dot += self.grad[L.index(l, k)] * y[L.index(l, k)];
      for (std::size_t k = 0; k < L.length; ++k) {
        const auto i = L.index(l, k);
        gx[i] += y[i] * (self.grad[i] - dot);
      }
    }
  });
}

inline Tensor reduce(ReduceOp op, const Tensor& x, int axis) {
  switch (op) {
    case ReduceOp::Sum: return sum(x, axis);
    case ReduceOp::Mean: return mean(x, axis);
    case ReduceOp::Max: return max(x, axis);
    case ReduceOp::LogSumExp: return logsumexp(x, axis);
    case ReduceOp::Softmax: return softmax(x, axis);
  }
  throw ShapeError("reduce: unknown op");
}

// ---------------------------------------------------------------------------
// Structural.

inline Tensor reshape(const Tensor& x, Shape shape) {
  if (detail::checked_numel(shape) != x.numel())
    throw ShapeError("reshape: " + shape_str(x.shape()) + " -> " + shape_str(shape));
  std::vector<double> out(x.values().begin(), x.values().end());
  return detail::record(std::move(shape), std::move(out), {x}, [](detail::Node& self) {
    if (double* gx = detail::grad_of(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) gx[i] += self.grad[i];
  });
}

inline Tensor flatten(const Tensor& x) { return reshape(x, {x.numel()}); }

// axis 0 joins along rows (rank-1 parts count as single rows unless every
// part is rank 1, which yields a rank-1 result); axis 1 joins columns.
inline Tensor concat(const std::vector<Tensor>& parts, int axis = 0) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const bool all_vectors =
      std::all_of(parts.begin(), parts.end(), [](const Tensor& t) { return t.rank() == 1; });
  if (axis == 0 || (axis == -1 && all_vectors)) {
    if (all_vectors) {
      std::vector<double> out;
      for (const auto& p : parts) out.insert(out.end(), p.values().begin(), p.values().end());
      Shape shape{out.size()};
      return detail::record(std::move(shape), std::move(out), parts, [](detail::Node& self) {
        std::size_t off = 0;
        for (std::size_t p = 0; p < self.parents.size(); ++p) {
          const auto n = self.parents[p]->value.size();
          if (double* g = detail::grad_of(self, p))
            for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[off + i];
          off += n;
        }
      });
    }
    const std::size_t c = parts.front().cols();
    std::size_t r = 0;
    std::vector<double> out;
    for (const auto& p : parts) {
      if (p.cols() != c) throw ShapeError("concat(axis 0): column counts differ");
      r += p.rows();
      out.insert(out.end(), p.values().begin(), p.values().end());
    }
    return detail::record({r, c}, std::move(out), parts, [](detail::Node& self) {
      std::size_t off = 0;
      for (std::size_t p = 0; p < self.parents.size(); ++p) {
        const auto n = self.parents[p]->value.size();
        if (double* g = detail::grad_of(self, p))
          for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[off + i];
        off += n;
      }
    });
  }
  if (axis != 1 && axis != -1) throw ShapeError("concat: axis must be 0 or 1");
  const std::size_t r = parts.front().rows();
  std::size_t c = 0;
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    if (p.rows() != r) throw ShapeError("concat(axis 1): row counts differ");
    offsets.push_back(c);
    c += p.cols();
  }
  std::vector<double> out(r * c);
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto pc = parts[p].cols();
    const auto pv = parts[p].values();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < pc; ++j) out[i * c + offsets[p] + j] = pv[i * pc + j];
  }
  return detail::record({r, c}, std::move(out), parts, [r, c, offsets](detail::Node& self) {
    for (std::size_t p = 0; p < self.parents.size(); ++p) {
      double* g = detail::grad_of(self, p);
      if (!g) continue;
      const auto pc = self.parents[p]->cols();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < pc; ++j) g[i * pc + j] += self.grad[i * c + offsets[p] + j];
    }
  });
}

// Stacks equally sized row vectors into a matrix [parts x n].
inline Tensor stack(const std::vector<Tensor>& rows) {
  if (rows.empty()) throw ShapeError("stack: no inputs");
  const auto n = rows.front().numel();
  for (const auto& r : rows)
    if (r.numel() != n || r.rows() != 1) throw ShapeError("stack: rows must be equally sized vectors");
  std::vector<double> out;
  out.reserve(rows.size() * n);
  for (const auto& r : rows) out.insert(out.end(), r.values().begin(), r.values().end());
  return detail::record({rows.size(), n}, std::move(out), rows, [n](detail::Node& self) {
    for (std::size_t p = 0; p < self.parents.size(); ++p)
      if (double* g = detail::grad_of(self, p))
        for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[p * n + i];
  });
}

// Half-open [begin, end) along `axis` (rank 1: elements; rank 2: rows or
// columns). Rank-2 row slices stay rank 2.
inline Tensor slice(const Tensor& x, int axis, std::size_t begin, std::size_t end) {
  if (x.rank() == 1) {
    if (axis != 0 && axis != -1) throw ShapeError("slice: bad axis");
    if (begin >= end || end > x.numel()) throw ShapeError("slice: range out of bounds");
    std::vector<double> out(x.values().begin() + begin, x.values().begin() + end);
    return detail::record({end - begin}, std::move(out), {x}, [begin](detail::Node& self) {
      if (double* g = detail::grad_of(self, 0))
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[begin + i] += self.grad[i];
    });
  }
  const std::size_t r = x.rows(), c = x.cols();
  const auto ax = detail::normalize_axis(x, axis);
  const std::size_t extent = ax == 0 ? r : c;
  if (begin >= end || end > extent) throw ShapeError("slice: range out of bounds");
  const std::size_t len = end - begin;
  const std::size_t orows = ax == 0 ? len : r, ocols = ax == 0 ? c : len;
  std::vector<double> out(orows * ocols);
  const auto xv = x.values();
  auto src = [=](std::size_t i, std::size_t j) { return ax == 0 ? (begin + i) * c + j : i * c + begin + j; };
  for (std::size_t i = 0; i < orows; ++i)
    for (std::size_t j = 0; j < ocols; ++j) out[i * ocols + j] = xv[src(i, j)];
  return detail::record({orows, ocols}, std::move(out), {x}, [=](detail::Node& self) {
    if (double* g = detail::grad_of(self, 0))
      for (std::size_t i = 0; i < orows; ++i)
        for (std::size_t j = 0; j < ocols; ++j) g[src(i, j)] += self.grad[i * ocols + j];
  });
}

// Row `i` of a matrix as a rank-1 tensor.
inline Tensor row(const Tensor& x, std::size_t i) { return flatten(slice(x, 0, i, i + 1)); }

// Rank 2: picks rows, duplicates allowed (backward scatter-adds). Rank 1:
// picks elements.
inline Tensor gather(const Tensor& x, const std::vector<std::size_t>& idx) {
  if (idx.empty()) throw ShapeError("gather: empty index list");
  const std::size_t r = x.rank() == 1 ? x.numel() : x.rows();
  const std::size_t c = x.rank() == 1 ? 1 : x.cols();
  for (auto i : idx)
    if (i >= r) throw ShapeError("gather: index " + std::to_string(i) + " out of range " + std::to_string(r));
  std::vector<double> out(idx.size() * c);
  const auto xv = x.values();
  for (std::size_t k = 0; k < idx.size(); ++k)
    for (std::size_t j = 0; j < c; ++j) out[k * c + j] = xv[idx[k] * c + j];
  Shape shape = x.rank() == 1 ? Shape{idx.size()} : Shape{idx.size(), c};
  return detail::record(std::move(shape), std::move(out), {x}, [idx, c](detail::Node& self) {
    if (double* g = detail::grad_of(self, 0))
      for (std::size_t k = 0; k < idx.size(); ++k)
        for (std::size_t j = 0; j < c; ++j) g[idx[k] * c + j] += self.grad[k * c + j];
  });
}

// Rank 1 pads elements, rank 2 pads rows, with zeros up to `length`.
inline Tensor zero_pad_to(const Tensor& x, std::size_t length) {
  const std::size_t have = x.rank() == 1 ? x.numel() : x.rows();
  if (length < have) throw ShapeError("zero_pad_to: tensor already longer than target");
  const std::size_t unit = x.rank() == 1 ? 1 : x.cols();
  std::vector<double> out(length * unit, 0.0);
  std::copy(x.values().begin(), x.values().end(), out.begin());
  Shape shape = x.rank() == 1 ? Shape{length} : Shape{length, unit};
  const std::size_t n = x.numel();
  return detail::record(std::move(shape), std::move(out), {x}, [n](detail::Node& self) {
    if (double* g = detail::grad_of(self, 0))
      for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[i];
  });
}

// Places values[k] at flat position positions[k] of a zero tensor.
inline Tensor scatter(const Tensor& values, Shape shape, const std::vector<std::size_t>& positions) {
  if (positions.size() != values.numel()) throw ShapeError("scatter: position count mismatch");
  const auto n = detail::checked_numel(shape);
  std::vector<double> out(n, 0.0);
  const auto vv = values.values();
  for (std::size_t k = 0; k < positions.size(); ++k) {
    if (positions[k] >= n) throw ShapeError("scatter: position out of range");
    out[positions[k]] += vv[k];
  }
  return detail::record(std::move(shape), std::move(out), {values}, [positions](detail::Node& self) {
    if (double* g = detail::grad_of(self, 0))
      for (std::size_t k = 0; k < positions.size(); ++k) g[k] += self.grad[positions[k]];
  });
}

}  // namespace fcds::num
