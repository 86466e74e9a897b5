#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "flap/core/params.hpp"

namespace flap::core {

// Reverse-mode autodiff over vector-valued nodes. A Tape instance is rebuilt
// per sample (reset() keeps arena capacity), so graphs may freely depend on
// runtime values. Parameter gradients accumulate into caller-owned flat
// buffers registered with bind(); binding with a null gradient pointer gives
// forward-only access (target networks, frozen encoders).
//
// Not thread-safe; use one Tape per worker block.
template <class Real>
class Tape {
 public:
  using Var = std::int32_t;

  int bind(const ParamBlock<Real>& pb, Real* grad) {
    bindings_.push_back({&pb, grad});
    return static_cast<int>(bindings_.size()) - 1;
  }

  void reset() {
    nodes_.clear();
    val_.clear();
  }

  // Bindings survive reset(); call this to drop them as well.
  void clear_bindings() { bindings_.clear(); }

  Var leaf(std::span<const Real> x) {
    Var v = push(Op::kLeaf, static_cast<int>(x.size()));
    Real* dst = val_.data() + nodes_.back().off;
    for (std::size_t i = 0; i < x.size(); ++i) dst[i] = x[i];
    return v;
  }

  Var leaf1(Real x) { return leaf(std::span<const Real>(&x, 1)); }

  // Injects a parameter tensor as a node; gradients flow into the binding.
  Var param(int block, int tensor) {
    const auto vals = bindings_.at(static_cast<std::size_t>(block)).pb->values(tensor);
    Var v = push(Op::kParam, static_cast<int>(vals.size()));
    Node& n = nodes_.back();
    n.block = block;
    n.wt = tensor;
    Real* dst = val_.data() + n.off;
    for (std::size_t i = 0; i < vals.size(); ++i) dst[i] = vals[i];
    return v;
  }

  // y = W x + b with W (out x in) and b (out) from a bound block.
  Var affine(int block, int w_tensor, int b_tensor, Var x) {
    const ParamBlock<Real>& pb = *bindings_.at(static_cast<std::size_t>(block)).pb;
    const auto& wt = pb.tensor(w_tensor);
    const auto& bt = pb.tensor(b_tensor);
    if (wt.cols != len(x) || bt.rows != wt.rows) throw std::invalid_argument("affine: shape mismatch");
    Var v = push(Op::kAffine, wt.rows, x);
    Node& n = nodes_.back();
    n.block = block;
    n.wt = w_tensor;
    n.bt = b_tensor;
    const Real* W = pb.data() + wt.offset;
    const Real* b = pb.data() + bt.offset;
    const Real* xv = val_.data() + nodes_[static_cast<std::size_t>(x)].off;
    Real* y = val_.data() + n.off;
    for (int r = 0; r < wt.rows; ++r) {
      Real acc = b[r];
      const Real* wr = W + static_cast<std::size_t>(r) * wt.cols;
      for (int c = 0; c < wt.cols; ++c) acc += wr[c] * xv[c];
      y[r] = acc;
    }
    return v;
  }

  Var relu(Var a) { return map1(Op::kRelu, a); }
  Var tanh_(Var a) { return map1(Op::kTanh, a); }
  Var exp_(Var a) { return map1(Op::kExp, a); }
  Var log_(Var a) { return map1(Op::kLog, a); }
  Var square(Var a) { return map1(Op::kSquare, a); }
  Var sqrt_(Var a) { return map1(Op::kSqrt, a); }

  Var clamp(Var a, Real lo, Real hi) {
    Var v = push(Op::kClamp, len(a), a);
    Node& n = nodes_.back();
    n.c0 = lo;
    n.c1 = hi;
    const Real* x = value_ptr(a);
    Real* y = val_.data() + n.off;
    for (int i = 0; i < n.len; ++i) y[i] = x[i] < lo ? lo : (x[i] > hi ? hi : x[i]);
    return v;
  }

  Var add(Var a, Var b) { return map2(Op::kAdd, a, b); }
  Var sub(Var a, Var b) { return map2(Op::kSub, a, b); }
  Var mul(Var a, Var b) { return map2(Op::kMul, a, b); }

  Var scale(Var a, Real s) {
    Var v = push(Op::kScale, len(a), a);
    nodes_.back().c0 = s;
    const Real* x = value_ptr(a);
    Real* y = val_.data() + nodes_.back().off;
    for (int i = 0; i < nodes_.back().len; ++i) y[i] = s * x[i];
    return v;
  }

  Var add_const(Var a, Real c) {
    Var v = push(Op::kAddConst, len(a), a);
    nodes_.back().c0 = c;
    const Real* x = value_ptr(a);
    Real* y = val_.data() + nodes_.back().off;
    for (int i = 0; i < nodes_.back().len; ++i) y[i] = x[i] + c;
    return v;
  }

  Var concat(Var a, Var b) {
    Var v = push(Op::kConcat2, len(a) + len(b), a, b);
    Real* y = val_.data() + nodes_.back().off;
    copy_to(a, y);
    copy_to(b, y + len(a));
    return v;
  }

  Var concat(Var a, Var b, Var c) {
    Var v = push(Op::kConcat3, len(a) + len(b) + len(c), a, b, c);
    Real* y = val_.data() + nodes_.back().off;
    copy_to(a, y);
    copy_to(b, y + len(a));
    copy_to(c, y + len(a) + len(b));
    return v;
  }

  Var sum(Var a) {
    Var v = push(Op::kSum, 1, a);
    const Real* x = value_ptr(a);
    Real acc = 0;
    for (int i = 0; i < len(a); ++i) acc += x[i];
    val_[static_cast<std::size_t>(nodes_.back().off)] = acc;
    return v;
  }

  Var dot(Var a, Var b) {
    if (len(a) != len(b)) throw std::invalid_argument("dot: length mismatch");
    Var v = push(Op::kDot, 1, a, b);
    const Real* x = value_ptr(a);
    const Real* y = value_ptr(b);
    Real acc = 0;
    for (int i = 0; i < len(a); ++i) acc += x[i] * y[i];
    val_[static_cast<std::size_t>(nodes_.back().off)] = acc;
    return v;
  }

  // Scalar minimum; the gradient follows the smaller input (ties go to a).
  Var min2(Var a, Var b) {
    if (len(a) != 1 || len(b) != 1) throw std::invalid_argument("min2: scalars required");
    Var v = push(Op::kMin2, 1, a, b);
    val_[static_cast<std::size_t>(nodes_.back().off)] = std::min(scalar(a), scalar(b));
    return v;
  }

  // Copies the value and blocks the gradient.
  Var detach(Var a) {
    Var v = push(Op::kDetach, len(a), a);
    copy_to(a, val_.data() + nodes_.back().off);
    return v;
  }

  std::span<const Real> value(Var v) const {
    const Node& n = nodes_.at(static_cast<std::size_t>(v));
    return {val_.data() + n.off, static_cast<std::size_t>(n.len)};
  }

  Real scalar(Var v) const {
    const Node& n = nodes_.at(static_cast<std::size_t>(v));
    assert(n.len == 1);
    return val_[static_cast<std::size_t>(n.off)];
  }

  int len(Var v) const { return nodes_.at(static_cast<std::size_t>(v)).len; }

  // Seeds d(loss)/d(loss) = seed and propagates. loss must be scalar.
  void backward(Var loss, Real seed = Real(1)) {
    if (len(loss) != 1) throw std::invalid_argument("backward: scalar loss required");
    grad_.assign(val_.size(), Real(0));
    grad_[static_cast<std::size_t>(nodes_[static_cast<std::size_t>(loss)].off)] = seed;
    for (std::int32_t i = static_cast<std::int32_t>(nodes_.size()) - 1; i >= 0; --i) {
      backward_node(nodes_[static_cast<std::size_t>(i)]);
    }
  }

 private:
  enum class Op : std::uint8_t {
    kLeaf,
    kParam,
    kAffine,
    kRelu,
    kTanh,
    kExp,
    kLog,
    kSquare,
    kSqrt,
    kClamp,
    kAdd,
    kSub,
    kMul,
    kScale,
    kAddConst,
    kConcat2,
    kConcat3,
    kSum,
    kDot,
    kMin2,
    kDetach,
  };

  struct Node {
    Op op;
    Var a = -1, b = -1, c = -1;
    std::int32_t block = -1, wt = -1, bt = -1;
    Real c0{}, c1{};
    std::int32_t off = 0, len = 0;
  };

  struct Binding {
    const ParamBlock<Real>* pb;
    Real* grad;
  };

  Var push(Op op, int n_out, Var a = -1, Var b = -1, Var c = -1) {
    Node n;
    n.op = op;
    n.a = a;
    n.b = b;
    n.c = c;
    n.off = static_cast<std::int32_t>(val_.size());
    n.len = n_out;
    val_.resize(val_.size() + static_cast<std::size_t>(n_out), Real(0));
    nodes_.push_back(n);
    return static_cast<Var>(nodes_.size()) - 1;
  }

  Var map1(Op op, Var a) {
    Var v = push(op, len(a), a);
    const Real* x = value_ptr(a);
    Real* y = val_.data() + nodes_.back().off;
    const int n = nodes_.back().len;
    switch (op) {
      case Op::kRelu:
        for (int i = 0; i < n; ++i) y[i] = x[i] > Real(0) ? x[i] : Real(0);
        break;
      case Op::kTanh:
        for (int i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
        break;
      case Op::kExp:
        for (int i = 0; i < n; ++i) y[i] = std::exp(x[i]);
        break;
      case Op::kLog:
        for (int i = 0; i < n; ++i) y[i] = std::log(x[i]);
        break;
      case Op::kSquare:
        for (int i = 0; i < n; ++i) y[i] = x[i] * x[i];
        break;
      case Op::kSqrt:
        for (int i = 0; i < n; ++i) y[i] = std::sqrt(x[i]);
        break;
      default:
        assert(false);
    }
    return v;
  }

  Var map2(Op op, Var a, Var b) {
    if (len(a) != len(b)) throw std::invalid_argument("elementwise op: length mismatch");
    Var v = push(op, len(a), a, b);
    const Real* x = value_ptr(a);
    const Real* y = value_ptr(b);
    Real* z = val_.data() + nodes_.back().off;
    const int n = nodes_.back().len;
    switch (op) {
      case Op::kAdd:
        for (int i = 0; i < n; ++i) z[i] = x[i] + y[i];
        break;
      case Op::kSub:
        for (int i = 0; i < n; ++i) z[i] = x[i] - y[i];
        break;
      case Op::kMul:
        for (int i = 0; i < n; ++i) z[i] = x[i] * y[i];
        break;
      default:
        assert(false);
    }
    return v;
  }

  const Real* value_ptr(Var v) const { return val_.data() + nodes_[static_cast<std::size_t>(v)].off; }
  Real* grad_ptr(Var v) { return grad_.data() + nodes_[static_cast<std::size_t>(v)].off; }

  void copy_to(Var v, Real* dst) const {
    const Real* src = value_ptr(v);
    for (int i = 0; i < nodes_[static_cast<std::size_t>(v)].len; ++i) dst[i] = src[i];
  }

  void backward_node(const Node& n) {
    const Real* g = grad_.data() + n.off;
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kParam: {
        Real* sink = bindings_[static_cast<std::size_t>(n.block)].grad;
        if (sink != nullptr) {
          const auto& ts = bindings_[static_cast<std::size_t>(n.block)].pb->tensor(n.wt);
          Real* gp = sink + ts.offset;
          for (int i = 0; i < n.len; ++i) gp[i] += g[i];
        }
        break;
      }
      case Op::kAffine: {
        const Binding& bind = bindings_[static_cast<std::size_t>(n.block)];
        const auto& wt = bind.pb->tensor(n.wt);
        const Real* W = bind.pb->data() + wt.offset;
        const Real* xv = value_ptr(n.a);
        Real* gx = grad_ptr(n.a);
        for (int r = 0; r < wt.rows; ++r) {
          const Real gr = g[r];
          if (gr == Real(0)) continue;
          const Real* wr = W + static_cast<std::size_t>(r) * wt.cols;
          for (int c = 0; c < wt.cols; ++c) gx[c] += gr * wr[c];
        }
        if (bind.grad != nullptr) {
          Real* gw = bind.grad + wt.offset;
          Real* gb = bind.grad + bind.pb->tensor(n.bt).offset;
          for (int r = 0; r < wt.rows; ++r) {
            const Real gr = g[r];
            gb[r] += gr;
            if (gr == Real(0)) continue;
            Real* gwr = gw + static_cast<std::size_t>(r) * wt.cols;
            for (int c = 0; c < wt.cols; ++c) gwr[c] += gr * xv[c];
          }
        }
        break;
      }
      case Op::kRelu: {
        const Real* x = value_ptr(n.a);
        Real* gx = grad_ptr(n.a);
        for (int i = 0; i < n.len; ++i) gx[i] += x[i] > Real(0) ? g[i] : Real(0);
        break;
      }
      case Op::kTanh: {
        const Real* y = val_.data() + n.off;
        Real* gx = grad_ptr(n.a);
        for (int i = 0; i < n.len; ++i) gx[i] += g[i] * (Real(1) - y[i] * y[i]);
        break;
      }
      case Op::kExp: {
        const Real* y = val_.data() + n.off;
        Real* gx = grad_ptr(n.a);
        for (int i = 0; i < n.len; ++i) gx[i] += g[i] * y[i];
        break;
      }
      case Op::kLog: {
        const Real* x = value_ptr(n.a);
        Real* gx = grad_ptr(n.a);
        for (int i = 0; i < n.len; ++i) gx[i] += g[i] / x[i];
        break;
      }
      case Op::kSquare: {
        const Real* x = value_ptr(n.a);
        Real* gx = grad_ptr(n.a);
        for (int i = 0; i < n.len; ++i) gx[i] += g[i] * Real(2) * x[i];
        break;
      }
      case Op::kSqrt: {
        const Real* y = val_.data() + n.off;
        Real* gx = grad_ptr(n.a);
        for (int i = 0; i < n.len; ++i) gx[i] += g[i] / (Real(2) * y[i]);
        break;
      }
      case Op::kClamp: {
        const Real* x = value_ptr(n.a);
        Real* gx = grad_ptr(n.a);
        for (int i = 0; i < n.len; ++i) {
          if (x[i] >= n.c0 && x[i] <= n.c1) gx[i] += g[i];
        }
        break;
      }
      case Op::kAdd: {
        Real* ga = grad_ptr(n.a);
        Real* gb = grad_ptr(n.b);
        for (int i = 0; i < n.len; ++i) {
          ga[i] += g[i];
          gb[i] += g[i];
        }
        break;
      }
      case Op::kSub: {
        Real* ga = grad_ptr(n.a);
        Real* gb = grad_ptr(n.b);
        for (int i = 0; i < n.len; ++i) {
          ga[i] += g[i];
          gb[i] -= g[i];
        }
        break;
      }
      case Op::kMul: {
        const Real* xa = value_ptr(n.a);
        const Real* xb = value_ptr(n.b);
        Real* ga = grad_ptr(n.a);
        Real* gb = grad_ptr(n.b);
        for (int i = 0; i < n.len; ++i) {
          ga[i] += g[i] * xb[i];
          gb[i] += g[i] * xa[i];
        }
        break;
      }
      case Op::kScale: {
        Real* gx = grad_ptr(n.a);
        for (int i = 0; i < n.len; ++i) gx[i] += g[i] * n.c0;
        break;
      }
      case Op::kAddConst: {
        Real* gx = grad_ptr(n.a);
        for (int i = 0; i < n.len; ++i) gx[i] += g[i];
        break;
      }
      case Op::kConcat2: {
        Real* ga = grad_ptr(n.a);
        Real* gb = grad_ptr(n.b);
        const int la = nodes_[static_cast<std::size_t>(n.a)].len;
        const int lb = nodes_[static_cast<std::size_t>(n.b)].len;
        for (int i = 0; i < la; ++i) ga[i] += g[i];
        for (int i = 0; i < lb; ++i) gb[i] += g[la + i];
        break;
      }
      case Op::kConcat3: {
        Real* ga = grad_ptr(n.a);
        Real* gb = grad_ptr(n.b);
        Real* gc = grad_ptr(n.c);
        const int la = nodes_[static_cast<std::size_t>(n.a)].len;
        const int lb = nodes_[static_cast<std::size_t>(n.b)].len;
        const int lc = nodes_[static_cast<std::size_t>(n.c)].len;
        for (int i = 0; i < la; ++i) ga[i] += g[i];
        for (int i = 0; i < lb; ++i) gb[i] += g[la + i];
        for (int i = 0; i < lc; ++i) gc[i] += g[la + lb + i];
        break;
      }
      case Op::kSum: {
        Real* gx = grad_ptr(n.a);
        const int la = nodes_[static_cast<std::size_t>(n.a)].len;
        for (int i = 0; i < la; ++i) gx[i] += g[0];
        break;
      }
      case Op::kDot: {
        const Real* xa = value_ptr(n.a);
        const Real* xb = value_ptr(n.b);
        Real* ga = grad_ptr(n.a);
        Real* gb = grad_ptr(n.b);
        const int la = nodes_[static_cast<std::size_t>(n.a)].len;
        for (int i = 0; i < la; ++i) {
          ga[i] += g[0] * xb[i];
          gb[i] += g[0] * xa[i];
        }
        break;
      }
      case Op::kMin2: {
        const Real va = scalar(n.a);
        const Real vb = scalar(n.b);
        if (va <= vb) {
          grad_ptr(n.a)[0] += g[0];
        } else {
          grad_ptr(n.b)[0] += g[0];
        }
        break;
      }
      case Op::kDetach:
        break;
    }
  }

  std::vector<Node> nodes_;
  std::vector<Binding> bindings_;
  std::vector<Real> val_;
  std::vector<Real> grad_;
};

}  // namespace flap::core
