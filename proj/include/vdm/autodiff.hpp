#pragma once

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "vdm/common.hpp"
#include "vdm/gaussian.hpp"
#include "vdm/tensor.hpp"

// Reverse-mode autodiff over vector-valued nodes.
//
// Network code is written once as a template over a context type:
//   EvalCtx — eager evaluation on plain Vec, no recording (rollouts, rewards)
//   GradCtx — records a Tape of the same arithmetic and can backpropagate
// Both contexts route through the same kernels below, so their outputs are
// bit-identical for identical inputs.

namespace vdm {

enum class Act { Identity, Relu, Tanh, Softplus };

namespace kernels {

inline double apply_act(double x, Act a) {
  switch (a) {
    case Act::Identity: return x;
    case Act::Relu: return x > 0.0 ? x : 0.0;
    case Act::Tanh: return std::tanh(x);
    case Act::Softplus: return (x > 0.0 ? x : 0.0) + std::log1p(std::exp(-std::abs(x)));
  }
  return x;
}

// Derivative in terms of input x and output y.
inline double act_grad(double x, double y, Act a) {
  switch (a) {
    case Act::Identity: return 1.0;
    case Act::Relu: return x > 0.0 ? 1.0 : 0.0;
    case Act::Tanh: return 1.0 - y * y;
    case Act::Softplus: return 1.0 / (1.0 + std::exp(-x));
  }
  return 1.0;
}

// out = W * concat(parts...) + b, parts given as pointers to segments.
inline void affine(const Mat& W, const Mat& b, std::initializer_list<const Vec*> parts, Vec& out) {
  int expected = 0;
  for (const Vec* p : parts) expected += static_cast<int>(p->size());
  if (expected != W.cols || W.rows != b.rows) {
    throw ConfigError("affine: input length " + std::to_string(expected) +
                      " does not match weight shape " + std::to_string(W.rows) + "x" +
                      std::to_string(W.cols));
  }
  out.assign(static_cast<std::size_t>(W.rows), 0.0);
  for (int r = 0; r < W.rows; ++r) {
    const double* wrow = &W.a[static_cast<std::size_t>(r) * W.cols];
    double acc = b.a[static_cast<std::size_t>(r)];
    int off = 0;
    for (const Vec* p : parts) {
      const double* x = p->data();
      int n = static_cast<int>(p->size());
      for (int c = 0; c < n; ++c) acc += wrow[off + c] * x[c];
      off += n;
    }
    out[static_cast<std::size_t>(r)] = acc;
  }
}

// Accumulate gradients of an affine node. `gx` segments may be null for
// constant inputs.
inline void affine_backward(const Mat& W, std::initializer_list<std::pair<const Vec*, Vec*>> parts,
                            const Vec& gy, Mat& gW, Mat& gb) {
  for (int r = 0; r < W.rows; ++r) {
    double g = gy[static_cast<std::size_t>(r)];
    if (g == 0.0) continue;
    gb.a[static_cast<std::size_t>(r)] += g;
    double* gwrow = &gW.a[static_cast<std::size_t>(r) * W.cols];
    const double* wrow = &W.a[static_cast<std::size_t>(r) * W.cols];
    int off = 0;
    for (auto& [xv, gx] : parts) {
      int n = static_cast<int>(xv->size());
      const double* x = xv->data();
      for (int c = 0; c < n; ++c) gwrow[off + c] += g * x[c];
      if (gx != nullptr) {
        double* gxd = gx->data();
        for (int c = 0; c < n; ++c) gxd[c] += g * wrow[off + c];
      }
      off += n;
    }
  }
}

inline double glp(const Vec& x, const Vec& mean, const Vec& std) {
  double acc = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    double z = (x[j] - mean[j]) / std[j];
    acc += -0.5 * kLogTwoPi - std::log(std[j]) - 0.5 * z * z;
  }
  return acc;
}

inline double kl_diag(const Vec& qm, const Vec& qs, const Vec& pm, const Vec& ps) {
  double acc = 0.0;
  for (std::size_t j = 0; j < qm.size(); ++j) {
    double dm = qm[j] - pm[j];
    acc += std::log(ps[j]) - std::log(qs[j]) + (qs[j] * qs[j] + dm * dm) / (2.0 * ps[j] * ps[j]) -
           0.5;
  }
  return acc;
}

inline void softmax(const Vec& logits, Vec& probs) {
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  probs.resize(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - mx);
    z += probs[i];
  }
  for (double& p : probs) p /= z;
}

inline double log_softmax_pick(const Vec& logits, int action) {
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double z = 0.0;
  for (double v : logits) z += std::exp(v - mx);
  return logits[static_cast<std::size_t>(action)] - mx - std::log(z);
}

inline double entropy(const Vec& logits) {
  Vec probs;
  softmax(logits, probs);
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

}  // namespace kernels

// ---------------------------------------------------------------------------
// EvalCtx: eager forward evaluation on plain vectors.
// ---------------------------------------------------------------------------
class EvalCtx {
 public:
  using V = Vec;
  using S = double;

  explicit EvalCtx(const ParamSet& ps) : ps_(&ps) {}

  const ParamSet& params() const { return *ps_; }

  V constant(Vec v) const { return v; }

  V affine(ParamId W, ParamId b, const Vec& x) const {
    Vec out;
    kernels::affine(ps_->value(W), ps_->value(b), {&x}, out);
    return out;
  }
  V affine(ParamId W, ParamId b, const V& x, const Vec& side) const {
    Vec out;
    kernels::affine(ps_->value(W), ps_->value(b), {&x, &side}, out);
    return out;
  }
  V affine2(ParamId W, ParamId b, const V& x, const V& y) const {
    Vec out;
    kernels::affine(ps_->value(W), ps_->value(b), {&x, &y}, out);
    return out;
  }

  V activation(V x, Act a) const {
    if (a == Act::Identity) return x;
    for (double& v : x) v = kernels::apply_act(v, a);
    return x;
  }

  V add_scalar(V x, double c) const {
    for (double& v : x) v += c;
    return x;
  }

  V add(const V& x, const V& y) const {
    if (x.size() != y.size()) throw ConfigError("add: width mismatch");
    Vec out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + y[i];
    return out;
  }

  V reparam(const V& mean, const V& std, const Vec& noise) const {
    if (noise.size() != mean.size()) throw DomainError("reparam: length mismatch");
    Vec z(mean.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = mean[i] + std[i] * noise[i];
    return z;
  }

  S glp(const Vec& target, const V& mean, const V& std) const {
    return kernels::glp(target, mean, std);
  }
  S kl(const V& qm, const V& qs, const V& pm, const V& ps) const {
    return kernels::kl_diag(qm, qs, pm, ps);
  }
  S kl_const_p(const V& qm, const V& qs, const Vec& pm, const Vec& ps) const {
    return kernels::kl_diag(qm, qs, pm, ps);
  }

  // Sum of squared errors against a constant target.
  S sse(const Vec& target, const V& x) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += (x[i] - target[i]) * (x[i] - target[i]);
    return acc;
  }

  S log_softmax_pick(const V& logits, int action) const {
    return kernels::log_softmax_pick(logits, action);
  }
  S entropy(const V& logits) const { return kernels::entropy(logits); }
  S pick(const V& x, int i) const { return x[static_cast<std::size_t>(i)]; }

  S s_const(double c) const { return c; }
  S s_add(S a, S b) const { return a + b; }
  S s_sub(S a, S b) const { return a - b; }
  S s_add_const(S a, double c) const { return a + c; }
  S s_mul_const(S a, double c) const { return a * c; }
  S s_mul(S a, S b) const { return a * b; }
  S s_exp(S a) const { return std::exp(a); }
  S s_min(S a, S b) const { return a < b ? a : b; }
  S s_clamp(S a, double lo, double hi) const { return a < lo ? lo : (a > hi ? hi : a); }
  S s_sum(const std::vector<S>& xs, double scale) const {
    double acc = 0.0;
    for (double x : xs) acc += x;
    return acc * scale;
  }

  double scalar(S s) const { return s; }

 private:
  const ParamSet* ps_;
};

// ---------------------------------------------------------------------------
// Tape + GradCtx: recorded forward with exact reverse-mode gradients.
// ---------------------------------------------------------------------------
struct NodeId {
  int idx = -1;
};

class Tape {
 public:
  explicit Tape(const ParamSet& ps) : ps_(&ps) {}

  const ParamSet& params() const { return *ps_; }

  const Vec& value(NodeId id) const { return nodes_[static_cast<std::size_t>(id.idx)].val; }
  double scalar(NodeId id) const { return value(id)[0]; }

  // Reverse pass from a scalar loss node; accumulates parameter gradients
  // into `out` (which the caller zeroes or accumulates across calls as
  // needed). A tape can only be walked backward once.
  void backward(NodeId loss, Grads& out) {
    if (consumed_) throw UsageError("Tape::backward: tape already consumed");
    consumed_ = true;
    if (value(loss).size() != 1) throw UsageError("Tape::backward: loss is not a scalar");
    for (auto& n : nodes_) n.grad.assign(n.val.size(), 0.0);
    nodes_[static_cast<std::size_t>(loss.idx)].grad[0] = 1.0;
    grads_out_ = &out;
    for (int i = loss.idx; i >= 0; --i) {
      Node& n = nodes_[static_cast<std::size_t>(i)];
      if (n.back) n.back(*this, n);
    }
    grads_out_ = nullptr;
  }

  NodeId constant(Vec v) { return push(std::move(v), nullptr); }

  NodeId affine(ParamId W, ParamId b, const Vec& x) {
    Vec out;
    kernels::affine(ps_->value(W), ps_->value(b), {&x}, out);
    Vec xc = x;  // keep the leaf input alive for the backward pass
    return push(std::move(out), [W, b, xc = std::move(xc)](Tape& t, Node& n) {
      kernels::affine_backward(t.ps_->value(W), {{&xc, nullptr}}, n.grad, t.gw(W), t.gw(b));
    });
  }

  NodeId affine(ParamId W, ParamId b, NodeId x) {
    Vec out;
    kernels::affine(ps_->value(W), ps_->value(b), {&value(x)}, out);
    return push(std::move(out), [W, b, x](Tape& t, Node& n) {
      kernels::affine_backward(t.ps_->value(W), {{&t.val(x), &t.grad(x)}}, n.grad, t.gw(W),
                               t.gw(b));
    });
  }

  NodeId affine(ParamId W, ParamId b, NodeId x, const Vec& side) {
    Vec out;
    kernels::affine(ps_->value(W), ps_->value(b), {&value(x), &side}, out);
    Vec sc = side;
    return push(std::move(out), [W, b, x, sc = std::move(sc)](Tape& t, Node& n) {
      kernels::affine_backward(t.ps_->value(W), {{&t.val(x), &t.grad(x)}, {&sc, nullptr}}, n.grad,
                               t.gw(W), t.gw(b));
    });
  }

  NodeId affine2(ParamId W, ParamId b, NodeId x, NodeId y) {
    Vec out;
    kernels::affine(ps_->value(W), ps_->value(b), {&value(x), &value(y)}, out);
    return push(std::move(out), [W, b, x, y](Tape& t, Node& n) {
      kernels::affine_backward(t.ps_->value(W),
                               {{&t.val(x), &t.grad(x)}, {&t.val(y), &t.grad(y)}}, n.grad, t.gw(W),
                               t.gw(b));
    });
  }

  NodeId activation(NodeId x, Act a) {
    if (a == Act::Identity) return x;
    const Vec& xin = value(x);
    Vec out(xin.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = kernels::apply_act(xin[i], a);
    return push(std::move(out), [x, a](Tape& t, Node& n) {
      const Vec& xv = t.val(x);
      Vec& gx = t.grad(x);
      for (std::size_t i = 0; i < n.val.size(); ++i) {
        gx[i] += n.grad[i] * kernels::act_grad(xv[i], n.val[i], a);
      }
    });
  }

  NodeId add_scalar(NodeId x, double c) {
    Vec out = value(x);
    for (double& v : out) v += c;
    return push(std::move(out), [x](Tape& t, Node& n) {
      Vec& gx = t.grad(x);
      for (std::size_t i = 0; i < n.grad.size(); ++i) gx[i] += n.grad[i];
    });
  }

  NodeId add(NodeId x, NodeId y) {
    const Vec& xv = value(x);
    const Vec& yv = value(y);
    if (xv.size() != yv.size()) throw ConfigError("add: width mismatch");
    Vec out(xv.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] + yv[i];
    return push(std::move(out), [x, y](Tape& t, Node& n) {
      Vec& gx = t.grad(x);
      Vec& gy = t.grad(y);
      for (std::size_t i = 0; i < n.grad.size(); ++i) {
        gx[i] += n.grad[i];
        gy[i] += n.grad[i];
      }
    });
  }

  NodeId reparam(NodeId mean, NodeId std, const Vec& noise) {
    const Vec& m = value(mean);
    const Vec& s = value(std);
    if (noise.size() != m.size()) throw DomainError("reparam: length mismatch");
    Vec out(m.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = m[i] + s[i] * noise[i];
    Vec nc = noise;
    return push(std::move(out), [mean, std, nc = std::move(nc)](Tape& t, Node& n) {
      Vec& gm = t.grad(mean);
      Vec& gs = t.grad(std);
      for (std::size_t i = 0; i < n.grad.size(); ++i) {
        gm[i] += n.grad[i];
        gs[i] += n.grad[i] * nc[i];
      }
    });
  }

  NodeId glp(const Vec& target, NodeId mean, NodeId std) {
    double v = kernels::glp(target, value(mean), value(std));
    Vec tc = target;
    return push(Vec{v}, [mean, std, tc = std::move(tc)](Tape& t, Node& n) {
      double g = n.grad[0];
      const Vec& m = t.val(mean);
      const Vec& s = t.val(std);
      Vec& gm = t.grad(mean);
      Vec& gs = t.grad(std);
      for (std::size_t j = 0; j < tc.size(); ++j) {
        double d = tc[j] - m[j];
        double s2 = s[j] * s[j];
        gm[j] += g * d / s2;
        gs[j] += g * (d * d / (s2 * s[j]) - 1.0 / s[j]);
      }
    });
  }

  NodeId kl(NodeId qm, NodeId qs, NodeId pm, NodeId ps) {
    double v = kernels::kl_diag(value(qm), value(qs), value(pm), value(ps));
    return push(Vec{v}, [qm, qs, pm, ps](Tape& t, Node& n) {
      double g = n.grad[0];
      const Vec& qmv = t.val(qm);
      const Vec& qsv = t.val(qs);
      const Vec& pmv = t.val(pm);
      const Vec& psv = t.val(ps);
      for (std::size_t j = 0; j < qmv.size(); ++j) {
        double dm = qmv[j] - pmv[j];
        double ps2 = psv[j] * psv[j];
        t.grad(qm)[j] += g * dm / ps2;
        t.grad(pm)[j] += -g * dm / ps2;
        t.grad(qs)[j] += g * (qsv[j] / ps2 - 1.0 / qsv[j]);
        t.grad(ps)[j] += g * (1.0 / psv[j] - (qsv[j] * qsv[j] + dm * dm) / (ps2 * psv[j]));
      }
    });
  }

  NodeId kl_const_p(NodeId qm, NodeId qs, const Vec& pm, const Vec& ps) {
    double v = kernels::kl_diag(value(qm), value(qs), pm, ps);
    Vec pmc = pm, psc = ps;
    return push(Vec{v}, [qm, qs, pmc = std::move(pmc), psc = std::move(psc)](Tape& t, Node& n) {
      double g = n.grad[0];
      const Vec& qmv = t.val(qm);
      const Vec& qsv = t.val(qs);
      for (std::size_t j = 0; j < qmv.size(); ++j) {
        double dm = qmv[j] - pmc[j];
        double ps2 = psc[j] * psc[j];
        t.grad(qm)[j] += g * dm / ps2;
        t.grad(qs)[j] += g * (qsv[j] / ps2 - 1.0 / qsv[j]);
      }
    });
  }

  NodeId sse(const Vec& target, NodeId x) {
    const Vec& xv = value(x);
    double acc = 0.0;
    for (std::size_t i = 0; i < xv.size(); ++i) acc += (xv[i] - target[i]) * (xv[i] - target[i]);
    Vec tc = target;
    return push(Vec{acc}, [x, tc = std::move(tc)](Tape& t, Node& n) {
      double g = n.grad[0];
      const Vec& xv = t.val(x);
      Vec& gx = t.grad(x);
      for (std::size_t i = 0; i < xv.size(); ++i) gx[i] += g * 2.0 * (xv[i] - tc[i]);
    });
  }

  NodeId log_softmax_pick(NodeId logits, int action) {
    double v = kernels::log_softmax_pick(value(logits), action);
    return push(Vec{v}, [logits, action](Tape& t, Node& n) {
      double g = n.grad[0];
      Vec probs;
      kernels::softmax(t.val(logits), probs);
      Vec& gl = t.grad(logits);
      for (std::size_t i = 0; i < probs.size(); ++i) {
        gl[i] += g * ((static_cast<int>(i) == action ? 1.0 : 0.0) - probs[i]);
      }
    });
  }

  NodeId entropy(NodeId logits) {
    double h = kernels::entropy(value(logits));
    return push(Vec{h}, [logits, h](Tape& t, Node& n) {
      double g = n.grad[0];
      Vec probs;
      kernels::softmax(t.val(logits), probs);
      Vec& gl = t.grad(logits);
      for (std::size_t i = 0; i < probs.size(); ++i) {
        double lp = probs[i] > 0.0 ? std::log(probs[i]) : 0.0;
        gl[i] += -g * probs[i] * (lp + h);
      }
    });
  }

  NodeId pick(NodeId x, int i) {
    double v = value(x)[static_cast<std::size_t>(i)];
    return push(Vec{v}, [x, i](Tape& t, Node& n) {
      t.grad(x)[static_cast<std::size_t>(i)] += n.grad[0];
    });
  }

  NodeId s_const(double c) { return push(Vec{c}, nullptr); }

  NodeId s_add(NodeId a, NodeId b) {
    return push(Vec{scalar(a) + scalar(b)}, [a, b](Tape& t, Node& n) {
      t.grad(a)[0] += n.grad[0];
      t.grad(b)[0] += n.grad[0];
    });
  }

  NodeId s_sub(NodeId a, NodeId b) {
    return push(Vec{scalar(a) - scalar(b)}, [a, b](Tape& t, Node& n) {
      t.grad(a)[0] += n.grad[0];
      t.grad(b)[0] -= n.grad[0];
    });
  }

  NodeId s_add_const(NodeId a, double c) {
    return push(Vec{scalar(a) + c},
                [a](Tape& t, Node& n) { t.grad(a)[0] += n.grad[0]; });
  }

  NodeId s_mul_const(NodeId a, double c) {
    return push(Vec{scalar(a) * c},
                [a, c](Tape& t, Node& n) { t.grad(a)[0] += n.grad[0] * c; });
  }

  NodeId s_mul(NodeId a, NodeId b) {
    return push(Vec{scalar(a) * scalar(b)}, [a, b](Tape& t, Node& n) {
      t.grad(a)[0] += n.grad[0] * t.val(b)[0];
      t.grad(b)[0] += n.grad[0] * t.val(a)[0];
    });
  }

  NodeId s_exp(NodeId a) {
    double v = std::exp(scalar(a));
    return push(Vec{v}, [a, v](Tape& t, Node& n) { t.grad(a)[0] += n.grad[0] * v; });
  }

  // min routes the gradient to the smaller argument (ties go to the first).
  NodeId s_min(NodeId a, NodeId b) {
    bool first = scalar(a) <= scalar(b);
    return push(Vec{first ? scalar(a) : scalar(b)}, [a, b, first](Tape& t, Node& n) {
      t.grad(first ? a : b)[0] += n.grad[0];
    });
  }

  // Gradient is zero outside [lo, hi].
  NodeId s_clamp(NodeId a, double lo, double hi) {
    double x = scalar(a);
    bool inside = x >= lo && x <= hi;
    return push(Vec{x < lo ? lo : (x > hi ? hi : x)}, [a, inside](Tape& t, Node& n) {
      if (inside) t.grad(a)[0] += n.grad[0];
    });
  }

  NodeId s_sum(const std::vector<NodeId>& xs, double scale) {
    double acc = 0.0;
    for (NodeId x : xs) acc += scalar(x);
    std::vector<NodeId> copy = xs;
    return push(Vec{acc * scale}, [copy = std::move(copy), scale](Tape& t, Node& n) {
      for (NodeId x : copy) t.grad(x)[0] += n.grad[0] * scale;
    });
  }

 private:
  struct Node;
  using BackFn = std::function<void(Tape&, Node&)>;
  struct Node {
    Vec val;
    Vec grad;
    BackFn back;
  };

  NodeId push(Vec v, BackFn fn) {
    nodes_.push_back(Node{std::move(v), {}, std::move(fn)});
    return NodeId{static_cast<int>(nodes_.size()) - 1};
  }

  const Vec& val(NodeId id) const { return nodes_[static_cast<std::size_t>(id.idx)].val; }
  Vec& grad(NodeId id) { return nodes_[static_cast<std::size_t>(id.idx)].grad; }
  Mat& gw(ParamId id) { return (*grads_out_)[id]; }

  const ParamSet* ps_;
  std::vector<Node> nodes_;
  Grads* grads_out_ = nullptr;
  bool consumed_ = false;
};

// GradCtx presents the Tape through the same surface as EvalCtx so network
// definitions can be written once.
class GradCtx {
 public:
  using V = NodeId;
  using S = NodeId;

  explicit GradCtx(Tape& tape) : t_(&tape) {}

  const ParamSet& params() const { return t_->params(); }
  Tape& tape() { return *t_; }

  V constant(Vec v) { return t_->constant(std::move(v)); }
  V affine(ParamId W, ParamId b, const Vec& x) { return t_->affine(W, b, x); }
  V affine(ParamId W, ParamId b, V x, const Vec& side) { return t_->affine(W, b, x, side); }
  V affine(ParamId W, ParamId b, V x) { return t_->affine(W, b, x); }
  V affine2(ParamId W, ParamId b, V x, V y) { return t_->affine2(W, b, x, y); }
  V activation(V x, Act a) { return t_->activation(x, a); }
  V add_scalar(V x, double c) { return t_->add_scalar(x, c); }
  V add(V x, V y) { return t_->add(x, y); }
  V reparam(V mean, V std, const Vec& noise) { return t_->reparam(mean, std, noise); }
  S glp(const Vec& target, V mean, V std) { return t_->glp(target, mean, std); }
  S sse(const Vec& target, V x) { return t_->sse(target, x); }
  S kl(V qm, V qs, V pm, V ps) { return t_->kl(qm, qs, pm, ps); }
  S kl_const_p(V qm, V qs, const Vec& pm, const Vec& ps) {
    return t_->kl_const_p(qm, qs, pm, ps);
  }
  S log_softmax_pick(V logits, int a) { return t_->log_softmax_pick(logits, a); }
  S entropy(V logits) { return t_->entropy(logits); }
  S pick(V x, int i) { return t_->pick(x, i); }
  S s_const(double c) { return t_->s_const(c); }
  S s_add(S a, S b) { return t_->s_add(a, b); }
  S s_sub(S a, S b) { return t_->s_sub(a, b); }
  S s_add_const(S a, double c) { return t_->s_add_const(a, c); }
  S s_mul_const(S a, double c) { return t_->s_mul_const(a, c); }
  S s_mul(S a, S b) { return t_->s_mul(a, b); }
  S s_exp(S a) { return t_->s_exp(a); }
  S s_min(S a, S b) { return t_->s_min(a, b); }
  S s_clamp(S a, double lo, double hi) { return t_->s_clamp(a, lo, hi); }
  S s_sum(const std::vector<S>& xs, double scale) { return t_->s_sum(xs, scale); }
  double scalar(S s) const { return t_->scalar(s); }

 private:
  Tape* t_;
};

// EvalCtx affine with the same name set as GradCtx for template use.
// (EvalCtx::affine overloads already line up; nothing further needed.)

}  // namespace vdm
