#pragma once

#include <string>
#include <vector>

#include "vdm/autodiff.hpp"
#include "vdm/common.hpp"
#include "vdm/tensor.hpp"

namespace vdm {

struct DenseIds {
  ParamId W;
  ParamId b;
};

inline DenseIds add_dense(ParamSet& ps, const std::string& name, int in, int out) {
  return DenseIds{ps.add(name + ".W", out, in), ps.add(name + ".b", out, 1)};
}

// Plain sequential MLP: alternating affine + activation.
class Mlp {
 public:
  struct Layer {
    DenseIds ids;
    int in = 0;
    int out = 0;
    Act act = Act::Identity;
  };

  Mlp() = default;

  // widths = {in, h1, ..., out}; acts has widths.size()-1 entries.
  Mlp(ParamSet& ps, const std::string& prefix, const std::vector<int>& widths,
      const std::vector<Act>& acts) {
    if (widths.size() < 2 || acts.size() != widths.size() - 1) {
      throw ConfigError("Mlp: widths/activations arity mismatch");
    }
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
      Layer l;
      l.in = widths[i];
      l.out = widths[i + 1];
      l.act = acts[i];
      l.ids = add_dense(ps, prefix + ".l" + std::to_string(i), l.in, l.out);
      layers_.push_back(l);
    }
  }

  int in_dim() const { return layers_.front().in; }
  int out_dim() const { return layers_.back().out; }
  const std::vector<Layer>& layers() const { return layers_; }

  template <class Ctx>
  typename Ctx::V forward(Ctx& cx, const Vec& input) const {
    if (static_cast<int>(input.size()) != in_dim()) {
      throw ConfigError("Mlp::forward: input length " + std::to_string(input.size()) +
                        " does not match layer 0 width " + std::to_string(in_dim()));
    }
    typename Ctx::V h = cx.affine(layers_[0].ids.W, layers_[0].ids.b, input);
    h = cx.activation(std::move(h), layers_[0].act);
    for (std::size_t i = 1; i < layers_.size(); ++i) {
      h = cx.affine(layers_[i].ids.W, layers_[i].ids.b, std::move(h));
      h = cx.activation(std::move(h), layers_[i].act);
    }
    return h;
  }

 private:
  std::vector<Layer> layers_;
};

// Residual block: out = in + W2*act(W1*[in; side] + b1) + b2, where the
// optional side input is concatenated to each inner dense layer.
class ResidualBlock {
 public:
  ResidualBlock() = default;

  ResidualBlock(ParamSet& ps, const std::string& prefix, int width, int side_dim = 0,
                Act act = Act::Relu)
      : width_(width), side_dim_(side_dim), act_(act) {
    l1_ = add_dense(ps, prefix + ".r1", width + side_dim, width);
    l2_ = add_dense(ps, prefix + ".r2", width + side_dim, width);
  }

  int width() const { return width_; }

  template <class Ctx>
  typename Ctx::V forward(Ctx& cx, typename Ctx::V h, const Vec* side = nullptr) const {
    if ((side == nullptr) != (side_dim_ == 0)) {
      throw ConfigError("ResidualBlock: side input arity mismatch");
    }
    typename Ctx::V t1 = side ? cx.affine(l1_.W, l1_.b, h, *side) : cx.affine(l1_.W, l1_.b, h);
    t1 = cx.activation(std::move(t1), act_);
    typename Ctx::V t2 =
        side ? cx.affine(l2_.W, l2_.b, std::move(t1), *side) : cx.affine(l2_.W, l2_.b, std::move(t1));
    return cx.add(h, t2);
  }

  DenseIds inner1() const { return l1_; }
  DenseIds inner2() const { return l2_; }

 private:
  DenseIds l1_, l2_;
  int width_ = 0;
  int side_dim_ = 0;
  Act act_ = Act::Relu;
};

// Diagonal-Gaussian output head; std goes through softplus plus a small
// additive floor to keep it strictly positive.
class GaussianHead {
 public:
  GaussianHead() = default;

  GaussianHead(ParamSet& ps, const std::string& prefix, int in, int out, double std_floor)
      : floor_(std_floor) {
    mean_ = add_dense(ps, prefix + ".mean", in, out);
    std_ = add_dense(ps, prefix + ".std", in, out);
  }

  template <class Ctx>
  std::pair<typename Ctx::V, typename Ctx::V> forward(Ctx& cx, typename Ctx::V h) const {
    typename Ctx::V m = cx.affine(mean_.W, mean_.b, h);
    typename Ctx::V s = cx.affine(std_.W, std_.b, std::move(h));
    s = cx.activation(std::move(s), Act::Softplus);
    s = cx.add_scalar(std::move(s), floor_);
    return {std::move(m), std::move(s)};
  }

  DenseIds mean_ids() const { return mean_; }
  DenseIds std_ids() const { return std_; }
  double floor() const { return floor_; }

 private:
  DenseIds mean_, std_;
  double floor_ = 1e-4;
};

}  // namespace vdm
