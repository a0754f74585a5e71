#pragma once

#include <cstdint>

#include "vdm/net.hpp"

namespace vdm {

// Frozen random feature extractor: a randomly initialized two-layer tanh MLP
// whose parameters never change after construction. There is deliberately no
// way to reach these parameters from a gradient step; the embedding is a pure
// function of (seed, architecture, input).
class FeatureMap {
 public:
  FeatureMap() = default;

  FeatureMap(int in_dim, int hidden, int out_dim, std::uint64_t seed)
      : in_dim_(in_dim), hidden_(hidden), out_dim_(out_dim), seed_(seed) {
    net_ = Mlp(params_, "feat", {in_dim, hidden, out_dim}, {Act::Tanh, Act::Tanh});
    Rng rng(seed);
    params_.init_glorot(rng);
  }

  Vec operator()(const Vec& state) const {
    EvalCtx cx(params_);
    return net_.forward(cx, state);
  }

  int in_dim() const { return in_dim_; }
  int hidden() const { return hidden_; }
  int out_dim() const { return out_dim_; }
  std::uint64_t seed() const { return seed_; }
  const ParamSet& params() const { return params_; }

 private:
  int in_dim_ = 0, hidden_ = 0, out_dim_ = 0;
  std::uint64_t seed_ = 0;
  ParamSet params_;
  Mlp net_;
};

}  // namespace vdm
