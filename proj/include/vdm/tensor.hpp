#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "vdm/common.hpp"
#include "vdm/rng.hpp"

namespace vdm {

// Dense row-major matrix; column vectors are rows x 1.
struct Mat {
  int rows = 0;
  int cols = 0;
  Vec a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

  double& operator()(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }
  std::size_t size() const { return a.size(); }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

struct ParamId {
  int idx = -1;
  bool valid() const { return idx >= 0; }
};

// Named parameter collection with per-parameter Adam moment accumulators.
class ParamSet {
 public:
  struct Entry {
    std::string name;
    Mat value;
    Mat m;  // first moment
    Mat v;  // second moment
  };

  ParamId add(const std::string& name, int rows, int cols) {
    Entry e;
    e.name = name;
    e.value = Mat(rows, cols);
    e.m = Mat(rows, cols);
    e.v = Mat(rows, cols);
    entries_.push_back(std::move(e));
    return ParamId{static_cast<int>(entries_.size()) - 1};
  }

  const Mat& value(ParamId id) const { return entries_[static_cast<std::size_t>(id.idx)].value; }
  Mat& value(ParamId id) { return entries_[static_cast<std::size_t>(id.idx)].value; }
  const std::string& name(ParamId id) const { return entries_[static_cast<std::size_t>(id.idx)].name; }

  ParamId find(const std::string& name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i].name == name) return ParamId{static_cast<int>(i)};
    }
    return ParamId{};
  }

  int count() const { return static_cast<int>(entries_.size()); }
  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
  }

  std::int64_t step() const { return step_; }
  void set_step(std::int64_t s) { step_ = s; }  // checkpoint restore

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }

  // Glorot-uniform weights, zero biases (cols == 1 is treated as a bias).
  void init_glorot(Rng& rng) {
    for (auto& e : entries_) {
      if (e.value.cols == 1) continue;
      double bound = std::sqrt(6.0 / (e.value.rows + e.value.cols));
      for (double& w : e.value.a) w = rng.uniform(-bound, bound);
    }
  }

  void zero_param(ParamId id) {
    for (double& w : value(id).a) w = 0.0;
  }

  friend void adam_step(ParamSet& params, const struct Grads& grads, double lr, double beta1,
                        double beta2, double eps);

 private:
  std::vector<Entry> entries_;
  std::int64_t step_ = 0;
};

// Gradient accumulator shaped like a ParamSet.
struct Grads {
  std::vector<Mat> g;

  explicit Grads(const ParamSet& ps) {
    g.reserve(static_cast<std::size_t>(ps.count()));
    for (const auto& e : ps.entries()) g.emplace_back(e.value.rows, e.value.cols);
  }

  Mat& operator[](ParamId id) { return g[static_cast<std::size_t>(id.idx)]; }
  const Mat& operator[](ParamId id) const { return g[static_cast<std::size_t>(id.idx)]; }

  void zero() {
    for (auto& m : g) {
      for (double& x : m.a) x = 0.0;
    }
  }

  void scale(double s) {
    for (auto& m : g) {
      for (double& x : m.a) x *= s;
    }
  }
};

// Standard Adam update (beta1=0.9, beta2=0.999, eps=1e-8 unless overridden).
// A NaN/Inf gradient aborts before touching any parameter.
inline void adam_step(ParamSet& params, const Grads& grads, double lr, double beta1 = 0.9,
                      double beta2 = 0.999, double eps = 1e-8) {
  for (std::size_t i = 0; i < params.entries_.size(); ++i) {
    const Mat& gm = grads.g[i];
    if (!gm.same_shape(params.entries_[i].value)) {
      throw DomainError("adam_step: gradient shape mismatch for parameter '" +
                        params.entries_[i].name + "'");
    }
    for (double x : gm.a) {
      if (!std::isfinite(x)) {
        throw DomainError("adam_step: non-finite gradient for parameter '" +
                          params.entries_[i].name + "'");
      }
    }
  }
  params.step_ += 1;
  double t = static_cast<double>(params.step_);
  double bc1 = 1.0 - std::pow(beta1, t);
  double bc2 = 1.0 - std::pow(beta2, t);
  for (std::size_t i = 0; i < params.entries_.size(); ++i) {
    auto& e = params.entries_[i];
    const Vec& g = grads.g[i].a;
    for (std::size_t k = 0; k < g.size(); ++k) {
      e.m.a[k] = beta1 * e.m.a[k] + (1.0 - beta1) * g[k];
      e.v.a[k] = beta2 * e.v.a[k] + (1.0 - beta2) * g[k] * g[k];
      double mhat = e.m.a[k] / bc1;
      double vhat = e.v.a[k] / bc2;
      e.value.a[k] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

}  // namespace vdm
