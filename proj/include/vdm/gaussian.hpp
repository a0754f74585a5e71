#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "vdm/common.hpp"

namespace vdm {

inline constexpr double kLogTwoPi = 1.8378770664093454836;  // log(2*pi)

// Diagonal Gaussian stored as (mean, std); std entries must stay positive.
struct DiagGaussian {
  Vec mean;
  Vec std;

  int dim() const { return static_cast<int>(mean.size()); }

  void validate() const {
    if (mean.size() != std.size()) {
      throw DomainError("DiagGaussian: mean/std length mismatch");
    }
    for (double s : std) {
      if (!(s > 0.0)) throw DomainError("DiagGaussian: non-positive std");
    }
  }
};

// Sum over dimensions of the diagonal Gaussian log-density at x.
inline double gaussian_log_prob(const Vec& x, const DiagGaussian& g) {
  if (x.size() != g.mean.size() || x.size() != g.std.size()) {
    throw DomainError("gaussian_log_prob: dimension mismatch");
  }
  double acc = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    double s = g.std[j];
    if (!(s > 0.0)) throw DomainError("gaussian_log_prob: non-positive std");
    double z = (x[j] - g.mean[j]) / s;
    acc += -0.5 * kLogTwoPi - std::log(s) - 0.5 * z * z;
  }
  return acc;
}

// Closed-form KL[q || p] for diagonal Gaussians, with covariances given as std.
inline double gaussian_kl(const DiagGaussian& q, const DiagGaussian& p) {
  if (q.mean.size() != p.mean.size()) {
    throw DomainError("gaussian_kl: dimension mismatch");
  }
  double acc = 0.0;
  for (std::size_t j = 0; j < q.mean.size(); ++j) {
    double qs = q.std[j], ps = p.std[j];
    if (!(qs > 0.0) || !(ps > 0.0)) throw DomainError("gaussian_kl: non-positive std");
    double dm = q.mean[j] - p.mean[j];
    acc += std::log(ps) - std::log(qs) + (qs * qs + dm * dm) / (2.0 * ps * ps) - 0.5;
  }
  return acc;
}

// mean + std * noise; deterministic given the supplied noise.
inline Vec reparam_sample(const DiagGaussian& g, const Vec& noise) {
  if (noise.size() != g.mean.size() || noise.size() != g.std.size()) {
    throw DomainError("reparam_sample: dimension mismatch");
  }
  Vec z(noise.size());
  for (std::size_t j = 0; j < z.size(); ++j) z[j] = g.mean[j] + g.std[j] * noise[j];
  return z;
}

// Stable log(sum(exp(x))) over a span of log-values.
inline double logsumexp(const Vec& log_vals) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : log_vals) mx = std::max(mx, v);
  if (!std::isfinite(mx)) return mx;
  double acc = 0.0;
  for (double v : log_vals) acc += std::exp(v - mx);
  return mx + std::log(acc);
}

}  // namespace vdm
