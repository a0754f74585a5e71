#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace vdm {

using Vec = std::vector<double>;

// Error hierarchy. Configuration errors map to CLI exit code 1,
// everything else that escapes maps to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnsupportedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Raised on unrecoverable mid-run failures (NaN storms); carries diagnostics.
struct RuntimeAbort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline bool all_finite(const Vec& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

inline Vec one_hot(int index, int n) {
  Vec v(static_cast<std::size_t>(n), 0.0);
  v[static_cast<std::size_t>(index)] = 1.0;
  return v;
}

inline Vec concat(const Vec& a, const Vec& b) {
  Vec out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

inline Vec concat(const Vec& a, const Vec& b, const Vec& c) {
  Vec out;
  out.reserve(a.size() + b.size() + c.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  out.insert(out.end(), c.begin(), c.end());
  return out;
}

inline int argmax(const Vec& v, int begin = 0, int end = -1) {
  if (end < 0) end = static_cast<int>(v.size());
  int best = begin;
  for (int i = begin + 1; i < end; ++i) {
    if (v[static_cast<std::size_t>(i)] > v[static_cast<std::size_t>(best)]) best = i;
  }
  return best - begin;
}

}  // namespace vdm
