#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "vdm/autodiff.hpp"
#include "vdm/tensor.hpp"

namespace vdm {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Compares reverse-mode gradients against central finite differences for
// every scalar parameter. `fn` must be a generic callable usable as both
//   double fn(EvalCtx&)   and   NodeId fn(GradCtx&)
// and deterministic given the parameter values (fix all noise inputs).
template <class Fn>
GradCheckReport grad_check(Fn&& fn, ParamSet& ps, double h = 1e-5) {
  Grads analytic(ps);
  analytic.zero();
  {
    Tape tape(ps);
    GradCtx cx(tape);
    NodeId loss = fn(cx);
    tape.backward(loss, analytic);
  }

  GradCheckReport rep;
  for (auto& entry : ps.entries()) {
    ParamId id = ps.find(entry.name);
    for (std::size_t k = 0; k < entry.value.a.size(); ++k) {
      double orig = entry.value.a[k];
      entry.value.a[k] = orig + h;
      EvalCtx up(ps);
      double fp = fn(up);
      entry.value.a[k] = orig - h;
      EvalCtx dn(ps);
      double fm = fn(dn);
      entry.value.a[k] = orig;

      double fd = (fp - fm) / (2.0 * h);
      double an = analytic[id].a[k];
      double denom = std::max({std::abs(an), std::abs(fd), 1e-6});
      double rel = std::abs(an - fd) / denom;
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst_param = entry.name + "[" + std::to_string(k) + "]";
        rep.analytic = an;
        rep.numeric = fd;
      }
    }
  }
  return rep;
}

}  // namespace vdm
