#pragma once

// Damped Gauss-Newton (Levenberg-Marquardt) for small dense systems. Internal
// to the library; used for singular-locus and critical-point refinement.

#include <cmath>
#include <limits>

#include "morseflow/types.h"

namespace morseflow::detail {

struct LmOptions {
  int max_iter = 200;
  double ftol = 0.0;    // stop once ||F|| <= ftol
  double xtol = 1e-13;  // stop once an accepted step is below xtol*(1+||x||)
  double max_norm = 1e12;
};

struct LmResult {
  Vector x;
  double residual_norm = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool diverged = false;
};

template <class ResidualFn, class JacobianFn>
LmResult levenberg_marquardt(ResidualFn &&residual, JacobianFn &&jacobian,
                             Vector x, const LmOptions &opt = {}) {
  LmResult out;
  Vector F = residual(x);
  double fnorm = F.norm();
  double mu = -1.0;
  int it = 0;
  for (; it < opt.max_iter; ++it) {
    if (!std::isfinite(fnorm)) {
      out.diverged = true;
      break;
    }
    if (fnorm <= opt.ftol) break;
    const Matrix J = jacobian(x);
    const Matrix JtJ = J.transpose() * J;
    const Vector g = J.transpose() * F;
    if (mu < 0.0) {
      const double dmax = JtJ.diagonal().cwiseAbs().maxCoeff();
      mu = 1e-3 * (dmax > 0.0 ? dmax : 1.0);
    }
    bool accepted = false;
    Vector step;
    for (int tries = 0; tries < 30; ++tries) {
      Matrix A = JtJ;
      A.diagonal().array() += mu;
      step = A.ldlt().solve(-g);
      const Vector xn = x + step;
      const Vector Fn = residual(xn);
      const double fn = Fn.norm();
      if (std::isfinite(fn) && fn < fnorm) {
        x = xn;
        F = Fn;
        fnorm = fn;
        mu = std::max(mu / 3.0, 1e-300);
        accepted = true;
        break;
      }
      mu *= 4.0;
    }
    if (!accepted) break;
    if (x.norm() > opt.max_norm) {
      out.diverged = true;
      break;
    }
    if (step.norm() <= opt.xtol * (1.0 + x.norm())) break;
  }
  out.x = std::move(x);
  out.residual_norm = fnorm;
  out.iterations = it;
  return out;
}

}  // namespace morseflow::detail
