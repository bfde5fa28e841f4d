#pragma once

#include <algorithm>
#include <cmath>

#include "qsol/errors.hpp"
#include "qsol/types.hpp"

namespace qsol {

// One classic fourth-order Runge-Kutta step for an autonomous system.
template <typename Rhs>
VectorXc rk4_step(const Rhs& f, const VectorXc& y, double h) {
  const VectorXc k1 = f(y);
  const VectorXc k2 = f(y + (0.5 * h) * k1);
  const VectorXc k3 = f(y + (0.5 * h) * k2);
  const VectorXc k4 = f(y + h * k3);
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Advances y across an interval with step-doubling error control: each trial
// step is compared against two half steps and accepted once the Richardson
// estimate meets `tol` relative to the state scale.
template <typename Rhs>
VectorXc rk4_adaptive(const Rhs& f, VectorXc y, double interval, double tol, double h_init) {
  double remaining = interval;
  double h = std::min(h_init, interval);
  int rejections = 0;
  while (remaining > 1e-15 * interval) {
    h = std::min(h, remaining);
    const VectorXc full = rk4_step(f, y, h);
    const VectorXc half = rk4_step(f, rk4_step(f, y, 0.5 * h), 0.5 * h);
    const double err = (full - half).cwiseAbs().maxCoeff() / 15.0;
    const double scale = std::max(1.0, y.cwiseAbs().maxCoeff());
    if (err <= tol * scale || h <= 1e-12) {
      y = half;
      remaining -= h;
      const double grow = err > 0.0 ? 0.9 * std::pow(tol * scale / err, 0.2) : 5.0;
      h *= std::clamp(grow, 0.2, 5.0);
      rejections = 0;
    } else {
      h *= std::clamp(0.9 * std::pow(tol * scale / err, 0.25), 0.1, 0.9);
      if (++rejections > 60) fail(ErrorCode::numerical_blowup, "adaptive step collapsed");
    }
  }
  return y;
}

}  // namespace qsol
