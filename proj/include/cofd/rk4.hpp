#pragma once

#include <array>
#include <cmath>

#include "cofd/errors.hpp"

namespace cofd {

// Classical four-stage Runge-Kutta step for x' = f(t, x).
//
// When `stages` is given it receives the four evaluation points
// x, x + dt/2 k1, x + dt/2 k2, x + dt k3, so that a second system driven by
// this one (an observer fed with y = C x) can be advanced with the exact
// same stage samples.
template <class Vec, class Derivative>
Vec rk4_step(Derivative&& f, const Vec& x, double t, double dt, std::array<Vec, 4>* stages = nullptr) {
  if (!(dt > 0.0)) {
    throw Error(Errc::InvalidArgument, "integration step must be positive");
  }
  using Scalar = typename Vec::Scalar;
  const Scalar h = static_cast<Scalar>(dt);
  const Scalar half = h / Scalar(2);
  const Vec k1 = f(t, x);
  const Vec x2 = x + half * k1;
  const Vec k2 = f(t + 0.5 * dt, x2);
  const Vec x3 = x + half * k2;
  const Vec k3 = f(t + 0.5 * dt, x3);
  const Vec x4 = x + h * k3;
  const Vec k4 = f(t + dt, x4);
  Vec next = x + (h / Scalar(6)) * (k1 + Scalar(2) * k2 + Scalar(2) * k3 + k4);
  if (!next.allFinite()) {
    throw Error(Errc::NonFinite, "integration produced a non-finite state");
  }
  if (stages != nullptr) {
    (*stages)[0] = x;
    (*stages)[1] = x2;
    (*stages)[2] = x3;
    (*stages)[3] = x4;
  }
  return next;
}

}  // namespace cofd
