#pragma once

#include "cldiv/core.hpp"

#include <algorithm>

namespace cldiv::detail {

inline double fd_step(double x) { return std::max(1e-5, 1e-5 * std::abs(x)); }

// Central differences of a scalar function.
template <class F>
Vector central_gradient(F&& f, const Vector& x) {
  Vector g(x.size());
  Vector xp = x, xm = x;
  for (Index i = 0; i < x.size(); ++i) {
    double h = fd_step(x[i]);
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
    xp[i] = xm[i] = x[i];
  }
  return g;
}

// Column j holds d f / d x_j for a vector valued f.
template <class F>
Matrix central_jacobian(F&& f, const Vector& x) {
  Vector f0 = f(x);
  Matrix jac(f0.size(), x.size());
  Vector xp = x, xm = x;
  for (Index j = 0; j < x.size(); ++j) {
    double h = fd_step(x[j]);
    xp[j] = x[j] + h;
    xm[j] = x[j] - h;
    jac.col(j) = (f(xp) - f(xm)) / (2.0 * h);
    xp[j] = xm[j] = x[j];
  }
  return jac;
}

}  // namespace cldiv::detail
