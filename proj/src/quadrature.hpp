#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace pmcf::detail {

// Adaptive 31-point Gauss-Kronrod bisection to an absolute error target.
// Boost's own recursion uses a relative target and compares the error of a
// piece before rescaling, so short or tiny pieces always hit max_depth.
template <class F>
auto adaptive_integral(const F& f, double a, double b, unsigned max_depth, double abs_tol, double* error = nullptr)
    -> double {
  const double len = b - a;
  auto unit = [&](double t) { return len * f(a + len * t); };
  double err = 0.0;
  double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(unit, 0.0, 1.0, 0, 0.0, &err);
  if (err > abs_tol && max_depth > 0) {
    const double mid = a + 0.5 * len;
    double e1 = 0.0, e2 = 0.0;
    v = adaptive_integral(f, a, mid, max_depth - 1, 0.5 * abs_tol, &e1) +
        adaptive_integral(f, mid, b, max_depth - 1, 0.5 * abs_tol, &e2);
    err = e1 + e2;
  }
  if (error) *error = err;
  return v;
}

}  // namespace pmcf::detail
