#include "pmcf/well.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "pmcf/error.hpp"
#include "quadrature.hpp"

namespace pmcf {

namespace {

auto core_values(const WellSpec& w, double s) -> WellValues {
  if (w.family == WellSpec::Family::standard) {
    double q = 1.0 - s * s;
    return {0.25 * q * q, s * s * s - s, 3.0 * s * s - 1.0};
  }
  // Horner for the polynomial and its first two derivatives.
  double p = 0.0, dp = 0.0, d2p = 0.0;
  for (auto it = w.coeffs.rbegin(); it != w.coeffs.rend(); ++it) {
    d2p = d2p * s + 2.0 * dp;
    dp = dp * s + p;
    p = p * s + *it;
  }
  return {p, dp, d2p};
}

auto integrate_sqrt_half_well(const WellSpec& w, double a, double b) -> double {
  if (a == b) return 0.0;
  auto f = [&](double s) { return std::sqrt(std::max(0.0, eval_well(w, s).W) / 2.0); };
  // sqrt(W) has kinks at the wells; split there so the rule sees smooth pieces.
  std::vector<double> cuts{a};
  for (double c : {-1.0, 1.0}) {
    if (c > std::min(a, b) && c < std::max(a, b)) cuts.push_back(c);
  }
  cuts.push_back(b);
  if (a > b) std::sort(cuts.begin() + 1, cuts.end() - 1, std::greater<>());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double err = 0.0;
    double v = detail::adaptive_integral(f, cuts[i], cuts[i + 1], 20, 1e-14, &err);
    if (!(err <= 1e-11 * std::max(1.0, std::abs(v)))) {
      std::ostringstream msg;
      msg << "quadrature of sqrt(W/2) did not converge, achieved error " << err;
      fail(ErrorKind::numeric, msg.str());
    }
    total += v;
  }
  return total;
}

}  // namespace

auto WellSpec::standard() -> WellSpec { return WellSpec{}; }

auto WellSpec::custom(std::vector<double> coeffs) -> WellSpec {
  require(!coeffs.empty(), ErrorKind::input, "custom well needs coefficients");
  WellSpec w;
  w.family = Family::custom;
  w.coeffs = std::move(coeffs);
  for (double s : {-1.0, 1.0}) {
    auto v = eval_well(w, s);
    require(std::abs(v.W) < 1e-12 && std::abs(v.dW) < 1e-12, ErrorKind::input,
            "custom well must vanish with zero slope at +-1");
    require(v.d2W >= 1e-3, ErrorKind::input, "custom well minima at +-1 must be non-degenerate");
  }
  for (int i = 0; i <= 4000; ++i) {
    double s = -3.0 + 6.0 * i / 4000.0;
    require(eval_well(w, s).W >= -1e-12, ErrorKind::input, "custom well must be nonnegative");
  }
  return w;
}

auto eval_well(const WellSpec& w, double s) -> WellValues {
  require(std::isfinite(s), ErrorKind::input, "well evaluated at a non-finite value");
  const double T = w.threshold;
  if (std::abs(s) <= T) return core_values(w, s);
  const double edge = s > 0 ? T : -T;
  auto e = core_values(w, edge);
  double x = s - edge;
  return {e.W + e.dW * x + 0.5 * e.d2W * x * x, e.dW + e.d2W * x, e.d2W};
}

auto phi_transform(const WellSpec& w, double s) -> double {
  require(std::isfinite(s), ErrorKind::input, "phi_transform at a non-finite value");
  return integrate_sqrt_half_well(w, 0.0, s);
}

auto sigma_constant(const WellSpec& w) -> double { return integrate_sqrt_half_well(w, -1.0, 1.0); }

auto max_curvature(const WellSpec& w, double lo, double hi) -> double {
  double m = eval_well(w, lo).d2W;
  const int n = 512;
  for (int i = 1; i <= n; ++i) m = std::max(m, eval_well(w, lo + (hi - lo) * i / n).d2W);
  return m;
}

}  // namespace pmcf
