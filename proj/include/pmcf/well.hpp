#pragma once

#include <vector>

namespace pmcf {

struct WellValues {
  double W;
  double dW;
  double d2W;
};

// Double-well potential. Inside [-threshold, threshold] it is either the
// standard quartic (1-s^2)^2/4 or a polynomial with the given coefficients
// (coeffs[k] multiplies s^k); outside it continues as the quadratic that
// matches value, slope and curvature at +-threshold.
struct WellSpec {
  enum class Family { standard, custom };

  Family family = Family::standard;
  std::vector<double> coeffs;
  double threshold = 2.0;

  static auto standard() -> WellSpec;
  // Validates W >= 0, W(+-1) = W'(+-1) = 0 and W''(+-1) >= 1e-3.
  static auto custom(std::vector<double> coeffs) -> WellSpec;

  auto operator==(const WellSpec&) const -> bool = default;
};

auto eval_well(const WellSpec& w, double s) -> WellValues;

// Fast path used inside field loops; no finiteness check.
inline auto standard_dW(double s) -> double { return s * s * s - s; }

// Phi(s) = integral_0^s sqrt(W/2).
auto phi_transform(const WellSpec& w, double s) -> double;

// sigma = integral_{-1}^{1} sqrt(W/2).
auto sigma_constant(const WellSpec& w) -> double;

// Largest W'' over [lo, hi], sampled densely; used to size flow stabilisation.
auto max_curvature(const WellSpec& w, double lo, double hi) -> double;

}  // namespace pmcf
