#pragma once

#include "pmcf/well.hpp"

namespace pmcf {

// Smooth even cutoff: 1 on [-1,1], 0 outside (-2,2). Built by convolving the
// indicator of [-1.5,1.5] with the exp(-1/(1-x^2)) mollifier of radius 1/2.
auto smooth_bump(double x) -> double;
auto smooth_bump_d1(double x) -> double;
auto smooth_bump_d2(double x) -> double;

// Truncation width 3|log eps|.
auto truncation_width(double eps) -> double;

// Increasing solution of H'' = W'(H) with H(0) = 0 and limits +-1.
auto heteroclinic(const WellSpec& w, double r) -> double;
auto heteroclinic_d1(const WellSpec& w, double r) -> double;

// H(r/eps) cut off to exactly +-1 for |r| >= 2 eps Lambda.
auto truncated_profile(const WellSpec& w, double eps, double r) -> double;

// Double transition: even in r, equal to the truncated profile evaluated at
// 2 eps Lambda - t - |r|; it is identically -1 once t >= 4 eps Lambda.
auto double_profile(const WellSpec& w, double eps, double t, double r) -> double;

struct Profile1D {
  enum class Kind { heteroclinic, truncated, double_layer, double_shifted };

  Kind kind = Kind::heteroclinic;
  double eps = 0.1;
  double t = 0.0;
  WellSpec well{};

  [[nodiscard]] auto lambda() const -> double { return truncation_width(eps); }
  [[nodiscard]] auto value(double r) const -> double;
  [[nodiscard]] auto derivative(double r) const -> double;
  [[nodiscard]] auto second_derivative(double r) const -> double;
  // eps p'^2/2 + W(p)/eps
  [[nodiscard]] auto energy_density(double r) const -> double;
  // Half-width of the interval carrying all the energy: 4 eps Lambda + t.
  [[nodiscard]] auto support() const -> double;
};

// One-dimensional energy over the whole support.
auto profile_energy(const Profile1D& p) -> double;
// Energy restricted to [a, b].
auto profile_energy_on(const Profile1D& p, double a, double b) -> double;

}  // namespace pmcf
