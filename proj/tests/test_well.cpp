#include <doctest.h>

#include <cmath>
#include <random>

#include "pmcf/error.hpp"
#include "pmcf/well.hpp"

using namespace pmcf;

namespace {

// Composite Simpson, the independent oracle for the well integrals.
template <class F>
auto simpson(F f, double a, double b, int n) -> double {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

const WellSpec kQuarticAsCustom = WellSpec::custom({0.25, 0.0, -0.5, 0.0, 0.25});

}  // namespace

TEST_CASE("standard well values") {
  auto w = WellSpec::standard();
  for (double s : {1.0, -1.0}) {
    auto v = eval_well(w, s);
    CHECK(v.W == 0.0);
    CHECK(v.dW == 0.0);
    CHECK(v.d2W == doctest::Approx(2.0));
  }
  auto z = eval_well(w, 0.0);
  CHECK(z.W == doctest::Approx(0.25));
  CHECK(z.dW == 0.0);
  CHECK(z.d2W == doctest::Approx(-1.0));
  CHECK(standard_dW(0.7) == doctest::Approx(eval_well(w, 0.7).dW));
}

TEST_CASE("derivatives are consistent, including the quadratic continuation") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> U(-2.5, 2.5);
  const double h = 1e-5;
  for (const auto& w : {WellSpec::standard(), kQuarticAsCustom}) {
    for (int i = 0; i < 100; ++i) {
      double s = U(rng);
      auto v = eval_well(w, s);
      double dW = (eval_well(w, s + h).W - eval_well(w, s - h).W) / (2 * h);
      double d2W = (eval_well(w, s + h).dW - eval_well(w, s - h).dW) / (2 * h);
      CHECK(std::abs(dW - v.dW) <= 1e-6 * std::max(1.0, std::abs(v.dW)));
      CHECK(std::abs(d2W - v.d2W) <= 1e-6 * std::max(1.0, std::abs(v.d2W)));
    }
  }
}

TEST_CASE("continuation is C2 at the threshold") {
  auto w = WellSpec::standard();
  for (double T : {2.0, -2.0}) {
    auto in = eval_well(w, T * (1 - 1e-12)), out = eval_well(w, T * (1 + 1e-12));
    CHECK(in.W == doctest::Approx(out.W).epsilon(1e-9));
    CHECK(in.dW == doctest::Approx(out.dW).epsilon(1e-9));
    CHECK(in.d2W == doctest::Approx(out.d2W).epsilon(1e-9));
  }
  CHECK(eval_well(w, 3.0).W > eval_well(w, 2.0).W);
}

TEST_CASE("sigma") {
  auto w = WellSpec::standard();
  const double oracle = simpson([](double s) { return (1 - s * s) / (2 * std::sqrt(2.0)); }, -1, 1, 2);
  CHECK(std::abs(oracle - std::sqrt(2.0) / 3.0) < 1e-15);
  CHECK(std::abs(sigma_constant(w) - std::sqrt(2.0) / 3.0) < 1e-8);
  CHECK(2 * sigma_constant(w) == doctest::Approx(0.94280904).epsilon(1e-8));
  CHECK(std::abs(sigma_constant(kQuarticAsCustom) - std::sqrt(2.0) / 3.0) < 1e-8);

  auto scaled = WellSpec::custom({1.0, 0.0, -2.0, 0.0, 1.0});
  CHECK(sigma_constant(scaled) == doctest::Approx(2.0 * std::sqrt(2.0) / 3.0).epsilon(1e-10));
}

TEST_CASE("Phi transform") {
  auto w = WellSpec::standard();
  const double sigma = sigma_constant(w);
  CHECK(phi_transform(w, 0.0) == 0.0);
  CHECK(phi_transform(w, 1.0) == doctest::Approx(sigma / 2).epsilon(1e-10));
  CHECK(phi_transform(w, -1.0) == doctest::Approx(-sigma / 2).epsilon(1e-10));
  const double h = 1e-5;
  for (double s : {-1.7, -0.6, 0.1, 0.45, 0.93, 1.4}) {
    double fd = (phi_transform(w, s + h) - phi_transform(w, s - h)) / (2 * h);
    CHECK(std::abs(fd - std::sqrt(eval_well(w, s).W / 2)) < 1e-8);
  }
  CHECK(phi_transform(w, 0.6) ==
        doctest::Approx(simpson([&](double s) { return std::sqrt(eval_well(w, s).W / 2); }, 0, 0.6, 2000)));
}

TEST_CASE("custom wells are validated") {
  CHECK_THROWS_AS(WellSpec::custom({}), Error);
  // 1 - s^2 is negative outside the wells.
  CHECK_THROWS_AS(WellSpec::custom({1.0, 0.0, -1.0}), Error);
  // Degenerate minima: (1 - s^2)^4.
  CHECK_THROWS_AS(WellSpec::custom({1.0, 0.0, -4.0, 0.0, 6.0, 0.0, -4.0, 0.0, 1.0}), Error);
  for (const auto& w : {WellSpec::standard(), kQuarticAsCustom}) {
    CHECK(eval_well(w, 1.0).d2W >= 1e-3);
    CHECK(eval_well(w, -1.0).d2W >= 1e-3);
  }
  CHECK(max_curvature(WellSpec::standard(), -1.0, 1.2) == doctest::Approx(3 * 1.44 - 1).epsilon(1e-3));
}
