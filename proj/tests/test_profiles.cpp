#include <doctest.h>

#include <cmath>
#include <random>

#include "pmcf/error.hpp"
#include "pmcf/profiles.hpp"

using namespace pmcf;

namespace {

const double kSigma = std::sqrt(2.0) / 3.0;

// Independent energy oracle: composite Simpson over a fine grid with centred
// differences of the profile values, not the library's derivative or quadrature.
auto energy_oracle(const Profile1D& p) -> double {
  const double S = p.support() + 4 * p.eps;
  const int n = 200000;
  const double h = 2 * S / n, d = 1e-6;
  auto density = [&](double r) {
    double v = p.value(r);
    double dv = (p.value(r + d) - p.value(r - d)) / (2 * d);
    double W = 0.25 * (1 - v * v) * (1 - v * v);
    return 0.5 * p.eps * dv * dv + W / p.eps;
  };
  double s = density(-S) + density(S);
  for (int i = 1; i < n; ++i) s += density(-S + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("heteroclinic matches tanh") {
  WellSpec w;
  CHECK(heteroclinic(w, 0.0) == 0.0);
  CHECK(heteroclinic(w, std::sqrt(2.0) * std::atanh(0.5)) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(heteroclinic(w, 50.0) - 1.0) <= 1e-12);
  CHECK(std::abs(heteroclinic(w, -50.0) + 1.0) <= 1e-12);
  for (int i = 0; i <= 100; ++i) {
    double r = -10.0 + 0.2 * i;
    CHECK(std::abs(heteroclinic_d1(w, r) - (1 - std::pow(std::tanh(r / std::sqrt(2.0)), 2)) / std::sqrt(2.0)) <
          1e-12);
  }
}

TEST_CASE("tabulated heteroclinic of a custom well") {
  auto w = WellSpec::custom({0.25, 0.0, -0.5, 0.0, 0.25});
  double worst = 0.0;
  for (int i = 0; i <= 400; ++i) {
    double r = -12.0 + 0.06 * i;
    worst = std::max(worst, std::abs(heteroclinic(w, r) - std::tanh(r / std::sqrt(2.0))));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("smooth bump") {
  for (double x : {-1.0, -0.5, 0.0, 0.7, 1.0}) CHECK(smooth_bump(x) == 1.0);
  for (double x : {-3.0, -2.0, 2.0, 2.5}) CHECK(smooth_bump(x) == 0.0);
  double slope = 0.0;
  for (int i = 0; i <= 4000; ++i) {
    double x = -2.0 + 4.0 * i / 4000;
    CHECK(smooth_bump(x) == doctest::Approx(smooth_bump(-x)));
    slope = std::max(slope, std::abs(smooth_bump_d1(x)));
    double fd = (smooth_bump(x + 1e-6) - smooth_bump(x - 1e-6)) / 2e-6;
    CHECK(std::abs(fd - smooth_bump_d1(x)) < 1e-5);
  }
  CHECK(slope < 2.0);
}

TEST_CASE("truncated profile") {
  WellSpec w;
  for (double eps : {0.2, 0.1, 0.05}) {
    const double cut = 2 * eps * truncation_width(eps);
    CHECK(truncated_profile(w, eps, 0.0) == 0.0);
    for (double r : {cut, cut * 1.01, 3 * cut}) {
      CHECK(truncated_profile(w, eps, r) == 1.0);
      CHECK(truncated_profile(w, eps, -r) == -1.0);
    }
    double prev = -1.0;
    for (int i = 0; i <= 2000; ++i) {
      double v = truncated_profile(w, eps, -1.2 * cut + 2.4 * cut * i / 2000);
      CHECK(v >= prev);
      CHECK(std::abs(v) <= 1.0);
      prev = v;
    }
  }
}

TEST_CASE("truncated profile solves the ODE up to a small defect") {
  // sup |eps p'' - W'(p)/eps| measured once at eps = 0.05: 2.3e-6, i.e. 9e-4 eps^2.
  WellSpec w;
  const double eps = 0.05;
  Profile1D p{Profile1D::Kind::truncated, eps, 0.0, w};
  double defect = 0.0;
  for (int i = -20000; i <= 20000; ++i) {
    double r = p.support() * i / 20000.0;
    double v = p.value(r);
    defect = std::max(defect, std::abs(eps * p.second_derivative(r) - eval_well(w, v).dW / eps));
  }
  CHECK(defect <= 2e-3 * eps * eps);
}

TEST_CASE("double profile") {
  WellSpec w;
  std::mt19937 rng(3);
  for (double eps : {0.1, 0.05}) {
    const double L = truncation_width(eps);
    CHECK(double_profile(w, eps, 0.0, 0.0) == 1.0);
    std::uniform_real_distribution<double> U(-6 * eps * L, 6 * eps * L);
    for (double t : {0.0, eps * L, 3 * eps * L}) {
      for (int i = 0; i < 50; ++i) {
        double r = U(rng);
        CHECK(double_profile(w, eps, t, r) == double_profile(w, eps, t, -r));
      }
    }
    for (double t : {4 * eps * L, 5 * eps * L})
      for (int i = 0; i < 50; ++i) CHECK(double_profile(w, eps, t, U(rng)) == -1.0);
  }
  CHECK_THROWS_AS(double_profile(w, 0.1, -0.1, 0.0), Error);
  CHECK_THROWS_AS(truncated_profile(w, 1.5, 0.0), Error);
}

TEST_CASE("profile energies") {
  WellSpec w;
  Profile1D H{Profile1D::Kind::heteroclinic, 0.1, 0.0, w};
  CHECK(std::abs(profile_energy(H) - 2 * kSigma) <= 1e-6);

  std::vector<double> err;
  for (double eps : {0.2, 0.1, 0.05}) {
    Profile1D p{Profile1D::Kind::truncated, eps, 0.0, w};
    Profile1D q{Profile1D::Kind::double_layer, eps, 0.0, w};
    double E = profile_energy(p);
    CHECK(E == doctest::Approx(energy_oracle(p)).epsilon(1e-7));
    CHECK(std::abs(E - 2 * kSigma) <= eps * eps);
    CHECK(std::abs(profile_energy(q) - 4 * kSigma) <= 2 * eps * eps);
    err.push_back(std::max(std::abs(E - 2 * kSigma), 1e-15));
  }
  CHECK(std::log2(err[0] / err[1]) >= 1.8);
}

TEST_CASE("double profile energy decreases in t") {
  WellSpec w;
  const double eps = 0.1, L = truncation_width(eps);
  double prev = 1e300;
  for (int i = 0; i < 50; ++i) {
    Profile1D p{Profile1D::Kind::double_shifted, eps, 4 * eps * L * i / 49.0, w};
    double E = profile_energy(p);
    CHECK(E <= prev + 1e-12);
    prev = E;
  }
  CHECK(prev == doctest::Approx(0.0));
}
