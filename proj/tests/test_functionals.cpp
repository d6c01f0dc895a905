#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "pmcf/functionals.hpp"
#include "pmcf/profiles.hpp"

using namespace pmcf;

namespace {

const double kSigma = std::sqrt(2.0) / 3.0;

auto smooth_random(const TorusGrid& grid, unsigned seed, double amp = 1.0) -> ScalarField {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  double a[4][3];
  for (auto& row : a)
    for (auto& v : row) v = U(rng);
  return ScalarField::from_function(grid, [&](const std::vector<double>& x) {
    double s = 0.0;
    for (int k = 0; k < 4; ++k) {
      double ph = 2 * std::numbers::pi * (k + 1) * x[0] / grid.extent(0);
      double q = grid.dim() > 1 ? 2 * std::numbers::pi * (k % 3 + 1) * x[1] / grid.extent(1) : 0.0;
      s += a[k][0] * std::cos(ph + a[k][2]) + a[k][1] * std::sin(q + ph * a[k][2]);
    }
    return amp * s / 4;
  });
}

}  // namespace

TEST_CASE("energies of constants") {
  WellSpec w;
  TorusGrid unit({16, 16}, {1.0, 1.0});
  CHECK(ac_energy(ScalarField(unit, 1.0), 0.1, w).total_E == 0.0);
  CHECK(ac_energy(ScalarField(unit, 0.0), 0.1, w).total_E == doctest::Approx(2.5).epsilon(1e-14));

  TorusGrid grid({24, 20}, {3.0, 2.0});
  auto g = smooth_random(grid, 1);
  g = pointwise_map(g, [](double s) { return 1.0 + 0.5 * s; });
  const double lam = 0.8, ig = lam * integrate(g);
  CHECK(pmc_energy(ScalarField(grid, -1.0), 0.1, g, lam, w).total_F == doctest::Approx(ig));
  CHECK(pmc_energy(ScalarField(grid, 1.0), 0.1, g, lam, w).total_F == doctest::Approx(-ig));
  auto u = smooth_random(grid, 2);
  auto r0 = pmc_energy(u, 0.1, g, 0.0, w);
  CHECK(r0.total_F == r0.total_E);
  auto r = pmc_energy(u, 0.1, g, lam, w);
  CHECK(r.total_E == doctest::Approx(r.dirichlet + r.potential));
  CHECK(r.total_F == doctest::Approx(r.total_E - r.forcing));
}

TEST_CASE("energy of a double layer on a circle") {
  WellSpec w;
  const double eps = 0.05, L = 4.0;
  TorusGrid grid({2048}, {L});
  auto u = ScalarField::from_function(grid, [&](const std::vector<double>& x) {
    return double_profile(w, eps, 0.0, periodic_offset(x[0], L / 2, L));
  });
  Profile1D psi{Profile1D::Kind::double_layer, eps, 0.0, w};
  const double oracle = profile_energy(psi);
  CHECK(oracle == doctest::Approx(4 * kSigma).epsilon(1e-8));
  CHECK(ac_energy(u, eps, w).total_E == doctest::Approx(oracle).epsilon(2e-3));
}

TEST_CASE("first variation at the constants") {
  WellSpec w;
  TorusGrid grid({16, 16}, {2.0, 2.0});
  auto g = pointwise_map(smooth_random(grid, 3), [](double s) { return 1.2 + s; });
  const double lam = 0.7, eps = 0.1;
  auto R = first_variation(ScalarField(grid, -1.0), eps, g, lam, w);
  for (std::size_t i = 0; i < R.size(); ++i) CHECK(R[i] == doctest::Approx(-lam * g[i]));
  // c = 3 keeps -1 + c eps inside the range where W' increases.
  auto high = first_variation(ScalarField(grid, -1.0 + 3 * eps), eps, g, lam, w);
  CHECK(high.min() > 0.0);
}

TEST_CASE("first variation is the exact gradient") {
  WellSpec w;
  TorusGrid grid({64, 64}, {3.0, 3.0});
  const double eps = 0.1, lam = kSigma;
  auto g = pointwise_map(smooth_random(grid, 4), [](double s) { return 1.0 + 0.5 * s; });
  auto u = smooth_random(grid, 5, 1.5);
  auto R = first_variation(u, eps, g, lam, w);
  for (unsigned k = 0; k < 20; ++k) {
    auto phi = smooth_random(grid, 100 + k);
    const double exact = inner(R, phi);
    double best = 1e300;
    for (double h : {1e-3, 1e-4, 1e-5, 1e-6}) {
      double fp = pmc_energy(axpy(h, phi, u), eps, g, lam, w).total_F;
      double fm = pmc_energy(axpy(-h, phi, u), eps, g, lam, w).total_F;
      best = std::min(best, std::abs((fp - fm) / (2 * h) - exact) / std::abs(exact));
    }
    CHECK(best <= 1e-7);
  }
}

TEST_CASE("Jacobi operator") {
  WellSpec w;
  TorusGrid grid({48, 40}, {3.0, 2.5});
  const double eps = 0.1;
  auto g = ScalarField(grid, 1.0);
  auto u = smooth_random(grid, 6, 1.5);
  CHECK(sup_norm(jacobi_apply(u, eps, w, ScalarField(grid, 0.0))) == 0.0);
  for (unsigned k = 0; k < 5; ++k) {
    auto phi = smooth_random(grid, 200 + k), psi = smooth_random(grid, 300 + k);
    auto Jphi = jacobi_apply(u, eps, w, phi);
    const double d = 1e-5;
    auto fd = (1.0 / d) * (first_variation(axpy(d, phi, u), eps, g, 1.0, w) - first_variation(u, eps, g, 1.0, w));
    CHECK(l2_norm(fd - Jphi) <= 1e-5 * l2_norm(Jphi));
    double a = inner(Jphi, psi), b = inner(phi, jacobi_apply(u, eps, w, psi));
    CHECK(std::abs(a - b) <= 1e-12 * std::max(std::abs(a), l2_norm(Jphi) * l2_norm(psi)));
    double Q = stability_quadratic(u, eps, w, phi);
    CHECK(Q == doctest::Approx(inner(phi, Jphi)).epsilon(1e-10));
  }
}

TEST_CASE("Jacobi operator at +1 against the Fourier oracle") {
  WellSpec w;
  const double eps = 0.1, L = 2.0;
  const int n = 32;
  TorusGrid grid({n, n}, {L, L});
  const double h = L / n, k = 2 * std::numbers::pi / L;
  auto phi = ScalarField::from_function(grid, [&](const std::vector<double>& x) { return std::cos(k * x[0]); });
  const double symbol = 4 / (h * h) * std::pow(std::sin(k * h / 2), 2);
  auto Jphi = jacobi_apply(ScalarField(grid, 1.0), eps, w, phi);
  CHECK(l2_norm(Jphi - (eps * symbol + 2 / eps) * phi) <= 1e-10 * l2_norm(Jphi));

  auto spec = morse_index(ScalarField(grid, 1.0), eps, w, 3);
  CHECK(spec.converged);
  CHECK(spec.negative_count == 0);
  CHECK(spec.eigenvalues[0] == doctest::Approx(2 / eps).epsilon(1e-6));
  CHECK(spec.eigenvalues[1] == doctest::Approx(eps * symbol + 2 / eps).epsilon(1e-6));
}

TEST_CASE("morse index counts negative directions") {
  WellSpec w;
  TorusGrid grid({64}, {4.0});
  // u = 0 has W''(0)/eps = -1/eps: every Fourier mode with eps k^2 < 1/eps is negative.
  const double eps = 0.5;
  auto spec = morse_index(ScalarField(grid, 0.0), eps, w, 6);
  int expected = 0;
  const double h = 4.0 / 64;
  for (int m = -32; m < 32; ++m) {
    double k = 2 * std::numbers::pi * m / 4.0;
    double lam = eps * 4 / (h * h) * std::pow(std::sin(k * h / 2), 2) - 1 / eps;
    if (lam < -1e-6 / eps) ++expected;
  }
  REQUIRE(expected < 6);
  CHECK(spec.negative_count == expected);
}
