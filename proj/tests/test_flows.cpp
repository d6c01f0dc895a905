#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "pmcf/flows.hpp"

using namespace pmcf;

namespace {

const double kSigma = std::sqrt(2.0) / 3.0;

// Root of s^3 - s = target near the well at `well`, by bisection on [well, well + 0.5].
auto cubic_root_near(double well, double target) -> double {
  double lo = well, hi = well + 0.5;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    (mid * mid * mid - mid > target ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

auto bumpy_g(const TorusGrid& grid) -> ScalarField {
  return ScalarField::from_function(grid, [&](const std::vector<double>& x) {
    double s = 1.0 + 0.3 * std::cos(2 * std::numbers::pi * x[0] / grid.extent(0));
    if (grid.dim() > 1) s += 0.2 * std::sin(2 * std::numbers::pi * x[1] / grid.extent(1));
    return s;
  });
}

}  // namespace

TEST_CASE("a stationary field is a fixed point of the step") {
  WellSpec w;
  TorusGrid grid({16, 16}, {2.0, 2.0});
  const double eps = 0.1, lam = kSigma;
  ScalarField g(grid, 1.0);
  // Constant solution of W'(u)/eps = lambda.
  ScalarField a(grid, cubic_root_near(-1.0, eps * lam));
  REQUIRE(sup_norm(first_variation(a, eps, g, lam, w)) < 1e-12);
  CHECK(sup_norm(flow_step(a, eps, g, lam, eps / 4, w) - a) < 1e-10);
}

TEST_CASE("one step from -1 moves every node up") {
  WellSpec w;
  TorusGrid grid({16, 16}, {2.0, 2.0});
  auto g = bumpy_g(grid);
  ScalarField u(grid, -1.0);
  auto next = flow_step(u, 0.1, g, 1.0, 0.025, w);
  for (std::size_t i = 0; i < u.size(); ++i) CHECK(next[i] > -1.0);
}

TEST_CASE("comparison principle") {
  WellSpec w;
  TorusGrid grid({16}, {1.0});
  const double eps = 0.1, dt = eps / 4;
  auto g = bumpy_g(grid);
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> U(-1.0, 1.1);
  FlowStepper stepper(g, eps, 1.0, w, dt);
  stepper.fit_stabilisation(-1.2, 1.3);
  for (int trial = 0; trial < 50; ++trial) {
    ScalarField u(grid), v(grid);
    for (std::size_t i = 0; i < u.size(); ++i) {
      u[i] = U(rng);
      v[i] = std::min(1.2, u[i] + std::abs(U(rng)) * (trial % 2));
    }
    auto su = stepper.step(u), sv = stepper.step(v);
    for (std::size_t i = 0; i < u.size(); ++i) CHECK(su[i] <= sv[i] + 1e-12);
  }

  // Reference: the fully explicit scheme with a tiny step is monotone too.
  const double small = 1e-4;
  for (int trial = 0; trial < 10; ++trial) {
    ScalarField u(grid), v(grid);
    for (std::size_t i = 0; i < u.size(); ++i) {
      u[i] = U(rng);
      v[i] = std::min(1.2, u[i] + std::abs(U(rng)));
    }
    for (int k = 0; k < 250; ++k) {
      u = axpy(-small / eps, first_variation(u, eps, g, 1.0, w), u);
      v = axpy(-small / eps, first_variation(v, eps, g, 1.0, w), v);
    }
    auto su = stepper.step(u), sv = stepper.step(v);
    for (std::size_t i = 0; i < u.size(); ++i) {
      CHECK(u[i] <= v[i] + 1e-12);
      CHECK(su[i] <= sv[i] + 1e-12);
    }
  }
}

TEST_CASE("flow to stationary dissipates and converges") {
  WellSpec w;
  TorusGrid grid({32, 32}, {2.0, 2.0});
  const double eps = 0.1, lam = kSigma;
  auto g = bumpy_g(grid);
  auto u0 = ScalarField::from_function(grid, [](const std::vector<double>& x) {
    return 0.9 * std::sin(std::numbers::pi * x[0]) * std::cos(std::numbers::pi * x[1]);
  });
  const double tol = default_flow_tol(eps, g, lam);
  CHECK(tol == doctest::Approx(1e-8 * (lam * g.max() + 1 / eps)));
  auto [u, trace] = flow_to_stationary(u0, eps, g, lam, w, tol, 100000);
  CHECK(trace.termination == FlowTermination::converged);
  CHECK(sup_norm(first_variation(u, eps, g, lam, w)) <= tol);
  CHECK(trace.worst_energy_increase() <= 1e-12);
  for (std::size_t k = 1; k < trace.records.size(); ++k)
    CHECK(trace.records[k].total_F <= trace.records[k - 1].total_F + 1e-12 * std::abs(trace.records[k - 1].total_F));
}

TEST_CASE("max steps raise a flow error carrying the trace") {
  WellSpec w;
  TorusGrid grid({16, 16}, {2.0, 2.0});
  ScalarField g(grid, 1.0);
  auto u0 = ScalarField::from_function(grid, [](const std::vector<double>& x) { return std::sin(3 * x[0]); });
  try {
    (void)flow_to_stationary(u0, 0.1, g, 0.5, w, 1e-12, 3);
    FAIL("expected a flow error");
  } catch (const FlowError& e) {
    CHECK(e.kind() == ErrorKind::numeric);
    CHECK(e.trace().termination == FlowTermination::max_steps);
    CHECK_FALSE(e.last().empty());
  }
}

TEST_CASE("valley points with constant forcing") {
  WellSpec w;
  TorusGrid grid({16, 16}, {2.0, 2.0});
  const double eps = 0.1, lam = kSigma;
  ScalarField g(grid, 1.0);
  auto vp = valley_points(eps, g, lam, w);
  const double a_exact = cubic_root_near(-1.0, eps * lam), b_exact = cubic_root_near(1.0, eps * lam);
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(vp.a[i] == doctest::Approx(a_exact).epsilon(1e-8));
    CHECK(vp.b[i] == doctest::Approx(b_exact).epsilon(1e-8));
  }
  const double c_oracle = std::max(a_exact + 1.0, b_exact - 1.0) / eps;
  CHECK(vp.barrier.c_min == doctest::Approx(c_oracle).epsilon(1e-9));
  CHECK(vp.barrier.holds());
  // Linearisation: c is lambda max g / W''(-1) up to O(eps).
  CHECK(std::abs(vp.barrier.c_min - lam / 2) <= 2 * eps * lam);
  CHECK(vp.a.max() < -1.0 + vp.barrier.c * eps);
  CHECK(vp.b.max() < 1.0 + vp.barrier.c * eps);

  auto [again, trace] = flow_to_stationary(vp.a, eps, g, lam, w, default_flow_tol(eps, g, lam), 10);
  CHECK(trace.records.size() == 1);
  CHECK(again.values() == vp.a.values());
  CHECK(morse_index(vp.a, eps, w, 2).negative_count == 0);
}

TEST_CASE("valley points with varying forcing stay in the corridor") {
  WellSpec w;
  TorusGrid grid({32, 32}, {2.0, 2.0});
  auto g = bumpy_g(grid);
  for (double eps : {0.1, 0.05}) {
    auto vp = valley_points(eps, g, kSigma, w);
    const double c = vp.barrier.c;
    CHECK(vp.a.min() > -1.0);
    CHECK(vp.a.max() < -1.0 + c * eps);
    CHECK(vp.b.min() > 1.0);
    CHECK(vp.b.max() < 1.0 + c * eps);
    CHECK(sup_norm(pointwise_map(vp.a, [](double s) { return s + 1; })) <= c * eps);
  }
  CHECK_THROWS_AS(valley_points(0.1, ScalarField(grid, 0.0), kSigma, w), Error);
}
