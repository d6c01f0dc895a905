#include <doctest.h>

#include <cmath>
#include <numbers>

#include "pmcf/flows.hpp"
#include "pmcf/minmax.hpp"
#include "pmcf/profiles.hpp"

using namespace pmcf;

namespace {

const double kSigma = std::sqrt(2.0) / 3.0;

struct Setup {
  std::shared_ptr<const TorusGrid> grid;
  ScalarField g;
  ValleyPoints vp;
};

auto setup(std::vector<int> dims, std::vector<double> ext, double eps) -> Setup {
  auto grid = std::make_shared<const TorusGrid>(dims, ext);
  ScalarField g(grid, 1.0);
  auto vp = valley_points(eps, g, kSigma, WellSpec{});
  return {grid, g, std::move(vp)};
}

}  // namespace

TEST_CASE("wall coordinate") {
  TorusGrid grid({16, 16}, {2.0, 3.0});
  auto g = ScalarField::from_function(grid, [](const std::vector<double>& x) { return 1.0 + 0.5 * std::cos(x[0]); });
  CHECK(wall_coordinate(ScalarField(grid, -1.0), g) == doctest::Approx(0.0));
  CHECK(wall_coordinate(ScalarField(grid, 1.0), g) == doctest::Approx(2 * integrate(g)));

  // A Psi-disc of radius R marks a ball; its wall coordinate is about twice the integral of g over it.
  const double eps = 0.05, R = 0.6;
  TorusGrid fine({200, 200}, {3.0, 3.0});
  ScalarField one(fine, 1.0);
  WellSpec w;
  auto disc = ScalarField::from_function(fine, [&](const std::vector<double>& x) {
    double r = std::hypot(x[0] - 1.5, x[1] - 1.5);
    return truncated_profile(w, eps, R - r);
  });
  CHECK(wall_coordinate(disc, one) == doctest::Approx(2 * std::numbers::pi * R * R).epsilon(0.02));
}

TEST_CASE("initial path") {
  const double eps = 0.1;
  auto s = setup({48, 48}, {3.2, 3.2}, eps);
  auto path = initial_path(s.vp.a, s.vp.b, eps, s.g, 24);
  REQUIRE(path.size() == 24);
  CHECK(path.knots.front().values() == s.vp.a.values());
  CHECK(path.knots.back().values() == s.vp.b.values());
  CHECK(path.params.front() == -1.0);
  CHECK(path.params.back() == 1.0);
  CHECK_NOTHROW(path.validate());
  double prev = -1.0, Emax = 0.0;
  for (const auto& k : path.knots) {
    double wc = wall_coordinate(k, s.g);
    CHECK(wc > prev);
    prev = wc;
    Emax = std::max(Emax, ac_energy(k, eps, WellSpec{}).total_E);
  }
  // Coarea oracle: the largest front of a growing geodesic ball on a square
  // torus of side L is the circle of radius L/2, of length pi L.
  CHECK(Emax <= 1.2 * 2 * kSigma * std::numbers::pi * 3.2);
}

TEST_CASE("path validation") {
  TorusGrid grid({16}, {1.0});
  PhasePath p;
  p.knots = {ScalarField(grid, -1.0), ScalarField(grid, 0.0), ScalarField(grid, 1.0)};
  p.params = {-1.0, 0.0, 1.0};
  CHECK_NOTHROW(p.validate());
  p.mesh = 0.5;
  CHECK_THROWS_AS(p.validate(), Error);
  p.mesh = 0.0;
  p.params = {-1.0, 0.5, 0.5};
  CHECK_THROWS_AS(p.validate(), Error);
  p.params = {-1.0, 0.0};
  CHECK_THROWS_AS(p.validate(), Error);
  p.params = {-1.0, 0.0, 1.0};
  p.knots[1] = ScalarField(TorusGrid({16}, {2.0}), 0.0);
  CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("mountain pass on a circle") {
  const double eps = 0.1;
  WellSpec w;
  auto s = setup({256}, {4.0}, eps);
  auto path = initial_path(s.vp.a, s.vp.b, eps, s.g, 24);
  MinmaxOptions opts;
  auto res = mountain_pass(path, eps, s.g, kSigma, w, opts);
  const double ig = kSigma * integrate(s.g);

  CHECK(res.beta > ig);
  CHECK(res.residual <= default_flow_tol(eps, s.g, kSigma));
  CHECK(std::abs(res.beta - pmc_energy(res.saddle, eps, s.g, kSigma, w).total_F) <=
        default_flow_tol(eps, s.g, kSigma) * 10);
  CHECK(res.peak_index == static_cast<std::size_t>(
                              std::max_element(res.knot_F.begin(), res.knot_F.end()) - res.knot_F.begin()));
  CHECK(res.path.knots.front().values() == s.vp.a.values());
  CHECK(res.path.knots.back().values() == s.vp.b.values());
  CHECK(res.spectrum.negative_count <= 1);
  CHECK(res.spectrum.negative_count == 1);

  // In one dimension the saddle is a pair of transitions: energy close to 2 (2 sigma).
  double E = pmc_energy(res.saddle, eps, s.g, kSigma, w).total_E;
  CHECK(E == doctest::Approx(4 * kSigma).epsilon(0.1));

  // The descent step never raises the path maximum; re-sampling may, and
  // the climbing knot does by design.
  for (const auto& sw : res.sweeps) {
    if (sw.sweep > opts.climb_after) break;
    CHECK(sw.path_max_after <= sw.path_max_before + 1e-10 * std::abs(sw.path_max_before));
  }

  auto wall = verify_wall(res, s.g, ig);
  CHECK_FALSE(wall.warning);
  CHECK(wall.exceeds);
  auto start = verify_wall(res, s.g, 0.0);
  REQUIRE_FALSE(start.knots_in_band.empty());
  CHECK(start.knots_in_band.front() == 0);
  CHECK(res.knot_F.front() < ig);
}

TEST_CASE("refine_critical_point finds the constant solutions") {
  const double eps = 0.1;
  WellSpec w;
  TorusGrid grid({32}, {2.0});
  ScalarField g(grid, 1.0);
  auto r = refine_critical_point(ScalarField(grid, 0.9), eps, g, kSigma, w, 1e-10);
  CHECK(r.converged);
  CHECK(r.residual <= 1e-10);
  CHECK(sup_norm(first_variation(r.field, eps, g, kSigma, w)) <= 1e-10);
}
