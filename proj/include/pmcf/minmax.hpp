#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pmcf/error.hpp"
#include "pmcf/functionals.hpp"
#include "pmcf/grid.hpp"
#include "pmcf/well.hpp"

namespace pmcf {

// Discrete path t -> u_t: knots at strictly increasing parameters in [-1, 1].
struct PhasePath {
  std::vector<ScalarField> knots;
  std::vector<double> params;
  // Bound on the L2 distance between consecutive knots.
  double mesh = 0.0;

  [[nodiscard]] auto size() const -> std::size_t { return knots.size(); }
  // L2 distances between consecutive knots.
  [[nodiscard]] auto spacings() const -> std::vector<double>;
  // Throws an input error when the knot count, parameters or mesh bound are violated.
  void validate() const;
};

// integrate(g u) + integrate(g): 0 at u = -1, 2 integrate(g) at u = +1.
auto wall_coordinate(const ScalarField& u, const ScalarField& g) -> double;

// Re-sample a path at equal L2 arclength, keeping both endpoints.
auto equidistribute(const std::vector<ScalarField>& knots, std::size_t count) -> std::vector<ScalarField>;

// Sweep from a to b by a growing geodesic ball centred at the node where g
// is largest: u_s = a + (b - a)(Hbar(s - |x - x0|) + 1)/2, re-sampled to
// equal L2 arclength. Endpoints are a and b exactly.
auto initial_path(const ScalarField& a, const ScalarField& b, double eps, const ScalarField& g, int n_knots,
                  const WellSpec& w = {}) -> PhasePath;

struct SaddleRefinement {
  ScalarField field;
  double residual = 0.0;  // sup norm of first_variation
  int newton_steps = 0;
  int krylov_steps = 0;
  bool converged = false;
};

// Newton iteration for first_variation = 0 with preconditioned MINRES on the
// Jacobi operator. Converges to nearby critical points of any index.
auto refine_critical_point(const ScalarField& u0, double eps, const ScalarField& g, double lambda, const WellSpec& w,
                           double tol, int max_newton = 40) -> SaddleRefinement;

struct MinmaxOptions {
  int max_sweeps = 20000;
  double tol = 0.0;           // 0 selects default_flow_tol
  double dt = 0.0;            // 0 selects eps/4
  bool climb = true;
  int climb_after = 50;       // sweeps of plain descent before the peak knot climbs
  // Hand the climbing knot to Newton once its residual is below this multiple of tol.
  double polish_ratio = 1e5;
  bool polish = true;
  int spectrum_k = 4;
  MorseOptions morse{};
};

struct SweepRecord {
  int sweep = 0;
  std::size_t peak_index = 0;
  double peak_F = 0.0;
  double peak_residual = 0.0;
  // Largest knot energy before and after the descent step, before re-sampling.
  double path_max_before = 0.0;
  double path_max_after = 0.0;
};

struct MinmaxResult {
  ScalarField saddle;
  double beta = 0.0;
  double residual = 0.0;
  double peak_param = 0.0;
  std::size_t peak_index = 0;
  PhasePath path;
  std::vector<double> knot_F;
  std::vector<double> knot_wall;
  SpectrumReport spectrum;
  std::vector<SweepRecord> sweeps;
  int newton_steps = 0;
  double eps = 0.0;
  double lambda = 0.0;
};

class MinmaxError : public Error {
 public:
  MinmaxError(ErrorKind kind, const std::string& what, ScalarField best)
      : Error(kind, what), best_(std::move(best)) {}
  [[nodiscard]] auto best() const -> const ScalarField& { return best_; }

 private:
  ScalarField best_;
};

// String method with one climbing knot, finished by Newton polishing of the
// climbing knot. Endpoints stay fixed.
auto mountain_pass(const PhasePath& path0, double eps, const ScalarField& g, double lambda, const WellSpec& w,
                   const MinmaxOptions& opts = {}) -> MinmaxResult;

struct WallReport {
  double delta_probe = 0.0;
  double band = 0.0;
  std::vector<std::size_t> knots_in_band;
  double min_F = 0.0;          // over knots in the band
  double threshold = 0.0;      // integral of lambda g
  bool exceeds = false;
  std::optional<std::string> warning;
};

// band <= 0 selects half the largest gap between consecutive wall coordinates.
auto verify_wall(const MinmaxResult& result, const ScalarField& g, double delta_probe, double band = 0.0)
    -> WallReport;

}  // namespace pmcf
