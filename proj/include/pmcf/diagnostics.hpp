#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "pmcf/error.hpp"
#include "pmcf/grid.hpp"
#include "pmcf/well.hpp"

namespace pmcf {

using Point2 = std::array<double, 2>;

// Zero-crossing polyline, unwrapped so consecutive points are close; a
// closed polyline does not repeat its first point.
struct Polyline {
  std::vector<Point2> points;
  bool closed = false;
  // Unit normals pointing into {u > level}.
  std::vector<Point2> normals;
  // Lattice shift carrying points.front() to the continuation after points.back() on a closed curve.
  Point2 wrap{0.0, 0.0};
  [[nodiscard]] auto length() const -> double;
};

struct InterfaceGeometry {
  int dim = 2;
  std::vector<Polyline> polylines;  // d = 2
  std::vector<double> crossings;    // d = 1
  std::vector<int> crossing_sign;   // d = 1: +1 when u increases through the crossing
  [[nodiscard]] auto total_length() const -> double;
  [[nodiscard]] auto empty() const -> bool { return polylines.empty() && crossings.empty(); }
};

struct BallMass {
  std::vector<double> centre;
  double radius = 0.0;
  double mass = 0.0;
  double ratio = 0.0;  // mass / (2 radius)^(d-1)-ball measure; 1 per unit multiplicity on a flat piece
};

struct MeasureReport {
  ScalarField density;  // (2 sigma)^-1 (eps |grad u|^2 / 2 + W(u) / eps)
  double mass = 0.0;
  std::vector<BallMass> balls;
  double eps = 0.0;
};

auto energy_measure(const ScalarField& u, double eps, const WellSpec& w) -> MeasureReport;
// Mass of the measure inside a ball; appended to the report.
auto ball_mass(MeasureReport& report, const std::vector<double>& centre, double radius) -> BallMass;

// Marching squares for d = 2, linear crossings for d = 1; d = 3 is unsupported.
auto extract_interface(const ScalarField& u, double level = 0.0) -> InterfaceGeometry;

struct CurvatureReport {
  std::vector<std::vector<double>> kappa;  // per polyline, per vertex; NaN where skipped
  std::vector<double> ratios;              // kappa / (lambda g / sigma) over fitted vertices
  double median_ratio = 0.0;
  double iqr_ratio = 0.0;
  double median_kappa = 0.0;
  double median_abs_kappa = 0.0;
  int window = 0;
  int skipped = 0;
  int fitted = 0;
};

// Least-squares osculating circles over `window` consecutive vertices; the
// sign is positive when the curve bends toward {u > level}. window <= 0
// selects max(5, round(R / (4 h))) with R = sigma / (lambda mean g).
auto curvature_vs_g(const InterfaceGeometry& geom, const ScalarField& g, double lambda, double sigma,
                    int window = 0) -> CurvatureReport;

struct ArcMultiplicity {
  std::size_t arc = 0;      // polyline index (d = 2) or crossing index (d = 1)
  std::size_t cluster = 0;  // arcs closer than the tube radius share a cluster
  double length = 0.0;
  double mass = 0.0;        // mass in the cluster tube divided among its arcs
  double ratio = 0.0;       // cluster mass / mean arc length in the cluster
  int estimate = 0;
  bool unreliable = false;
};

// Tube radius 6 eps Lambda around each cluster of arcs.
auto multiplicity_estimate(const MeasureReport& report, const InterfaceGeometry& geom) -> std::vector<ArcMultiplicity>;

struct PhaseComponent {
  int sign = 0;  // +1 for u > threshold, -1 for u < threshold
  std::size_t nodes = 0;
  double volume = 0.0;
};

struct PhaseReport {
  std::vector<PhaseComponent> components;
  double plus_volume = 0.0;
  double minus_volume = 0.0;
  std::vector<int> labels;  // component index per node, -1 at the threshold
};

auto phase_classify(const ScalarField& u, double threshold = 0.0) -> PhaseReport;

struct StabilityCheck {
  std::vector<double> values;
  double min_value = 0.0;
  std::size_t argmin = 0;
};

auto stability_quadratic_check(const ScalarField& u, double eps, const WellSpec& w,
                               const std::vector<ScalarField>& battery) -> StabilityCheck;
// Smooth random test fields: low Fourier modes and bumps, deterministic in seed.
auto default_test_battery(const TorusGrid& grid, int count, std::uint64_t seed) -> std::vector<ScalarField>;

// Largest distance from a vertex of one geometry to the other geometry's
// polylines, symmetrised; periodic. Infinite when exactly one is empty.
auto hausdorff_distance(const InterfaceGeometry& a, const InterfaceGeometry& b, const TorusGrid& grid) -> double;

}  // namespace pmcf
