#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pmcf/error.hpp"
#include "pmcf/flows.hpp"
#include "pmcf/functionals.hpp"
#include "pmcf/grid.hpp"
#include "pmcf/minmax.hpp"
#include "pmcf/well.hpp"

namespace pmcf {

// Geodesic ball D on M, given on the tangential axis by centre and radius;
// B is the concentric ball of half the radius.
struct Window {
  double centre = 0.0;
  double radius = 0.0;
  [[nodiscard]] auto inner_radius() const -> double { return 0.5 * radius; }
};

// Union of flat sheets {x_normal = offset}. On T^1 the sheets are points.
struct InterfaceSpec {
  int normal_axis = 0;
  std::vector<double> offsets;
  std::vector<Window> windows;  // along tangential axis 1 - normal_axis; d = 2 only

  [[nodiscard]] auto tangential_axis() const -> int { return 1 - normal_axis; }
  // Measure of M.
  [[nodiscard]] auto measure(const TorusGrid& grid) const -> double;
  // Half the smallest gap between sheets along the normal axis.
  [[nodiscard]] auto reach(const TorusGrid& grid) const -> double;
  void validate(const TorusGrid& grid) const;
};

struct DistanceField {
  ScalarField d;
  std::string provenance;
  double reach = 0.0;  // distances below this are free of the cut locus
};

// Closed-form unsigned distance to the sheets.
auto distance_field(const InterfaceSpec& spec, const TorusGrid& grid) -> DistanceField;
// First-order fast marching from the nodes where mask is nonzero.
auto distance_from_mask(const TorusGrid& grid, const std::vector<char>& mask) -> DistanceField;

// 12 eps |log eps|, the width that must fit below the reach.
auto smallness_width(double eps) -> double;

// Psi_0(d) where d < reach, -1 elsewhere.
auto recovery_function(const DistanceField& d, double eps, const WellSpec& w) -> ScalarField;

// Cutoff chi_D on the tangential coordinate: 1 on B, supported in D.
auto window_cutoff(const Window& win, double period, double q) -> double;
auto window_cutoff_d1(const Window& win, double period, double q) -> double;
auto window_cutoff_d2(const Window& win, double period, double q) -> double;

struct BumpParameters {
  double t0 = 0.0;
  double tau = 0.0;             // (J(0) - J(t0)) / 2
  double curvature_cap = 0.0;   // min(lambda g / sigma) / 20
  double curvature_at_t0 = 0.0;
  double max_slope = 0.0;       // max |chi_D'|
  double J0 = 0.0;              // 2 |D|
  std::vector<double> t_samples;
  std::vector<double> J_samples;
};

// Per-window data and shared fields for the construction on T^2.
struct RecoverySetup {
  InterfaceSpec spec;
  std::shared_ptr<const TorusGrid> grid;
  double eps = 0.0;
  double lambda = 0.0;
  WellSpec well;
  ScalarField g;
  DistanceField distance;
  ScalarField G0;
  std::vector<BumpParameters> bumps;
  // Nodes where a window deformation may differ from G0.
  std::vector<std::vector<std::size_t>> window_nodes;
  double margin = 0.0;  // 2 eps Lambda + 2h
  double varsigma = 0.0;
};

auto make_recovery_setup(const InterfaceSpec& spec, const ScalarField& g, double eps, double lambda,
                         const WellSpec& w) -> RecoverySetup;

// Choose t0 and tau_B for window j by a line search on J(0, t) under the curvature cap.
auto select_bump(const RecoverySetup& setup, std::size_t j) -> BumpParameters;

// Outer sheets pushed to the graph |s| = 2 eps Lambda + t chi_D(q); t in [0, t0].
auto bump_out(const RecoverySetup& setup, std::size_t j, double t) -> ScalarField;
// Double layer over D annihilated progressively: Psi_{-t chi_D(q)}(|s|); t in [-4 eps Lambda, 0].
auto bump_down(const RecoverySetup& setup, std::size_t j, double t) -> ScalarField;
// bump_down for t < 0, bump_out for t >= 0.
auto window_deformation(const RecoverySetup& setup, std::size_t j, double t) -> ScalarField;
// G0 with both windows replaced by their deformations.
auto two_window_field(const RecoverySetup& setup, double t1, double t2) -> ScalarField;

struct LabelledPath {
  PhasePath path;
  std::vector<std::string> stage;  // one label per knot
  std::vector<double> parameter;   // construction parameter per knot
};

// gamma_t for t in [-4 eps Lambda - t0(1), 4 eps Lambda + t0(2)], `per_stage` samples per stage.
auto avoid_peak_path(const RecoverySetup& setup, int per_stage = 8) -> LabelledPath;

// f_r for r in [0, 4 eps Lambda] starting at the first gamma knot, followed by
// the flow from -1 to a; the last knot is a.
auto path_to_valley(const RecoverySetup& setup, int samples = 8, int flow_stride = 1) -> LabelledPath;

struct PairingReport {
  double min_value = 0.0;
  std::size_t argmin = 0;
  double radius = 0.0;  // physical radius of the test bumps
};

// Pairs f against normalised nonnegative bumps of the given radius centred at
// every node (nodes with exclude set are skipped as centres).
auto pair_with_battery(const ScalarField& f, double radius, const std::vector<char>* exclude = nullptr)
    -> PairingReport;

struct SeedReport {
  ScalarField h;
  PairingReport convexity;        // paired -first_variation(h)
  double threshold = 0.0;         // min(lambda g) / 2
  std::vector<char> witness;      // nodes over B_1 and B_2 where h = 1
  std::size_t witness_count = 0;
};

// h = gamma at the final parameter; throws a construction error when the
// paired convexity margin fails.
auto mean_convex_seed(const RecoverySetup& setup, double tol = 1e-9) -> SeedReport;

// Periodic convolution with a normalised exp(-1/(1-r^2)) bump of radius
// delta grid units (times the smallest spacing).
auto mollify(const ScalarField& u, double delta) -> ScalarField;

struct StableReport {
  ScalarField v;
  ScalarField seed;               // the mollified h the flow starts from
  double delta = 0.0;             // grid units
  FlowTrace trace;
  std::vector<ScalarField> snapshots;
  bool monotone = true;
  double min_increase = 0.0;      // min over nodes of v - seed
  bool witness_contained = false; // {v > 3/4} covers the witness
  std::optional<bool> below_b;    // v <= b node-wise when b is supplied
  bool equals_b = false;          // v and b agree to 1e-8 when b is supplied
  SpectrumReport spectrum;
};

auto stable_from_seed(const SeedReport& seed, const RecoverySetup& setup, const std::optional<ScalarField>& b,
                      double tol = 0.0, int snapshot_stride = 10, int max_steps = 1000000) -> StableReport;

struct LedgerRow {
  std::size_t index = 0;
  std::string stage;
  double total_E = 0.0;
  double total_F = 0.0;
  double bound = 0.0;   // 2|M| + integral(lambda g)/(2 sigma) - varsigma/2
  double margin = 0.0;  // bound - total_F / (2 sigma)
};

auto energy_ledger(const RecoverySetup& setup, const std::vector<ScalarField>& knots,
                   const std::vector<std::string>& stages) -> std::vector<LedgerRow>;

}  // namespace pmcf
