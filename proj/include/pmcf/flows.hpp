#pragma once

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "pmcf/error.hpp"
#include "pmcf/functionals.hpp"
#include "pmcf/grid.hpp"
#include "pmcf/spectral.hpp"
#include "pmcf/well.hpp"

namespace pmcf {

struct FlowRecord {
  int step = 0;
  double time = 0.0;
  double total_F = 0.0;
  double residual_sup = 0.0;
  double umin = 0.0;
  double umax = 0.0;
};

enum class FlowTermination { converged, max_steps, blow_up_guard };

auto to_string(FlowTermination t) -> const char*;

struct FlowTrace {
  std::vector<FlowRecord> records;
  FlowTermination termination = FlowTermination::max_steps;
  int dt_halvings = 0;

  // Largest increase of total_F between consecutive records, relative to |F|.
  [[nodiscard]] auto worst_energy_increase() const -> double;
};

class FlowError : public Error {
 public:
  FlowError(const std::string& what, FlowTrace trace, ScalarField last)
      : Error(ErrorKind::numeric, what), trace_(std::move(trace)), last_(std::move(last)) {}
  [[nodiscard]] auto trace() const -> const FlowTrace& { return trace_; }
  [[nodiscard]] auto last() const -> const ScalarField& { return last_; }

 private:
  FlowTrace trace_;
  ScalarField last_;
};

// 1e-8 * (lambda max g + 1/eps)
auto default_flow_tol(double eps, const ScalarField& g, double lambda) -> double;

// Stabilised semi-implicit step of eps u_t = eps lap u - W'(u)/eps + lambda g:
//   (eps/dt + S/eps - eps lap) u+ = (eps/dt + S/eps) u - W'(u)/eps + lambda g.
// With S >= max W'' on the range of u the update is order preserving and
// never increases F; stationary points are fixed points exactly.
class FlowStepper {
 public:
  FlowStepper(const ScalarField& g, double eps, double lambda, const WellSpec& w, double dt = 0.0);

  [[nodiscard]] auto step(const ScalarField& u) -> ScalarField;
  // Choose S for fields taking values in [lo, hi].
  void fit_stabilisation(double lo, double hi);

  [[nodiscard]] auto dt() const -> double { return dt_; }
  void set_dt(double dt);
  [[nodiscard]] auto stabilisation() const -> double { return stab_; }
  [[nodiscard]] auto valid_range() const -> std::pair<double, double> { return {lo_, hi_}; }
  [[nodiscard]] auto eps() const -> double { return eps_; }
  [[nodiscard]] auto lambda() const -> double { return lambda_; }
  [[nodiscard]] auto forcing() const -> const ScalarField& { return g_; }
  [[nodiscard]] auto well() const -> const WellSpec& { return well_; }

 private:
  ScalarField g_;
  double eps_;
  double lambda_;
  WellSpec well_;
  double dt_;
  double stab_ = 0.0;
  double lo_ = -1.25, hi_ = 1.25;
  std::unique_ptr<PeriodicSpectral> spectral_;
  std::vector<double> rhs_;
};

auto flow_step(const ScalarField& u, double eps, const ScalarField& g, double lambda, double dt, const WellSpec& w)
    -> ScalarField;

struct FlowOptions {
  double dt = 0.0;          // 0 selects eps/4
  int max_steps = 200000;
  bool require_monotone = false;  // abort if any node decreases
  double monotone_slack = 1e-12;
  bool throw_on_max_steps = true;
  // Called with (step, field) for the initial field and after every accepted step.
  std::function<void(int, const ScalarField&)> observer;
};

// Runs the flow until the sup norm of first_variation is <= tol.
auto flow_to_stationary(const ScalarField& u0, double eps, const ScalarField& g, double lambda, const WellSpec& w,
                        double tol, int max_steps, const FlowOptions& opts = {})
    -> std::pair<ScalarField, FlowTrace>;

struct BarrierReport {
  double c = 0.0;        // the constant used for the corridor [-1, -1 + c eps] and [1, 1 + c eps]
  double c_min = 0.0;    // smallest constant for which both upper barriers hold
  double c_max = 0.0;
  double min_drive_at_minus_one = 0.0;  // min over nodes of -F'(-1)
  double max_drive_at_lower = 0.0;      // max over nodes of -F'(-1 + c eps)
  double min_drive_at_plus_one = 0.0;   // min over nodes of -F'(1)
  double max_drive_at_upper = 0.0;      // max over nodes of -F'(1 + c eps)
  [[nodiscard]] auto holds() const -> bool {
    return min_drive_at_minus_one > 0 && max_drive_at_lower < 0 && min_drive_at_plus_one > 0 && max_drive_at_upper < 0;
  }
};

struct ValleyPoints {
  ScalarField a;
  ScalarField b;
  BarrierReport barrier;
  FlowTrace trace_a;
  FlowTrace trace_b;
};

// Stable solutions reached by the flow from the constants -1 and +1, with
// the barrier constant c measured from the forcing. Throws a numeric error
// when no c <= c_max works (eps too large for this g); c_max <= 0 selects the
// largest c for which W'(-1 + c eps) is still increasing.
auto valley_points(double eps, const ScalarField& g, double lambda, const WellSpec& w, double tol = 0.0,
                   double c_max = 0.0, int max_steps = 1000000) -> ValleyPoints;

}  // namespace pmcf
