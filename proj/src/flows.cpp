#include "pmcf/flows.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace pmcf {

auto to_string(FlowTermination t) -> const char* {
  switch (t) {
    case FlowTermination::converged:
      return "converged";
    case FlowTermination::max_steps:
      return "max-steps";
    case FlowTermination::blow_up_guard:
      return "blow-up-guard";
  }
  return "?";
}

auto FlowTrace::worst_energy_increase() const -> double {
  double worst = -1e300;
  for (std::size_t i = 1; i < records.size(); ++i) {
    double inc = (records[i].total_F - records[i - 1].total_F) / std::max(std::abs(records[i - 1].total_F), 1e-300);
    worst = std::max(worst, inc);
  }
  return records.size() < 2 ? 0.0 : worst;
}

auto default_flow_tol(double eps, const ScalarField& g, double lambda) -> double {
  return 1e-8 * (lambda * g.max() + 1.0 / eps);
}

FlowStepper::FlowStepper(const ScalarField& g, double eps, double lambda, const WellSpec& w, double dt)
    : g_(g), eps_(eps), lambda_(lambda), well_(w), dt_(dt > 0 ? dt : eps / 4.0) {
  require(eps > 0.0, ErrorKind::input, "flow: eps must be positive");
  require(dt_ > 0.0, ErrorKind::input, "flow: dt must be positive");
  spectral_ = std::make_unique<PeriodicSpectral>(g.grid());
  rhs_.resize(g.size());
  fit_stabilisation(-1.25, 1.25);
}

void FlowStepper::fit_stabilisation(double lo, double hi) {
  lo_ = lo;
  hi_ = hi;
  stab_ = std::max(0.0, max_curvature(well_, lo, hi));
}

void FlowStepper::set_dt(double dt) {
  require(dt > 0.0, ErrorKind::input, "flow: dt must be positive");
  dt_ = dt;
}

auto FlowStepper::step(const ScalarField& u) -> ScalarField {
  require_same_grid(u, g_, "flow_step");
  if (u.min() < lo_ || u.max() > hi_) {
    fit_stabilisation(std::min(lo_, u.min() - 0.05), std::max(hi_, u.max() + 0.05));
  }
  const double alpha = eps_ / dt_ + stab_ / eps_;
  const bool standard = well_.family == WellSpec::Family::standard;
  for (std::size_t i = 0; i < u.size(); ++i) {
    double s = u[i];
    double dW = (standard && std::abs(s) <= 2.0) ? standard_dW(s) : eval_well(well_, s).dW;
    rhs_[i] = alpha * s - dW / eps_ + lambda_ * g_[i];
  }
  ScalarField out(u.grid_ptr());
  spectral_->solve_helmholtz(alpha, eps_, rhs_.data(), out.data());
  return out;
}

auto flow_step(const ScalarField& u, double eps, const ScalarField& g, double lambda, double dt, const WellSpec& w)
    -> ScalarField {
  FlowStepper stepper(g, eps, lambda, w, dt);
  stepper.fit_stabilisation(std::min(-1.25, u.min() - 0.05), std::max(1.25, u.max() + 0.05));
  return stepper.step(u);
}

auto flow_to_stationary(const ScalarField& u0, double eps, const ScalarField& g, double lambda, const WellSpec& w,
                        double tol, int max_steps, const FlowOptions& opts) -> std::pair<ScalarField, FlowTrace> {
  require(tol > 0.0, ErrorKind::input, "flow_to_stationary: tol must be positive");
  FlowStepper stepper(g, eps, lambda, w, opts.dt);
  stepper.fit_stabilisation(std::min(-1.25, u0.min() - 0.05), std::max(1.25, u0.max() + 0.05));

  FlowTrace trace;
  ScalarField u = u0;
  double time = 0.0;
  auto record = [&](int step, const ScalarField& f, double F) {
    double res = sup_norm(first_variation(f, eps, g, lambda, w));
    trace.records.push_back({step, time, F, res, f.min(), f.max()});
    return res;
  };
  double F = pmc_energy(u, eps, g, lambda, w).total_F;
  if (opts.observer) opts.observer(0, u);
  if (record(0, u, F) <= tol) {
    trace.termination = FlowTermination::converged;
    return {u, trace};
  }
  for (int step = 1; step <= max_steps; ++step) {
    ScalarField next = stepper.step(u);
    EnergyReport rep = pmc_energy(next, eps, g, lambda, w);
    const double slack = 1e-12 * std::max({std::abs(F), std::abs(rep.total_E), std::abs(rep.forcing)});
    int halvings = 0;
    while (rep.total_F > F + slack) {
      require(++halvings <= 40, ErrorKind::numeric, "flow: energy keeps increasing after repeated dt halving");
      stepper.set_dt(stepper.dt() / 2);
      ++trace.dt_halvings;
      next = stepper.step(u);
      rep = pmc_energy(next, eps, g, lambda, w);
    }
    if (opts.require_monotone) {
      for (std::size_t i = 0; i < u.size(); ++i) {
        if (next[i] < u[i] - opts.monotone_slack) {
          std::ostringstream msg;
          msg << "flow: monotone increase violated at node " << i << " by " << (u[i] - next[i]);
          throw FlowError(msg.str(), trace, u);
        }
      }
    }
    time += stepper.dt();
    u = std::move(next);
    F = rep.total_F;
    double res = record(step, u, F);
    if (opts.observer) opts.observer(step, u);
    if (u.max() > 4.0 || u.min() < -4.0) {
      trace.termination = FlowTermination::blow_up_guard;
      throw FlowError("flow: blow-up guard triggered (|u| > 4)", trace, u);
    }
    if (res <= tol) {
      trace.termination = FlowTermination::converged;
      return {u, trace};
    }
  }
  trace.termination = FlowTermination::max_steps;
  if (opts.throw_on_max_steps) {
    std::ostringstream msg;
    msg << "flow: no convergence to residual " << tol << " within " << max_steps << " steps (last residual "
        << trace.records.back().residual_sup << ")";
    throw FlowError(msg.str(), trace, u);
  }
  return {u, trace};
}

namespace {

// Smallest x in (0, x_hi] with f(x) > target, for f increasing on the interval.
auto smallest_crossing(const std::function<double(double)>& f, double target, double x_hi) -> double {
  if (!(f(x_hi) > target)) return -1.0;
  double lo = 0.0, hi = x_hi;
  for (int i = 0; i < 200 && hi - lo > 1e-15 * x_hi; ++i) {
    double mid = 0.5 * (lo + hi);
    (f(mid) > target ? hi : lo) = mid;
  }
  return hi;
}

auto drive_range(const ScalarField& u, double eps, const ScalarField& g, double lambda, const WellSpec& w)
    -> std::pair<double, double> {
  ScalarField r = first_variation(u, eps, g, lambda, w);
  double lo = 1e300, hi = -1e300;
  for (double v : r.values()) {
    lo = std::min(lo, -v);
    hi = std::max(hi, -v);
  }
  return {lo, hi};
}

}  // namespace

auto valley_points(double eps, const ScalarField& g, double lambda, const WellSpec& w, double tol, double c_max, int max_steps)
    -> ValleyPoints {
  require(eps > 0.0 && lambda > 0.0, ErrorKind::input, "valley_points: eps and lambda must be positive");
  require(g.min() > 0.0, ErrorKind::input, "valley_points: g must be positive at every node");
  if (tol <= 0.0) tol = default_flow_tol(eps, g, lambda);

  // W'(-1 + x) increases from 0 until its first interior maximum.
  double x_peak = 0.0;
  {
    double prev = eval_well(w, -1.0).dW;
    for (int i = 1; i <= 20000; ++i) {
      double x = 2.0 * i / 20000;
      double v = eval_well(w, -1.0 + x).dW;
      if (v < prev) break;
      x_peak = x;
      prev = v;
    }
  }
  if (c_max <= 0.0) c_max = x_peak / eps;
  const double target = eps * lambda * g.max();
  auto lower = [&](double x) { return eval_well(w, -1.0 + x).dW; };
  auto upper = [&](double x) { return eval_well(w, 1.0 + x).dW; };
  double xl = smallest_crossing(lower, target, std::min(c_max * eps, x_peak));
  double xu = smallest_crossing(upper, target, c_max * eps);
  if (xl < 0.0 || xu < 0.0) {
    std::ostringstream msg;
    msg << "valley_points: no barrier constant c <= " << c_max << " works; eps = " << eps
        << " is too large for lambda*max g = " << lambda * g.max();
    fail(ErrorKind::numeric, msg.str());
  }
  BarrierReport rep;
  rep.c_max = c_max;
  rep.c_min = std::max(xl, xu) / eps;
  rep.c = std::min(1.25 * rep.c_min, 0.5 * (rep.c_min + std::min(c_max, x_peak / eps)));

  auto constant = [&](double v) { return ScalarField(g.grid_ptr(), v); };
  rep.min_drive_at_minus_one = drive_range(constant(-1.0), eps, g, lambda, w).first;
  rep.max_drive_at_lower = drive_range(constant(-1.0 + rep.c * eps), eps, g, lambda, w).second;
  rep.min_drive_at_plus_one = drive_range(constant(1.0), eps, g, lambda, w).first;
  rep.max_drive_at_upper = drive_range(constant(1.0 + rep.c * eps), eps, g, lambda, w).second;
  if (!rep.holds()) fail(ErrorKind::numeric, "valley_points: barrier check failed for the selected c");

  ValleyPoints out{constant(-1.0), constant(1.0), rep, {}, {}};
  auto [a, ta] = flow_to_stationary(out.a, eps, g, lambda, w, tol, max_steps);
  auto [b, tb] = flow_to_stationary(out.b, eps, g, lambda, w, tol, max_steps);
  out.a = std::move(a);
  out.b = std::move(b);
  out.trace_a = std::move(ta);
  out.trace_b = std::move(tb);
  return out;
}

}  // namespace pmcf
