#include "pmcf/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

#include "pmcf/profiles.hpp"
#include "pmcf/spectral.hpp"

namespace pmcf {

auto InterfaceSpec::measure(const TorusGrid& grid) const -> double {
  double cross = 1.0;
  for (int ax = 0; ax < grid.dim(); ++ax)
    if (ax != normal_axis) cross *= grid.extent(ax);
  return cross * static_cast<double>(offsets.size());
}

auto InterfaceSpec::reach(const TorusGrid& grid) const -> double {
  const double L = grid.extent(normal_axis);
  if (offsets.size() <= 1) return 0.5 * L;
  std::vector<double> o;
  for (double v : offsets) o.push_back(v - L * std::floor(v / L));
  std::sort(o.begin(), o.end());
  double gap = o.front() + L - o.back();
  for (std::size_t i = 1; i < o.size(); ++i) gap = std::min(gap, o[i] - o[i - 1]);
  return 0.5 * gap;
}

void InterfaceSpec::validate(const TorusGrid& grid) const {
  require(normal_axis >= 0 && normal_axis < grid.dim(), ErrorKind::input, "interface: normal axis out of range");
  require(!offsets.empty(), ErrorKind::input, "interface: no sheets given (empty interface)");
  for (double o : offsets) require(std::isfinite(o), ErrorKind::input, "interface: offsets must be finite");
  require(reach(grid) > 0.0, ErrorKind::input, "interface: two sheets coincide");
  if (!windows.empty()) {
    require(grid.dim() == 2, ErrorKind::unsupported, "interface: windows are defined on T^2 only");
    for (const auto& w : windows)
      require(w.radius > 0.0 && std::isfinite(w.centre), ErrorKind::input, "interface: window radius must be positive");
  }
}

auto distance_field(const InterfaceSpec& spec, const TorusGrid& grid) -> DistanceField {
  spec.validate(grid);
  const int ax = spec.normal_axis;
  const double L = grid.extent(ax);
  ScalarField d(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (double o : spec.offsets) best = std::min(best, std::abs(periodic_offset(grid.coord(i, ax), o, L)));
    d[i] = best;
  }
  return {std::move(d), "closed-form distance to flat sheets", spec.reach(grid)};
}

auto distance_from_mask(const TorusGrid& grid, const std::vector<char>& mask) -> DistanceField {
  require(mask.size() == grid.size(), ErrorKind::structural, "distance_from_mask: mask size does not match grid");
  require(std::any_of(mask.begin(), mask.end(), [](char c) { return c != 0; }), ErrorKind::input,
          "distance_from_mask: empty interface");
  const double inf = std::numeric_limits<double>::infinity();
  const int dim = grid.dim();
  std::vector<double> T(grid.size(), inf);
  std::vector<char> done(grid.size(), 0);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (mask[i]) {
      T[i] = 0.0;
      heap.push({0.0, i});
    }
  auto neighbour = [&](std::size_t i, int ax, int dir) {
    auto m = grid.multi_index(i);
    m[ax] += dir;
    return grid.index(m);
  };
  auto solve = [&](std::size_t i) {
    std::vector<std::pair<double, double>> a;  // (neighbour value, spacing)
    for (int ax = 0; ax < dim; ++ax) {
      double v = std::min(done[neighbour(i, ax, 1)] ? T[neighbour(i, ax, 1)] : inf,
                          done[neighbour(i, ax, -1)] ? T[neighbour(i, ax, -1)] : inf);
      if (v < inf) a.push_back({v, grid.spacing(ax)});
    }
    std::sort(a.begin(), a.end());
    double t = a[0].first + a[0].second;
    for (std::size_t k = 1; k < a.size(); ++k) {
      if (t <= a[k].first) break;
      // sum ((t - a_j) / h_j)^2 = 1 over j <= k
      double A = 0.0, B = 0.0, C = -1.0;
      for (std::size_t j = 0; j <= k; ++j) {
        double w = 1.0 / (a[j].second * a[j].second);
        A += w;
        B -= 2.0 * w * a[j].first;
        C += w * a[j].first * a[j].first;
      }
      double disc = B * B - 4.0 * A * C;
      if (disc < 0.0) break;
      t = (-B + std::sqrt(disc)) / (2.0 * A);
    }
    return t;
  };
  while (!heap.empty()) {
    auto [t, i] = heap.top();
    heap.pop();
    if (done[i]) continue;
    done[i] = 1;
    for (int ax = 0; ax < dim; ++ax)
      for (int dir : {-1, 1}) {
        std::size_t j = neighbour(i, ax, dir);
        if (done[j]) continue;
        double tj = solve(j);
        if (tj < T[j]) {
          T[j] = tj;
          heap.push({tj, j});
        }
      }
  }
  double reach = 0.5 * grid.extent(0);
  for (int ax = 1; ax < dim; ++ax) reach = std::min(reach, 0.5 * grid.extent(ax));
  return {ScalarField(grid, std::move(T)), "fast marching from mask", reach};
}

auto smallness_width(double eps) -> double { return 12.0 * eps * std::abs(std::log(eps)); }

auto recovery_function(const DistanceField& d, double eps, const WellSpec& w) -> ScalarField {
  require(eps > 0.0 && eps < 1.0, ErrorKind::input, "recovery_function: eps must lie in (0, 1)");
  if (!(smallness_width(eps) < d.reach)) {
    std::ostringstream msg;
    msg << "recovery_function: smallness constraint 12 eps |log eps| < omega violated (12 eps |log eps| = "
        << smallness_width(eps) << ", omega = " << d.reach << ")";
    fail(ErrorKind::input, msg.str());
  }
  ScalarField G(d.d.grid_ptr(), -1.0);
  for (std::size_t i = 0; i < G.size(); ++i)
    if (d.d[i] < d.reach) G[i] = double_profile(w, eps, 0.0, d.d[i]);
  return G;
}

namespace {

auto cutoff_argument(const Window& win, double period, double q, double& sign) -> double {
  double dq = periodic_offset(q, win.centre, period);
  sign = dq < 0.0 ? -1.0 : 1.0;
  const double rb = win.inner_radius();
  const double ell = win.radius - rb;
  return 1.0 + (std::abs(dq) - rb) / ell;
}

}  // namespace

auto window_cutoff(const Window& win, double period, double q) -> double {
  double sign;
  double x = cutoff_argument(win, period, q, sign);
  return x <= 1.0 ? 1.0 : smooth_bump(x);
}

auto window_cutoff_d1(const Window& win, double period, double q) -> double {
  double sign;
  double x = cutoff_argument(win, period, q, sign);
  return x <= 1.0 ? 0.0 : sign * smooth_bump_d1(x) / (win.radius - win.inner_radius());
}

auto window_cutoff_d2(const Window& win, double period, double q) -> double {
  double sign;
  double x = cutoff_argument(win, period, q, sign);
  const double ell = win.radius - win.inner_radius();
  return x <= 1.0 ? 0.0 : smooth_bump_d2(x) / (ell * ell);
}

namespace {

// Bilinear periodic interpolation of a field on T^2.
auto sample_field(const ScalarField& f, double x0, double x1) -> double {
  const TorusGrid& grid = f.grid();
  double p[2] = {x0, x1};
  int base[2];
  double frac[2];
  for (int ax = 0; ax < 2; ++ax) {
    double u = p[ax] / grid.spacing(ax);
    double fl = std::floor(u);
    base[ax] = static_cast<int>(fl);
    frac[ax] = u - fl;
  }
  double v = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      double wgt = (a ? frac[0] : 1 - frac[0]) * (b ? frac[1] : 1 - frac[1]);
      v += wgt * f[grid.index({base[0] + a, base[1] + b})];
    }
  return v;
}

struct LocalCoords {
  double q;  // tangential offset from the window centre
  double s;  // |normal offset| from the sheet
};

auto local_coords(const RecoverySetup& setup, std::size_t j, std::size_t node) -> LocalCoords {
  const TorusGrid& grid = *setup.grid;
  const int na = setup.spec.normal_axis, ta = setup.spec.tangential_axis();
  const Window& win = setup.spec.windows[j];
  double q = periodic_offset(grid.coord(node, ta), win.centre, grid.extent(ta));
  double s = std::abs(periodic_offset(grid.coord(node, na), setup.spec.offsets[0], grid.extent(na)));
  return {q, s};
}

void check_window(const RecoverySetup& setup, std::size_t j) {
  require(j < setup.spec.windows.size(), ErrorKind::input, "window index out of range");
}

}  // namespace

auto select_bump(const RecoverySetup& setup, std::size_t j) -> BumpParameters {
  check_window(setup, j);
  const TorusGrid& grid = *setup.grid;
  const int na = setup.spec.normal_axis, ta = setup.spec.tangential_axis();
  const Window& win = setup.spec.windows[j];
  const double P = grid.extent(ta);
  const double sigma = sigma_constant(setup.well);
  const double curv_scale = setup.lambda / sigma;

  BumpParameters bp;
  bp.curvature_cap = curv_scale * setup.g.min() / 20.0;
  bp.J0 = 2.0 * 2.0 * win.radius;

  const int nq = 4000;
  const double dq = 2.0 * win.radius / nq;
  std::vector<double> chi(nq), d1(nq), d2(nq);
  double max_d2 = 0.0;
  for (int k = 0; k < nq; ++k) {
    double q = win.centre - win.radius + (k + 0.5) * dq;
    chi[k] = window_cutoff(win, P, q);
    d1[k] = window_cutoff_d1(win, P, q);
    d2[k] = window_cutoff_d2(win, P, q);
    bp.max_slope = std::max(bp.max_slope, std::abs(d1[k]));
    max_d2 = std::max(max_d2, std::abs(d2[k]));
  }
  auto curvature = [&](double t) {
    double m = 0.0;
    for (int k = 0; k < nq; ++k) m = std::max(m, std::abs(t * d2[k]) / std::pow(1.0 + t * t * d1[k] * d1[k], 1.5));
    return m;
  };
  auto J = [&](double t) {
    double val = 0.0;
    for (int side : {-1, 1}) {
      double area = 0.0, vol = 0.0;
      for (int k = 0; k < nq; ++k) {
        area += std::sqrt(1.0 + t * t * d1[k] * d1[k]) * dq;
        double top = t * chi[k];
        if (top <= 0.0) continue;
        double q = win.centre - win.radius + (k + 0.5) * dq;
        const int ns = 4;
        for (int m = 0; m < ns; ++m) {
          double s = side * (m + 0.5) * top / ns;
          double x[2];
          x[ta] = q;
          x[na] = setup.spec.offsets[0] + s;
          vol += sample_field(setup.g, x[0], x[1]) * (top / ns) * dq;
        }
      }
      val += area - curv_scale * vol;
    }
    return val;
  };

  const double t_max = setup.distance.reach / 3.0;
  const double t_hi = max_d2 > 0.0 ? std::min(t_max, 2.0 * bp.curvature_cap / max_d2) : t_max;
  const int nt = 200;
  double prev = J(0.0);
  bp.t_samples.push_back(0.0);
  bp.J_samples.push_back(prev);
  for (int k = 1; k <= nt; ++k) {
    double t = t_hi * k / nt;
    double Jt = J(t);
    bp.t_samples.push_back(t);
    bp.J_samples.push_back(Jt);
    double tau = 0.5 * (bp.J_samples.front() - Jt);
    if (!(Jt < prev) || curvature(t) > bp.curvature_cap || tau >= 2.0 * 2.0 * win.inner_radius()) break;
    bp.t0 = t;
    bp.tau = tau;
    bp.curvature_at_t0 = curvature(t);
    prev = Jt;
  }
  if (!(bp.t0 > 0.0)) fail(ErrorKind::construction, "select_bump: no admissible bump height under the curvature cap");
  return bp;
}

auto make_recovery_setup(const InterfaceSpec& spec, const ScalarField& g, double eps, double lambda,
                         const WellSpec& w) -> RecoverySetup {
  const TorusGrid& grid = g.grid();
  require(grid.dim() == 2, ErrorKind::unsupported, "recovery construction: only T^2 is supported");
  spec.validate(grid);
  require(spec.offsets.size() == 1, ErrorKind::input, "recovery construction: exactly one sheet is required");
  require(spec.windows.size() == 2, ErrorKind::input, "recovery construction: exactly two windows are required");
  require(g.min() > 0.0, ErrorKind::input, "recovery construction: g must be positive");
  require(lambda > 0.0, ErrorKind::input, "recovery construction: lambda must be positive");

  RecoverySetup st;
  st.spec = spec;
  st.grid = g.grid_ptr();
  st.eps = eps;
  st.lambda = lambda;
  st.well = w;
  st.g = g;
  st.distance = distance_field(spec, grid);
  st.G0 = recovery_function(st.distance, eps, w);

  const int ta = spec.tangential_axis();
  const double P = grid.extent(ta);
  const auto& W = spec.windows;
  require(std::abs(W[0].inner_radius() - W[1].inner_radius()) < 1e-12, ErrorKind::input,
          "recovery construction: the inner balls B_1, B_2 must have equal measure");
  for (std::size_t j = 0; j < 2; ++j) st.bumps.push_back(select_bump(st, j));
  const double t_top = std::max(st.bumps[0].t0, st.bumps[1].t0);
  st.margin = 2.0 * eps * truncation_width(eps) + t_top + 2.0 * grid.spacing(ta);
  double gap = std::abs(periodic_offset(W[0].centre, W[1].centre, P));
  if (!(gap > W[0].radius + W[1].radius + 2.0 * st.margin) || W[0].radius + st.margin >= 0.5 * P ||
      W[1].radius + st.margin >= 0.5 * P) {
    std::ostringstream msg;
    msg << "recovery construction: windows overlap once widened by the layer width " << st.margin
        << " (centre gap " << gap << ")";
    fail(ErrorKind::input, msg.str());
  }
  st.window_nodes.resize(2);
  for (std::size_t i = 0; i < grid.size(); ++i)
    for (std::size_t j = 0; j < 2; ++j)
      if (std::abs(periodic_offset(grid.coord(i, ta), W[j].centre, P)) < W[j].radius + st.margin)
        st.window_nodes[j].push_back(i);
  st.varsigma = std::min({2.0 * W[0].inner_radius(), 0.5 * st.bumps[0].tau, 0.5 * st.bumps[1].tau});
  return st;
}

auto bump_out(const RecoverySetup& setup, std::size_t j, double t) -> ScalarField {
  check_window(setup, j);
  const auto& bp = setup.bumps[j];
  if (t < 0.0 || t > bp.t0 * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "bump_out: t = " << t << " outside [0, t0 = " << bp.t0 << "]";
    fail(ErrorKind::input, msg.str());
  }
  ScalarField out = setup.G0;
  if (t == 0.0) return out;

  const TorusGrid& grid = *setup.grid;
  const Window& win = setup.spec.windows[j];
  const double P = grid.extent(setup.spec.tangential_axis());
  const double eps = setup.eps;
  const double c = 2.0 * eps * truncation_width(eps);
  // Graph s = c + t chi(q) sampled finely around the window, flat beyond.
  const double span = win.radius + setup.margin + c;
  const double step = grid.spacing(setup.spec.tangential_axis()) / 8.0;
  const int m = static_cast<int>(std::ceil(2.0 * span / step));
  std::vector<double> gq(m + 1), gs(m + 1);
  for (int k = 0; k <= m; ++k) {
    gq[k] = -span + 2.0 * span * k / m;
    gs[k] = c + t * window_cutoff(win, P, win.centre + gq[k]);
  }
  const double reach = c + t + grid.spacing(setup.spec.tangential_axis());
  for (std::size_t node : setup.window_nodes[j]) {
    auto [q, s] = local_coords(setup, j, node);
    if (s >= 2.0 * c + t + 1e-12) {
      out[node] = -1.0;
      continue;
    }
    int k0 = std::max(0, static_cast<int>(std::floor((q - reach + span) / (2.0 * span) * m)));
    int k1 = std::min(m, static_cast<int>(std::ceil((q + reach + span) / (2.0 * span) * m)));
    double best = std::numeric_limits<double>::infinity();
    for (int k = k0; k < k1; ++k) {
      double ax = gq[k + 1] - gq[k], ay = gs[k + 1] - gs[k];
      double px = q - gq[k], py = s - gs[k];
      double u = std::clamp((px * ax + py * ay) / (ax * ax + ay * ay), 0.0, 1.0);
      double dx = px - u * ax, dy = py - u * ay;
      best = std::min(best, dx * dx + dy * dy);
    }
    double below = s < c + t * window_cutoff(win, P, win.centre + q);
    double sd = below ? -std::sqrt(best) : std::sqrt(best);
    out[node] = truncated_profile(setup.well, eps, -sd);
  }
  return out;
}

auto bump_down(const RecoverySetup& setup, std::size_t j, double t) -> ScalarField {
  check_window(setup, j);
  const double full = 4.0 * setup.eps * truncation_width(setup.eps);
  if (t > 0.0 || t < -full * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "bump_down: t = " << t << " outside [-4 eps Lambda = " << -full << ", 0]";
    fail(ErrorKind::input, msg.str());
  }
  ScalarField out = setup.G0;
  if (t == 0.0) return out;
  const Window& win = setup.spec.windows[j];
  const double P = setup.grid->extent(setup.spec.tangential_axis());
  for (std::size_t node : setup.window_nodes[j]) {
    auto [q, s] = local_coords(setup, j, node);
    out[node] = double_profile(setup.well, setup.eps, -t * window_cutoff(win, P, win.centre + q), s);
  }
  return out;
}

auto window_deformation(const RecoverySetup& setup, std::size_t j, double t) -> ScalarField {
  return t < 0.0 ? bump_down(setup, j, t) : bump_out(setup, j, t);
}

auto two_window_field(const RecoverySetup& setup, double t1, double t2) -> ScalarField {
  ScalarField out = setup.G0;
  ScalarField a = window_deformation(setup, 0, t1);
  ScalarField b = window_deformation(setup, 1, t2);
  for (std::size_t n : setup.window_nodes[0]) out[n] = a[n];
  for (std::size_t n : setup.window_nodes[1]) out[n] = b[n];
  return out;
}

namespace {

auto finish_path(LabelledPath lp) -> LabelledPath {
  const std::size_t n = lp.path.knots.size();
  lp.path.params.resize(n);
  for (std::size_t i = 0; i < n; ++i) lp.path.params[i] = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
  lp.path.params.back() = 1.0;
  auto sp = lp.path.spacings();
  lp.path.mesh = sp.empty() ? 0.0 : *std::max_element(sp.begin(), sp.end());
  return lp;
}

}  // namespace

auto avoid_peak_path(const RecoverySetup& setup, int per_stage) -> LabelledPath {
  require(per_stage >= 1, ErrorKind::input, "avoid_peak_path: at least one sample per stage");
  const double full = 4.0 * setup.eps * truncation_width(setup.eps);
  const double t1 = setup.bumps[0].t0, t2 = setup.bumps[1].t0;
  LabelledPath lp;
  auto add = [&](double t, double p1, double p2, const char* stage) {
    lp.path.knots.push_back(two_window_field(setup, p1, p2));
    lp.stage.emplace_back(stage);
    lp.parameter.push_back(t);
  };
  add(-full - t1, -full, -full, "gamma:down-1");
  for (int k = 1; k <= per_stage; ++k) {
    double p = -full + full * k / per_stage;
    add(p - t1, p, -full, "gamma:down-1");
  }
  for (int k = 1; k <= per_stage; ++k) {
    double p = t1 * k / per_stage;
    add(p - t1, p, -full, "gamma:out-1");
  }
  for (int k = 1; k <= per_stage; ++k) {
    double p = -full + full * k / per_stage;
    add(p + full, t1, p, "gamma:down-2");
  }
  for (int k = 1; k <= per_stage; ++k) {
    double p = t2 * k / per_stage;
    add(p + full, t1, p, "gamma:out-2");
  }
  return finish_path(std::move(lp));
}

auto path_to_valley(const RecoverySetup& setup, int samples, int flow_stride) -> LabelledPath {
  require(samples >= 1 && flow_stride >= 1, ErrorKind::input, "path_to_valley: sample counts must be positive");
  const TorusGrid& grid = *setup.grid;
  const double full = 4.0 * setup.eps * truncation_width(setup.eps);
  const int ta = setup.spec.tangential_axis();
  const double P = grid.extent(ta);
  std::vector<double> chi(grid.size(), 0.0);
  for (std::size_t j = 0; j < 2; ++j)
    for (std::size_t n : setup.window_nodes[j])
      chi[n] = window_cutoff(setup.spec.windows[j], P, grid.coord(n, ta));

  LabelledPath lp;
  for (int k = 0; k <= samples; ++k) {
    double r = full * k / samples;
    ScalarField f(setup.grid, -1.0);
    if (k < samples) {
      for (std::size_t i = 0; i < f.size(); ++i)
        if (setup.distance.d[i] < setup.distance.reach)
          f[i] = double_profile(setup.well, setup.eps, full * chi[i] + r, setup.distance.d[i]);
    }
    lp.path.knots.push_back(std::move(f));
    lp.stage.emplace_back("f_r");
    lp.parameter.push_back(r);
  }
  // The first knot must be gamma at its first parameter; reuse the exact field.
  lp.path.knots.front() = two_window_field(setup, -full, -full);

  FlowOptions opts;
  std::vector<std::pair<int, ScalarField>> snaps;
  opts.observer = [&](int step, const ScalarField& u) {
    if (step > 0 && step % flow_stride == 0) snaps.emplace_back(step, u);
  };
  ScalarField minus_one(setup.grid, -1.0);
  auto [a, trace] = flow_to_stationary(minus_one, setup.eps, setup.g, setup.lambda, setup.well,
                                       default_flow_tol(setup.eps, setup.g, setup.lambda), 1000000, opts);
  for (auto& [step, u] : snaps) {
    lp.path.knots.push_back(std::move(u));
    lp.stage.emplace_back("flow:-1->a");
    lp.parameter.push_back(full + trace.records[static_cast<std::size_t>(step)].time);
  }
  if (snaps.empty() || snaps.back().first != trace.records.back().step) {
    lp.path.knots.push_back(a);
    lp.stage.emplace_back("flow:-1->a");
    lp.parameter.push_back(full + trace.records.back().time);
  }
  return finish_path(std::move(lp));
}

auto pair_with_battery(const ScalarField& f, double radius, const std::vector<char>* exclude) -> PairingReport {
  const TorusGrid& grid = f.grid();
  const double h = grid.min_spacing();
  ScalarField paired = radius > 0.0 ? mollify(f, radius / h) : f;
  PairingReport rep;
  rep.radius = radius;
  rep.min_value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (exclude && (*exclude)[i]) continue;
    if (paired[i] < rep.min_value) {
      rep.min_value = paired[i];
      rep.argmin = i;
    }
  }
  return rep;
}

auto mean_convex_seed(const RecoverySetup& setup, double tol) -> SeedReport {
  const TorusGrid& grid = *setup.grid;
  SeedReport rep;
  rep.h = two_window_field(setup, setup.bumps[0].t0, setup.bumps[1].t0);
  ScalarField drive = -1.0 * first_variation(rep.h, setup.eps, setup.g, setup.lambda, setup.well);
  rep.convexity = pair_with_battery(drive, 3.0 * grid.min_spacing());
  rep.threshold = 0.5 * setup.lambda * setup.g.min();

  rep.witness.assign(grid.size(), 0);
  for (std::size_t j = 0; j < 2; ++j) {
    const Window& win = setup.spec.windows[j];
    for (std::size_t n : setup.window_nodes[j]) {
      auto [q, s] = local_coords(setup, j, n);
      (void)s;
      if (std::abs(q) < win.inner_radius() && rep.h[n] == 1.0) {
        rep.witness[n] = 1;
        ++rep.witness_count;
      }
    }
  }
  if (rep.convexity.min_value < rep.threshold - tol) {
    std::ostringstream msg;
    msg << "mean_convex_seed: paired -F'(h) = " << rep.convexity.min_value << " below min(lambda g)/2 = "
        << rep.threshold << " at node (";
    for (int ax = 0; ax < grid.dim(); ++ax) msg << (ax ? ", " : "") << grid.coord(rep.convexity.argmin, ax);
    msg << ")";
    fail(ErrorKind::construction, msg.str());
  }
  if (rep.witness_count == 0)
    fail(ErrorKind::construction, "mean_convex_seed: no node over B_1, B_2 has h = 1; put the sheet on a grid line");
  return rep;
}

auto mollify(const ScalarField& u, double delta) -> ScalarField {
  require(delta >= 0.0, ErrorKind::input, "mollify: radius must be nonnegative");
  if (delta == 0.0) return u;
  const TorusGrid& grid = u.grid();
  const double r = delta * grid.min_spacing();
  for (int ax = 0; ax < grid.dim(); ++ax)
    require(r <= 0.5 * grid.extent(ax), ErrorKind::input, "mollify: radius exceeds half the torus");
  std::vector<double> kernel(grid.size(), 0.0);
  double mass = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double r2 = 0.0;
    for (int ax = 0; ax < grid.dim(); ++ax) {
      double x = periodic_offset(grid.coord(i, ax), 0.0, grid.extent(ax));
      r2 += x * x;
    }
    double z = r2 / (r * r);
    if (z < 1.0) {
      kernel[i] = std::exp(-1.0 / (1.0 - z));
      mass += kernel[i];
    }
  }
  for (double& k : kernel) k /= mass;
  PeriodicSpectral spectral(grid);
  spectral.set_kernel(kernel);
  ScalarField out(u.grid_ptr());
  spectral.convolve(u.data(), out.data());
  return out;
}

auto stable_from_seed(const SeedReport& seed, const RecoverySetup& setup, const std::optional<ScalarField>& b,
                      double tol, int snapshot_stride, int max_steps) -> StableReport {
  const TorusGrid& grid = *setup.grid;
  if (tol <= 0.0) tol = default_flow_tol(setup.eps, setup.g, setup.lambda);
  StableReport rep;
  bool found = false;
  // 2h is the smallest radius that reaches a neighbour; below it the grid
  // mollifier is the identity, which is the fallback.
  for (double delta : {2.0, 0.0}) {
    ScalarField hd = mollify(seed.h, delta);
    ScalarField drive = -1.0 * first_variation(hd, setup.eps, setup.g, setup.lambda, setup.well);
    auto pr = pair_with_battery(drive, 3.0 * grid.min_spacing());
    if (pr.min_value >= seed.threshold) {
      rep.seed = std::move(hd);
      rep.delta = delta;
      found = true;
      break;
    }
  }
  if (!found) fail(ErrorKind::construction, "stable_from_seed: the convexity margin fails for the mollified and the unmollified seed");

  FlowOptions opts;
  opts.require_monotone = true;
  opts.monotone_slack = 1e-12;
  opts.observer = [&](int step, const ScalarField& u) {
    if (step % snapshot_stride == 0) rep.snapshots.push_back(u);
  };
  try {
    auto [v, trace] = flow_to_stationary(rep.seed, setup.eps, setup.g, setup.lambda, setup.well, tol, max_steps, opts);
    rep.v = std::move(v);
    rep.trace = std::move(trace);
  } catch (const FlowError& e) {
    rep.monotone = false;
    throw;
  }
  if (rep.snapshots.empty() || l2_norm(rep.snapshots.back() - rep.v) > 0.0) rep.snapshots.push_back(rep.v);
  rep.min_increase = (rep.v - rep.seed).min();
  rep.witness_contained = true;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (seed.witness[i] && !(rep.v[i] > 0.75)) rep.witness_contained = false;
  if (b) {
    require_same_grid(*b, rep.v, "stable_from_seed");
    rep.below_b = (rep.v - *b).max() <= 1e-10;
    rep.equals_b = sup_norm(rep.v - *b) <= 1e-8;
  }
  try {
    rep.spectrum = morse_index(rep.v, setup.eps, setup.well, 2);
  } catch (const SpectrumError& e) {
    rep.spectrum = e.partial();
  }
  return rep;
}

auto energy_ledger(const RecoverySetup& setup, const std::vector<ScalarField>& knots,
                   const std::vector<std::string>& stages) -> std::vector<LedgerRow> {
  require(stages.size() == knots.size(), ErrorKind::input, "energy_ledger: one stage label per knot");
  const double sigma = sigma_constant(setup.well);
  const double bound = 2.0 * setup.spec.measure(*setup.grid) + setup.lambda * integrate(setup.g) / (2.0 * sigma) -
                       0.5 * setup.varsigma;
  std::vector<LedgerRow> rows;
  for (std::size_t i = 0; i < knots.size(); ++i) {
    auto rep = pmc_energy(knots[i], setup.eps, setup.g, setup.lambda, setup.well);
    rows.push_back({i, stages[i], rep.total_E, rep.total_F, bound, bound - rep.total_F / (2.0 * sigma)});
  }
  return rows;
}

}  // namespace pmcf
