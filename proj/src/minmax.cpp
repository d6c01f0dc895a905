#include "pmcf/minmax.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pmcf/flows.hpp"
#include "pmcf/profiles.hpp"
#include "pmcf/spectral.hpp"

namespace pmcf {

auto PhasePath::spacings() const -> std::vector<double> {
  std::vector<double> out;
  for (std::size_t i = 1; i < knots.size(); ++i) out.push_back(l2_norm(knots[i] - knots[i - 1]));
  return out;
}

void PhasePath::validate() const {
  require(knots.size() >= 3, ErrorKind::input, "path: at least 3 knots are required");
  require(params.size() == knots.size(), ErrorKind::input, "path: one parameter per knot is required");
  for (std::size_t i = 0; i < knots.size(); ++i) {
    require_same_grid(knots[i], knots[0], "path");
    require(params[i] >= -1.0 && params[i] <= 1.0, ErrorKind::input, "path: parameters must lie in [-1, 1]");
    if (i > 0) require(params[i] > params[i - 1], ErrorKind::input, "path: parameters must increase strictly");
  }
  if (mesh > 0.0) {
    for (double s : spacings()) {
      if (s > mesh) {
        std::ostringstream msg;
        msg << "path: consecutive knots are " << s << " apart, above the mesh bound " << mesh;
        fail(ErrorKind::input, msg.str());
      }
    }
  }
}

auto wall_coordinate(const ScalarField& u, const ScalarField& g) -> double {
  require_same_grid(u, g, "wall_coordinate");
  return inner(g, u) + integrate(g);
}

namespace {

auto cumulative_arclength(const std::vector<ScalarField>& knots) -> std::vector<double> {
  std::vector<double> arc(knots.size(), 0.0);
  for (std::size_t i = 1; i < knots.size(); ++i) arc[i] = arc[i - 1] + l2_norm(knots[i] - knots[i - 1]);
  return arc;
}

auto uniform_params(std::size_t n) -> std::vector<double> {
  std::vector<double> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
  p.back() = 1.0;
  return p;
}

// Position of the arclength target inside the cumulative table: segment and fraction.
auto locate(const std::vector<double>& arc, double target) -> std::pair<std::size_t, double> {
  auto it = std::upper_bound(arc.begin(), arc.end(), target);
  std::size_t j = std::clamp<std::size_t>(static_cast<std::size_t>(it - arc.begin()), 1, arc.size() - 1);
  double len = arc[j] - arc[j - 1];
  double frac = len > 0.0 ? std::clamp((target - arc[j - 1]) / len, 0.0, 1.0) : 0.0;
  return {j - 1, frac};
}

}  // namespace

auto equidistribute(const std::vector<ScalarField>& knots, std::size_t count) -> std::vector<ScalarField> {
  require(knots.size() >= 2 && count >= 2, ErrorKind::input, "equidistribute: need at least two knots");
  auto arc = cumulative_arclength(knots);
  std::vector<ScalarField> out;
  out.reserve(count);
  out.push_back(knots.front());
  for (std::size_t k = 1; k + 1 < count; ++k) {
    double target = arc.back() * static_cast<double>(k) / static_cast<double>(count - 1);
    auto [j, f] = locate(arc, target);
    out.push_back(axpy(f, knots[j + 1] - knots[j], knots[j]));
  }
  out.push_back(knots.back());
  return out;
}

auto initial_path(const ScalarField& a, const ScalarField& b, double eps, const ScalarField& g, int n_knots,
                  const WellSpec& w) -> PhasePath {
  require(n_knots >= 8, ErrorKind::input, "initial_path: n_knots must be at least 8");
  require_same_grid(a, b, "initial_path");
  require_same_grid(a, g, "initial_path");
  const TorusGrid& grid = a.grid();

  std::size_t centre = static_cast<std::size_t>(std::max_element(g.values().begin(), g.values().end()) -
                                                g.values().begin());
  std::vector<double> dist(grid.size());
  double dmax = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double r2 = 0.0;
    for (int ax = 0; ax < grid.dim(); ++ax) {
      double d = periodic_offset(grid.coord(i, ax), grid.coord(centre, ax), grid.extent(ax));
      r2 += d * d;
    }
    dist[i] = std::sqrt(r2);
    dmax = std::max(dmax, dist[i]);
  }
  const double reach = 2.0 * eps * truncation_width(eps);
  const double s_lo = -reach, s_hi = dmax + reach;

  auto knot_at = [&](double s) {
    ScalarField u(a.grid_ptr());
    for (std::size_t i = 0; i < u.size(); ++i) {
      double phase = 0.5 * (truncated_profile(w, eps, s - dist[i]) + 1.0);
      u[i] = a[i] + (b[i] - a[i]) * phase;
    }
    return u;
  };

  const int dense = std::max(16 * n_knots, 512);
  std::vector<double> s_dense(dense + 1);
  std::vector<double> arc(dense + 1, 0.0);
  ScalarField prev = a;
  for (int k = 0; k <= dense; ++k) {
    s_dense[k] = s_lo + (s_hi - s_lo) * k / dense;
    ScalarField cur = k == 0 ? a : (k == dense ? b : knot_at(s_dense[k]));
    if (k > 0) arc[k] = arc[k - 1] + l2_norm(cur - prev);
    prev = std::move(cur);
  }

  PhasePath path;
  path.knots.push_back(a);
  for (int k = 1; k + 1 < n_knots; ++k) {
    auto [j, f] = locate(arc, arc.back() * k / (n_knots - 1));
    path.knots.push_back(knot_at(s_dense[j] + f * (s_dense[j + 1] - s_dense[j])));
  }
  path.knots.push_back(b);
  path.params = uniform_params(path.knots.size());
  auto sp = path.spacings();
  path.mesh = 2.0 * *std::max_element(sp.begin(), sp.end());
  return path;
}

namespace {

using Vec = std::vector<double>;

auto dot(const Vec& x, const Vec& y) -> double {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

// Preconditioned MINRES for the symmetric system A x = b; returns iterations.
template <class Apply, class Precond>
auto minres(const Apply& A, const Precond& Minv, const Vec& b, Vec& x, double rtol, int max_iter) -> int {
  const std::size_t n = b.size();
  x.assign(n, 0.0);
  Vec r1 = b, r2 = b, y(n), v(n), w(n, 0.0), w1(n), w2(n, 0.0);
  Minv(r1, y);
  const double beta1 = std::sqrt(std::max(dot(r1, y), 0.0));
  if (beta1 == 0.0) return 0;
  double oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0, phibar = beta1, cs = -1.0, sn = 0.0;
  int itn = 0;
  while (itn < max_iter) {
    ++itn;
    const double s = 1.0 / beta;
    for (std::size_t i = 0; i < n; ++i) v[i] = s * y[i];
    A(v, y);
    if (itn >= 2)
      for (std::size_t i = 0; i < n; ++i) y[i] -= (beta / oldb) * r1[i];
    const double alfa = dot(v, y);
    for (std::size_t i = 0; i < n; ++i) y[i] -= (alfa / beta) * r2[i];
    r1.swap(r2);
    r2 = y;
    Minv(r2, y);
    oldb = beta;
    beta = std::sqrt(std::max(dot(r2, y), 0.0));
    const double oldeps = epsln;
    const double delta = cs * dbar + sn * alfa;
    const double gbar = sn * dbar - cs * alfa;
    epsln = sn * beta;
    dbar = -cs * beta;
    const double gamma = std::max(std::hypot(gbar, beta), 1e-300);
    cs = gbar / gamma;
    sn = beta / gamma;
    const double phi = cs * phibar;
    phibar *= sn;
    w1.swap(w2);
    w2.swap(w);
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) / gamma;
      x[i] += phi * w[i];
    }
    if (phibar <= rtol * beta1 || beta == 0.0) break;
  }
  return itn;
}

}  // namespace

auto refine_critical_point(const ScalarField& u0, double eps, const ScalarField& g, double lambda, const WellSpec& w,
                           double tol, int max_newton) -> SaddleRefinement {
  require(tol > 0.0, ErrorKind::input, "refine_critical_point: tol must be positive");
  PeriodicSpectral spectral(u0.grid());
  const std::size_t n = u0.size();
  SaddleRefinement out{u0, 0.0, 0, 0, false};
  ScalarField G = first_variation(out.field, eps, g, lambda, w);
  double merit = l2_norm(G);
  out.residual = sup_norm(G);
  Vec d2(n), rhs(n), step;
  for (int it = 0; it < max_newton && out.residual > tol; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = eval_well(w, out.field[i]).d2W / eps;
      rhs[i] = -G[i];
    }
    auto apply = [&](const Vec& x, Vec& y) {
      laplacian_raw(out.field.grid(), x.data(), y.data());
      for (std::size_t i = 0; i < n; ++i) y[i] = -eps * y[i] + d2[i] * x[i];
    };
    auto precond = [&](const Vec& x, Vec& y) {
      y.resize(n);
      spectral.solve_helmholtz(2.0 / eps, eps, x.data(), y.data());
    };
    out.krylov_steps += minres(apply, precond, rhs, step, 1e-6, 4000);

    double alpha = 1.0;
    bool accepted = false;
    for (int k = 0; k < 12; ++k, alpha *= 0.5) {
      ScalarField trial = out.field;
      for (std::size_t i = 0; i < n; ++i) trial[i] += alpha * step[i];
      ScalarField Gt = first_variation(trial, eps, g, lambda, w);
      double m = l2_norm(Gt);
      if (m < merit) {
        out.field = std::move(trial);
        G = std::move(Gt);
        merit = m;
        accepted = true;
        break;
      }
    }
    ++out.newton_steps;
    out.residual = sup_norm(G);
    if (!accepted) break;
  }
  out.converged = out.residual <= tol;
  return out;
}

auto mountain_pass(const PhasePath& path0, double eps, const ScalarField& g, double lambda, const WellSpec& w,
                   const MinmaxOptions& opts) -> MinmaxResult {
  path0.validate();
  require(eps > 0.0, ErrorKind::input, "mountain_pass: eps must be positive");
  const double tol = opts.tol > 0.0 ? opts.tol : default_flow_tol(eps, g, lambda);

  std::vector<ScalarField> knots = path0.knots;
  const std::size_t n = knots.size();
  double lo = -1.25, hi = 1.25;
  for (const auto& k : knots) {
    lo = std::min(lo, k.min() - 0.05);
    hi = std::max(hi, k.max() + 0.05);
  }
  FlowStepper stepper(g, eps, lambda, w, opts.dt);
  stepper.fit_stabilisation(lo, hi);

  std::vector<SweepRecord> sweeps;
  std::vector<double> F(n);
  auto energies = [&] {
    for (std::size_t i = 0; i < n; ++i) F[i] = pmc_energy(knots[i], eps, g, lambda, w).total_F;
  };
  auto peak = [&] { return static_cast<std::size_t>(std::max_element(F.begin(), F.end()) - F.begin()); };

  std::optional<SaddleRefinement> polished;
  std::size_t c = 0;
  for (int sweep = 1; sweep <= opts.max_sweeps && !polished; ++sweep) {
    energies();
    c = peak();
    const double max_before = F[c];
    if (c == 0 || c == n - 1) {
      std::ostringstream msg;
      msg << "mountain_pass: no wall crossed; the highest knot is the " << (c == 0 ? "first" : "last")
          << " endpoint at sweep " << sweep;
      throw MinmaxError(ErrorKind::search, msg.str(), knots[c]);
    }
    const bool climbing = opts.climb && sweep > opts.climb_after;
    for (std::size_t i = 1; i + 1 < n; ++i) {
      ScalarField next = stepper.step(knots[i]);
      if (climbing && i == c) {
        ScalarField tau = knots[c + 1] - knots[c - 1];
        double len = l2_norm(tau);
        if (len > 0.0) {
          tau = (1.0 / len) * tau;
          ScalarField d = next - knots[c];
          next = knots[c] + axpy(-2.0 * inner(d, tau), tau, d);
        }
      }
      knots[i] = std::move(next);
    }
    ScalarField G = first_variation(knots[c], eps, g, lambda, w);
    double res = sup_norm(G);
    energies();
    sweeps.push_back({sweep, c, F[c], res, max_before, *std::max_element(F.begin(), F.end())});

    if (climbing) {
      if (opts.polish && res <= opts.polish_ratio * tol) {
        auto ref = refine_critical_point(knots[c], eps, g, lambda, w, tol);
        if (ref.converged) polished = std::move(ref);
      } else if (!opts.polish && res <= tol) {
        polished = SaddleRefinement{knots[c], res, 0, 0, true};
      }
    }
    if (polished) break;

    if (climbing) {
      std::vector<ScalarField> left(knots.begin(), knots.begin() + static_cast<long>(c) + 1);
      std::vector<ScalarField> right(knots.begin() + static_cast<long>(c), knots.end());
      left = equidistribute(left, c + 1);
      right = equidistribute(right, n - c);
      knots.assign(left.begin(), left.end());
      knots.insert(knots.end(), right.begin() + 1, right.end());
    } else {
      knots = equidistribute(knots, n);
    }
  }
  if (!polished) {
    std::ostringstream msg;
    msg << "mountain_pass: climbing knot did not reach residual " << tol << " within " << opts.max_sweeps
        << " sweeps (last residual " << (sweeps.empty() ? 0.0 : sweeps.back().peak_residual) << ")";
    throw MinmaxError(ErrorKind::numeric, msg.str(), knots[c]);
  }

  knots[c] = polished->field;
  MinmaxResult out;
  out.saddle = polished->field;
  out.eps = eps;
  out.lambda = lambda;
  out.sweeps = std::move(sweeps);
  out.residual = polished->residual;
  out.newton_steps = polished->newton_steps;
  out.beta = pmc_energy(out.saddle, eps, g, lambda, w).total_F;
  out.peak_index = c;
  out.path.knots = std::move(knots);
  out.path.params = uniform_params(n);
  out.path.mesh = path0.mesh;
  out.peak_param = out.path.params[c];
  for (const auto& k : out.path.knots) {
    out.knot_F.push_back(pmc_energy(k, eps, g, lambda, w).total_F);
    out.knot_wall.push_back(wall_coordinate(k, g));
  }
  try {
    out.spectrum = morse_index(out.saddle, eps, w, opts.spectrum_k, opts.morse);
  } catch (const SpectrumError& e) {
    out.spectrum = e.partial();
  }
  return out;
}

auto verify_wall(const MinmaxResult& result, const ScalarField& g, double delta_probe, double band) -> WallReport {
  WallReport rep;
  rep.delta_probe = delta_probe;
  rep.threshold = result.lambda * integrate(g);
  const auto& wall = result.knot_wall;
  if (band <= 0.0) {
    double gap = 0.0;
    for (std::size_t i = 1; i < wall.size(); ++i) gap = std::max(gap, std::abs(wall[i] - wall[i - 1]));
    band = 0.5 * gap;
  }
  rep.band = band;
  rep.min_F = 1e300;
  for (std::size_t i = 0; i < wall.size(); ++i) {
    if (std::abs(wall[i] - delta_probe) <= band) {
      rep.knots_in_band.push_back(i);
      rep.min_F = std::min(rep.min_F, result.knot_F[i]);
    }
  }
  if (rep.knots_in_band.empty()) {
    std::ostringstream msg;
    msg << "verify_wall: no knot within " << band << " of wall coordinate " << delta_probe;
    rep.warning = msg.str();
    rep.min_F = 0.0;
    return rep;
  }
  rep.exceeds = rep.min_F > rep.threshold;
  return rep;
}

}  // namespace pmcf
