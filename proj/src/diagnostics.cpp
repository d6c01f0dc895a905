#include "pmcf/diagnostics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <unordered_map>

#include "pmcf/functionals.hpp"
#include "pmcf/profiles.hpp"

namespace pmcf {

namespace {

auto norm(const Point2& p) -> double { return std::hypot(p[0], p[1]); }
auto sub(const Point2& a, const Point2& b) -> Point2 { return {a[0] - b[0], a[1] - b[1]}; }
auto add(const Point2& a, const Point2& b) -> Point2 { return {a[0] + b[0], a[1] + b[1]}; }

// Vertex k of a polyline, continuing periodically past either end of a closed curve.
auto vertex(const Polyline& pl, long k) -> Point2 {
  const long n = static_cast<long>(pl.points.size());
  long laps = k >= 0 ? k / n : -((-k + n - 1) / n);
  Point2 p = pl.points[static_cast<std::size_t>(k - laps * n)];
  return {p[0] + laps * pl.wrap[0], p[1] + laps * pl.wrap[1]};
}

// Bilinear periodic interpolation on a 2-D grid.
auto sample(const ScalarField& u, double x, double y) -> double {
  const auto& g = u.grid();
  const int nx = g.n(0), ny = g.n(1);
  double fx = x / g.spacing(0), fy = y / g.spacing(1);
  double ix = std::floor(fx), iy = std::floor(fy);
  double tx = fx - ix, ty = fy - iy;
  auto wrap = [](long i, int n) { return static_cast<std::size_t>(((i % n) + n) % n); };
  std::size_t i0 = wrap(static_cast<long>(ix), nx), i1 = wrap(static_cast<long>(ix) + 1, nx);
  std::size_t j0 = wrap(static_cast<long>(iy), ny), j1 = wrap(static_cast<long>(iy) + 1, ny);
  auto at = [&](std::size_t i, std::size_t j) { return u[i + j * static_cast<std::size_t>(nx)]; };
  return (1 - tx) * (1 - ty) * at(i0, j0) + tx * (1 - ty) * at(i1, j0) + (1 - tx) * ty * at(i0, j1) +
         tx * ty * at(i1, j1);
}

auto point_segment(const Point2& p, const Point2& a, const Point2& b) -> double {
  Point2 ab = sub(b, a), ap = sub(p, a);
  double len2 = ab[0] * ab[0] + ab[1] * ab[1];
  double t = len2 > 0.0 ? std::clamp((ap[0] * ab[0] + ap[1] * ab[1]) / len2, 0.0, 1.0) : 0.0;
  return norm({ap[0] - t * ab[0], ap[1] - t * ab[1]});
}

// Periodic distance from p to a polyline; prune skips segments farther than cutoff.
auto distance_to_polyline(const Point2& p, const Polyline& pl, const Point2& period,
                          double cutoff = std::numeric_limits<double>::infinity()) -> double {
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = pl.points.size();
  if (n == 0) return best;
  if (n == 1) {
    Point2 a = pl.points[0];
    return norm({periodic_offset(p[0], a[0], period[0]), periodic_offset(p[1], a[1], period[1])});
  }
  const std::size_t segs = pl.closed ? n : n - 1;
  for (std::size_t k = 0; k < segs; ++k) {
    Point2 a = pl.points[k];
    Point2 b = k + 1 < n ? pl.points[k + 1] : add(pl.points[0], pl.wrap);
    Point2 q{a[0] + periodic_offset(p[0], a[0], period[0]), a[1] + periodic_offset(p[1], a[1], period[1])};
    double reach = norm(sub(b, a));
    if (std::abs(q[0] - a[0]) > cutoff + reach || std::abs(q[1] - a[1]) > cutoff + reach) continue;
    best = std::min(best, point_segment(q, a, b));
  }
  return best;
}

auto quantile(std::vector<double> v, double q) -> double {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  double pos = q * static_cast<double>(v.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(pos));
  std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

auto extract_1d(const ScalarField& u, double level) -> InterfaceGeometry {
  InterfaceGeometry geom;
  geom.dim = 1;
  const auto& g = u.grid();
  const std::size_t n = u.size();
  const double h = g.spacing(0);
  for (std::size_t i = 0; i < n; ++i) {
    double a = u[i], b = u[(i + 1) % n];
    if ((a > level) == (b > level)) continue;
    double t = (level - a) / (b - a);
    geom.crossings.push_back((static_cast<double>(i) + t) * h);
    geom.crossing_sign.push_back(b > a ? 1 : -1);
  }
  return geom;
}

auto extract_2d(const ScalarField& u, double level) -> InterfaceGeometry {
  const auto& g = u.grid();
  const int nx = g.n(0), ny = g.n(1);
  const double hx = g.spacing(0), hy = g.spacing(1);
  const Point2 period{g.extent(0), g.extent(1)};
  auto idx = [&](int i, int j) {
    return static_cast<std::size_t>((i + nx) % nx) + static_cast<std::size_t>((j + ny) % ny) * nx;
  };
  // Edge ids: 2*node for the edge towards +x, 2*node+1 for the edge towards +y.
  std::unordered_map<std::size_t, Point2> position;
  std::unordered_map<std::size_t, std::vector<std::size_t>> links;
  auto crossing = [&](int i, int j, int axis) -> std::optional<std::size_t> {
    double a = u[idx(i, j)];
    double b = axis == 0 ? u[idx(i + 1, j)] : u[idx(i, j + 1)];
    if ((a > level) == (b > level)) return std::nullopt;
    std::size_t id = 2 * idx(i, j) + static_cast<std::size_t>(axis);
    if (!position.count(id)) {
      double t = (level - a) / (b - a);
      double x = ((i + nx) % nx) * hx, y = ((j + ny) % ny) * hy;
      position[id] = axis == 0 ? Point2{x + t * hx, y} : Point2{x, y + t * hy};
    }
    return id;
  };
  auto connect = [&](std::size_t e1, std::size_t e2) {
    links[e1].push_back(e2);
    links[e2].push_back(e1);
  };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      // Cell edges: bottom, right, top, left.
      std::optional<std::size_t> e[4] = {crossing(i, j, 0), crossing(i + 1, j, 1), crossing(i, j + 1, 0),
                                         crossing(i, j, 1)};
      int count = 0;
      for (auto& x : e) count += x ? 1 : 0;
      if (count == 2) {
        std::size_t ends[2];
        int k = 0;
        for (auto& x : e)
          if (x) ends[k++] = *x;
        connect(ends[0], ends[1]);
      } else if (count == 4) {
        double v0 = u[idx(i, j)], v1 = u[idx(i + 1, j)], v2 = u[idx(i + 1, j + 1)], v3 = u[idx(i, j + 1)];
        bool centre_plus = 0.25 * (v0 + v1 + v2 + v3) > level;
        // Corners whose phase differs from the centre are cut off on their own.
        if ((v0 > level) != centre_plus) {
          connect(*e[3], *e[0]);
          connect(*e[1], *e[2]);
        } else {
          connect(*e[0], *e[1]);
          connect(*e[2], *e[3]);
        }
      }
    }
  }

  InterfaceGeometry geom;
  geom.dim = 2;
  std::unordered_map<std::size_t, bool> used;
  auto unwrap = [&](const Point2& prev, const Point2& p) -> Point2 {
    return {prev[0] + periodic_offset(p[0], prev[0], period[0]), prev[1] + periodic_offset(p[1], prev[1], period[1])};
  };
  auto trace = [&](std::size_t start) {
    Polyline pl;
    std::size_t prev = start, cur = start;
    pl.points.push_back(position[start]);
    used[start] = true;
    while (true) {
      std::size_t next = cur;
      bool found = false;
      for (std::size_t cand : links[cur]) {
        if (cand == prev && links[cur].size() > 1 && cur != start) continue;
        if (!used[cand]) {
          next = cand;
          found = true;
          break;
        }
      }
      if (!found) {
        // Closed when the last edge links back to the start.
        bool back = false;
        for (std::size_t cand : links[cur]) back = back || (cand == start && pl.points.size() > 2);
        if (back) {
          pl.closed = true;
          Point2 closing = unwrap(pl.points.back(), position[start]);
          Point2 shift = sub(closing, pl.points.front());
          pl.wrap = {std::round(shift[0] / period[0]) * period[0], std::round(shift[1] / period[1]) * period[1]};
        }
        break;
      }
      used[next] = true;
      pl.points.push_back(unwrap(pl.points.back(), position[next]));
      prev = cur;
      cur = next;
    }
    return pl;
  };
  // Sorted ids keep the output deterministic.
  std::vector<std::size_t> ids;
  ids.reserve(links.size());
  for (auto& [id, l] : links) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  for (std::size_t id : ids)
    if (!used[id] && links[id].size() == 1) geom.polylines.push_back(trace(id));
  for (std::size_t id : ids)
    if (!used[id]) geom.polylines.push_back(trace(id));

  const double probe = 0.3 * std::min(hx, hy);
  for (auto& pl : geom.polylines) {
    const long n = static_cast<long>(pl.points.size());
    pl.normals.resize(pl.points.size());
    for (long k = 0; k < n; ++k) {
      Point2 a = (pl.closed || k > 0) ? vertex(pl, k - 1) : pl.points[0];
      Point2 b = (pl.closed || k + 1 < n) ? vertex(pl, k + 1) : pl.points[static_cast<std::size_t>(n - 1)];
      Point2 t = sub(b, a);
      double len = norm(t);
      Point2 nl = len > 0.0 ? Point2{-t[1] / len, t[0] / len} : Point2{0.0, 1.0};
      Point2 p = pl.points[static_cast<std::size_t>(k)];
      double plus = sample(u, p[0] + probe * nl[0], p[1] + probe * nl[1]);
      double minus = sample(u, p[0] - probe * nl[0], p[1] - probe * nl[1]);
      if (plus < minus) nl = {-nl[0], -nl[1]};
      pl.normals[static_cast<std::size_t>(k)] = nl;
    }
  }
  return geom;
}

}  // namespace

auto Polyline::length() const -> double {
  double total = 0.0;
  for (std::size_t k = 1; k < points.size(); ++k) total += norm(sub(points[k], points[k - 1]));
  if (closed && !points.empty()) total += norm(sub(add(points.front(), wrap), points.back()));
  return total;
}

auto InterfaceGeometry::total_length() const -> double {
  if (dim == 1) return static_cast<double>(crossings.size());
  double total = 0.0;
  for (const auto& p : polylines) total += p.length();
  return total;
}

auto energy_measure(const ScalarField& u, double eps, const WellSpec& w) -> MeasureReport {
  require(eps > 0.0, ErrorKind::input, "energy_measure: eps must be positive");
  require(u.all_finite(), ErrorKind::input, "energy_measure: field contains NaN or Inf");
  const double two_sigma = 2.0 * sigma_constant(w);
  MeasureReport rep;
  rep.eps = eps;
  rep.density = gradient_sq(u);
  for (std::size_t i = 0; i < u.size(); ++i)
    rep.density[i] = (0.5 * eps * rep.density[i] + eval_well(w, u[i]).W / eps) / two_sigma;
  rep.mass = integrate(rep.density);
  return rep;
}

auto ball_mass(MeasureReport& report, const std::vector<double>& centre, double radius) -> BallMass {
  const auto& g = report.density.grid();
  require(static_cast<int>(centre.size()) == g.dim(), ErrorKind::structural, "ball_mass: centre dimension");
  require(radius > 0.0, ErrorKind::input, "ball_mass: radius must be positive");
  BallMass b{centre, radius, 0.0, 0.0};
  for (std::size_t i = 0; i < g.size(); ++i) {
    double r2 = 0.0;
    for (int a = 0; a < g.dim(); ++a) {
      double d = periodic_offset(g.coord(i, a), centre[static_cast<std::size_t>(a)], g.extent(a));
      r2 += d * d;
    }
    if (r2 < radius * radius) b.mass += report.density[i];
  }
  b.mass *= g.cell_volume();
  const double unit = g.dim() == 1 ? 1.0 : g.dim() == 2 ? 2.0 * radius : std::numbers::pi * radius * radius;
  b.ratio = b.mass / unit;
  report.balls.push_back(b);
  return b;
}

auto extract_interface(const ScalarField& u, double level) -> InterfaceGeometry {
  require(u.all_finite(), ErrorKind::input, "extract_interface: field contains NaN or Inf");
  switch (u.grid().dim()) {
    case 1:
      return extract_1d(u, level);
    case 2:
      return extract_2d(u, level);
    default:
      fail(ErrorKind::unsupported, "extract_interface: only d = 1 and d = 2 are supported");
  }
}

auto curvature_vs_g(const InterfaceGeometry& geom, const ScalarField& g, double lambda, double sigma, int window)
    -> CurvatureReport {
  require(geom.dim == 2, ErrorKind::unsupported, "curvature_vs_g: curvature needs a d = 2 interface");
  require(lambda > 0.0 && sigma > 0.0, ErrorKind::input, "curvature_vs_g: lambda and sigma must be positive");
  const auto& grid = g.grid();
  CurvatureReport rep;
  if (window <= 0) {
    double R = sigma / (lambda * std::max(integrate(g) / grid.volume(), 1e-300));
    window = std::max(5, static_cast<int>(std::lround(R / (4.0 * grid.min_spacing()))));
  }
  if (window % 2 == 0) ++window;
  rep.window = window;
  const long half = window / 2;
  std::vector<double> kappas;
  for (const auto& pl : geom.polylines) {
    const long n = static_cast<long>(pl.points.size());
    std::vector<double> kv(pl.points.size(), std::numeric_limits<double>::quiet_NaN());
    for (long k = 0; k < n; ++k) {
      bool enough = pl.closed ? n >= window : (k - half >= 0 && k + half < n);
      if (!enough) {
        ++rep.skipped;
        continue;
      }
      // Quadratic graph over the local tangent line; exact zero on straight pieces.
      Point2 p = pl.points[static_cast<std::size_t>(k)];
      const Point2& nl = pl.normals[static_cast<std::size_t>(k)];
      const Point2 tl{-nl[1], nl[0]};
      Eigen::MatrixXd A(window, 3);
      Eigen::VectorXd rhs(window);
      for (long m = -half; m <= half; ++m) {
        Point2 q = sub(vertex(pl, k + m), p);
        double x = q[0] * tl[0] + q[1] * tl[1];
        A.row(m + half) << 1.0, x, x * x;
        rhs(m + half) = q[0] * nl[0] + q[1] * nl[1];
      }
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
      qr.setThreshold(1e-12);
      if (qr.rank() < 3) {
        ++rep.skipped;
        continue;
      }
      Eigen::Vector3d s = qr.solve(rhs);
      double kappa = 2.0 * s(2) / std::pow(1.0 + s(1) * s(1), 1.5);
      if (!std::isfinite(kappa)) {
        ++rep.skipped;
        continue;
      }
      kv[static_cast<std::size_t>(k)] = kappa;
      double target = lambda * sample(g, p[0], p[1]) / sigma;
      if (target > 0.0) rep.ratios.push_back(kappa / target);
      kappas.push_back(kappa);
      ++rep.fitted;
    }
    rep.kappa.push_back(std::move(kv));
  }
  if (!kappas.empty()) {
    rep.median_kappa = quantile(kappas, 0.5);
    std::vector<double> abs_k(kappas.size());
    std::transform(kappas.begin(), kappas.end(), abs_k.begin(), [](double x) { return std::abs(x); });
    rep.median_abs_kappa = quantile(abs_k, 0.5);
  }
  if (!rep.ratios.empty()) {
    rep.median_ratio = quantile(rep.ratios, 0.5);
    rep.iqr_ratio = quantile(rep.ratios, 0.75) - quantile(rep.ratios, 0.25);
  }
  return rep;
}

auto multiplicity_estimate(const MeasureReport& report, const InterfaceGeometry& geom)
    -> std::vector<ArcMultiplicity> {
  const auto& grid = report.density.grid();
  const double eps = report.eps;
  require(eps > 0.0, ErrorKind::input, "multiplicity_estimate: report has no eps");
  const double tube = 6.0 * eps * truncation_width(eps);
  std::vector<ArcMultiplicity> out;
  const std::size_t arcs = geom.dim == 1 ? geom.crossings.size() : geom.polylines.size();
  if (arcs == 0) return out;

  auto node_distance = [&](std::size_t node, std::size_t arc) -> double {
    if (geom.dim == 1) return std::abs(periodic_offset(grid.coord(node, 0), geom.crossings[arc], grid.extent(0)));
    Point2 p{grid.coord(node, 0), grid.coord(node, 1)};
    return distance_to_polyline(p, geom.polylines[arc], {grid.extent(0), grid.extent(1)}, tube);
  };
  auto arc_length = [&](std::size_t arc) { return geom.dim == 1 ? 1.0 : geom.polylines[arc].length(); };
  // Symmetrised vertex-to-arc distance between two arcs.
  auto arc_gap = [&](std::size_t a, std::size_t b) -> double {
    if (geom.dim == 1) return std::abs(periodic_offset(geom.crossings[a], geom.crossings[b], grid.extent(0)));
    const Point2 period{grid.extent(0), grid.extent(1)};
    double worst = 0.0;
    for (auto [x, y] : {std::pair{a, b}, std::pair{b, a}})
      for (const auto& p : geom.polylines[x].points)
        worst = std::max(worst, distance_to_polyline(p, geom.polylines[y], period));
    return worst;
  };

  std::vector<std::size_t> cluster(arcs);
  for (std::size_t a = 0; a < arcs; ++a) cluster[a] = a;
  std::function<std::size_t(std::size_t)> find = [&](std::size_t a) {
    return cluster[a] == a ? a : cluster[a] = find(cluster[a]);
  };
  for (std::size_t a = 0; a < arcs; ++a)
    for (std::size_t b = a + 1; b < arcs; ++b)
      if (find(a) != find(b) && arc_gap(a, b) < tube) cluster[find(b)] = find(a);

  std::vector<std::size_t> roots;
  for (std::size_t a = 0; a < arcs; ++a) {
    std::size_t r = find(a);
    if (std::find(roots.begin(), roots.end(), r) == roots.end()) roots.push_back(r);
  }
  std::vector<double> mass(roots.size(), 0.0);
  std::vector<bool> overlap(roots.size(), false);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::vector<std::size_t> hits;
    for (std::size_t a = 0; a < arcs; ++a) {
      std::size_t c = static_cast<std::size_t>(std::find(roots.begin(), roots.end(), find(a)) - roots.begin());
      if (std::find(hits.begin(), hits.end(), c) != hits.end()) continue;
      if (node_distance(i, a) < tube) hits.push_back(c);
    }
    for (std::size_t c : hits) {
      mass[c] += report.density[i] * grid.cell_volume();
      if (hits.size() > 1) overlap[c] = true;
    }
  }
  for (std::size_t a = 0; a < arcs; ++a) {
    std::size_t c = static_cast<std::size_t>(std::find(roots.begin(), roots.end(), find(a)) - roots.begin());
    double len_sum = 0.0;
    int members = 0;
    for (std::size_t b = 0; b < arcs; ++b)
      if (find(b) == roots[c]) {
        len_sum += arc_length(b);
        ++members;
      }
    ArcMultiplicity m;
    m.arc = a;
    m.cluster = c;
    m.length = arc_length(a);
    m.mass = mass[c] * m.length / len_sum;
    m.ratio = mass[c] / (len_sum / members);
    m.estimate = static_cast<int>(std::lround(m.ratio));
    m.unreliable = overlap[c] || std::abs(m.ratio - m.estimate) > 0.25 || m.estimate == 0;
    out.push_back(m);
  }
  return out;
}

auto phase_classify(const ScalarField& u, double threshold) -> PhaseReport {
  const auto& g = u.grid();
  PhaseReport rep;
  rep.labels.assign(u.size(), -1);
  auto side = [&](std::size_t i) { return u[i] > threshold ? 1 : (u[i] < threshold ? -1 : 0); };
  std::vector<std::size_t> stack;
  for (std::size_t s = 0; s < u.size(); ++s) {
    if (rep.labels[s] != -1 || side(s) == 0) continue;
    const int sign = side(s);
    const int label = static_cast<int>(rep.components.size());
    PhaseComponent comp{sign, 0, 0.0};
    rep.labels[s] = label;
    stack.assign(1, s);
    while (!stack.empty()) {
      std::size_t i = stack.back();
      stack.pop_back();
      ++comp.nodes;
      auto multi = g.multi_index(i);
      for (int a = 0; a < g.dim(); ++a) {
        for (int step : {-1, 1}) {
          auto nb = multi;
          nb[static_cast<std::size_t>(a)] = (nb[static_cast<std::size_t>(a)] + step + g.n(a)) % g.n(a);
          std::size_t j = g.index(nb);
          if (rep.labels[j] == -1 && side(j) == sign) {
            rep.labels[j] = label;
            stack.push_back(j);
          }
        }
      }
    }
    comp.volume = static_cast<double>(comp.nodes) * g.cell_volume();
    (sign > 0 ? rep.plus_volume : rep.minus_volume) += comp.volume;
    rep.components.push_back(comp);
  }
  return rep;
}

auto stability_quadratic_check(const ScalarField& u, double eps, const WellSpec& w,
                               const std::vector<ScalarField>& battery) -> StabilityCheck {
  require(!battery.empty(), ErrorKind::input, "stability_quadratic_check: empty battery");
  StabilityCheck rep;
  rep.min_value = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < battery.size(); ++k) {
    require_same_grid(u, battery[k], "stability_quadratic_check");
    double q = stability_quadratic(u, eps, w, battery[k]);
    rep.values.push_back(q);
    if (q < rep.min_value) {
      rep.min_value = q;
      rep.argmin = k;
    }
  }
  return rep;
}

auto default_test_battery(const TorusGrid& grid, int count, std::uint64_t seed) -> std::vector<ScalarField> {
  require(count > 0, ErrorKind::input, "default_test_battery: count must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> mode(-3, 3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto shared = std::make_shared<const TorusGrid>(grid);
  std::vector<ScalarField> out;
  for (int c = 0; c < count; ++c) {
    ScalarField f(shared);
    for (int m = 0; m < 3; ++m) {
      std::vector<int> k(static_cast<std::size_t>(grid.dim()));
      for (auto& x : k) x = mode(rng);
      double amp = normal(rng), phase = 2.0 * std::numbers::pi * unit(rng);
      for (std::size_t i = 0; i < f.size(); ++i) {
        double arg = phase;
        for (int a = 0; a < grid.dim(); ++a)
          arg += 2.0 * std::numbers::pi * k[static_cast<std::size_t>(a)] * grid.coord(i, a) / grid.extent(a);
        f[i] += amp * std::cos(arg);
      }
    }
    std::vector<double> centre(static_cast<std::size_t>(grid.dim()));
    double ext = 1e300;
    for (int a = 0; a < grid.dim(); ++a) {
      centre[static_cast<std::size_t>(a)] = grid.extent(a) * unit(rng);
      ext = std::min(ext, grid.extent(a));
    }
    double radius = 2.0 * grid.min_spacing() + (0.25 * ext - 2.0 * grid.min_spacing()) * unit(rng);
    double amp = 2.0 * normal(rng);
    for (std::size_t i = 0; i < f.size(); ++i) {
      double r2 = 0.0;
      for (int a = 0; a < grid.dim(); ++a) {
        double d = periodic_offset(grid.coord(i, a), centre[static_cast<std::size_t>(a)], grid.extent(a));
        r2 += d * d;
      }
      f[i] += amp * std::exp(-r2 / (radius * radius));
    }
    out.push_back(std::move(f));
  }
  return out;
}

auto hausdorff_distance(const InterfaceGeometry& a, const InterfaceGeometry& b, const TorusGrid& grid) -> double {
  require(a.dim == b.dim, ErrorKind::structural, "hausdorff_distance: dimension mismatch");
  if (a.empty() && b.empty()) return 0.0;
  if (a.empty() || b.empty()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  if (a.dim == 1) {
    auto one_way = [&](const InterfaceGeometry& x, const InterfaceGeometry& y) {
      for (double p : x.crossings) {
        double best = std::numeric_limits<double>::infinity();
        for (double q : y.crossings) best = std::min(best, std::abs(periodic_offset(p, q, grid.extent(0))));
        worst = std::max(worst, best);
      }
    };
    one_way(a, b);
    one_way(b, a);
    return worst;
  }
  const Point2 period{grid.extent(0), grid.extent(1)};
  auto one_way = [&](const InterfaceGeometry& x, const InterfaceGeometry& y) {
    for (const auto& pl : x.polylines)
      for (const auto& p : pl.points) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& ql : y.polylines) best = std::min(best, distance_to_polyline(p, ql, period));
        worst = std::max(worst, best);
      }
  };
  one_way(a, b);
  one_way(b, a);
  return worst;
}

}  // namespace pmcf
