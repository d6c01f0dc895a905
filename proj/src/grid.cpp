#include "pmcf/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pmcf/error.hpp"

namespace pmcf {

auto exit_code(ErrorKind kind) noexcept -> int {
  switch (kind) {
    case ErrorKind::config:
    case ErrorKind::input:
    case ErrorKind::format:
    case ErrorKind::structural:
    case ErrorKind::unsupported:
      return 2;
    case ErrorKind::numeric:
    case ErrorKind::construction:
      return 3;
    case ErrorKind::search:
      return 4;
  }
  return 1;
}

TorusGrid::TorusGrid(std::vector<int> dims, std::vector<double> extents)
    : dims_(std::move(dims)), extents_(std::move(extents)) {
  require(!dims_.empty() && dims_.size() <= 3, ErrorKind::structural, "grid dimension must be 1, 2 or 3");
  require(dims_.size() == extents_.size(), ErrorKind::structural, "grid dims and extents differ in length");
  size_ = 1;
  cell_volume_ = 1.0;
  strides_.resize(dims_.size());
  for (std::size_t a = 0; a < dims_.size(); ++a) {
    require(dims_[a] >= 8, ErrorKind::structural, "every grid axis needs at least 8 nodes");
    require(std::isfinite(extents_[a]) && extents_[a] > 0.0, ErrorKind::structural, "grid extents must be positive");
    strides_[a] = size_;
    size_ *= static_cast<std::size_t>(dims_[a]);
    cell_volume_ *= extents_[a] / dims_[a];
  }
}

auto TorusGrid::volume() const noexcept -> double {
  double v = 1.0;
  for (double e : extents_) v *= e;
  return v;
}

auto TorusGrid::min_spacing() const -> double {
  double h = spacing(0);
  for (int a = 1; a < dim(); ++a) h = std::min(h, spacing(a));
  return h;
}

auto TorusGrid::index(const std::vector<int>& multi) const -> std::size_t {
  std::size_t flat = 0;
  for (int a = 0; a < dim(); ++a) {
    int n = dims_[a];
    int i = ((multi.at(a) % n) + n) % n;
    flat += static_cast<std::size_t>(i) * strides_[a];
  }
  return flat;
}

auto TorusGrid::multi_index(std::size_t flat) const -> std::vector<int> {
  std::vector<int> m(dims_.size());
  for (std::size_t a = 0; a < dims_.size(); ++a) {
    m[a] = static_cast<int>(flat % dims_[a]);
    flat /= dims_[a];
  }
  return m;
}

auto TorusGrid::coord(std::size_t flat, int axis) const -> double {
  auto i = (flat / strides_.at(axis)) % dims_[axis];
  return static_cast<double>(i) * spacing(axis);
}

auto periodic_offset(double a, double b, double length) -> double {
  double d = std::fmod(a - b, length);
  if (d < -0.5 * length) d += length;
  if (d >= 0.5 * length) d -= length;
  return d;
}

ScalarField::ScalarField(const TorusGrid& grid, double fill)
    : ScalarField(std::make_shared<const TorusGrid>(grid), fill) {}

ScalarField::ScalarField(std::shared_ptr<const TorusGrid> grid, double fill)
    : grid_(std::move(grid)), values_(grid_->size(), fill) {}

ScalarField::ScalarField(const TorusGrid& grid, std::vector<double> values)
    : ScalarField(std::make_shared<const TorusGrid>(grid), std::move(values)) {}

ScalarField::ScalarField(std::shared_ptr<const TorusGrid> grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  require(values_.size() == grid_->size(), ErrorKind::structural, "field length does not match the grid");
}

auto ScalarField::same_grid(const ScalarField& other) const -> bool {
  if (grid_ == other.grid_) return true;
  return grid_ && other.grid_ && *grid_ == *other.grid_;
}

auto ScalarField::min() const -> double { return *std::min_element(values_.begin(), values_.end()); }
auto ScalarField::max() const -> double { return *std::max_element(values_.begin(), values_.end()); }

auto ScalarField::all_finite() const -> bool {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

auto ScalarField::from_function(const TorusGrid& grid, const std::function<double(const std::vector<double>&)>& f)
    -> ScalarField {
  ScalarField u(grid);
  std::vector<double> x(grid.dim());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (int a = 0; a < grid.dim(); ++a) x[a] = grid.coord(i, a);
    u[i] = f(x);
  }
  return u;
}

void require_same_grid(const ScalarField& a, const ScalarField& b, const char* where) {
  if (!a.same_grid(b)) {
    std::ostringstream msg;
    msg << where << ": fields live on different grids";
    fail(ErrorKind::structural, msg.str());
  }
}

namespace {

// Calls f(i, plus, minus) for every node along one axis, where plus/minus are
// the periodic neighbours.
template <class F>
void for_each_axis_pair(const TorusGrid& grid, int axis, F&& f) {
  const std::size_t n = grid.n(axis);
  const std::size_t s = grid.stride(axis);
  const std::size_t block = s * n;
  const std::size_t total = grid.size();
  for (std::size_t base = 0; base < total; base += block) {
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t kp = (k + 1 == n) ? 0 : k + 1;
      std::size_t km = (k == 0) ? n - 1 : k - 1;
      for (std::size_t j = 0; j < s; ++j) {
        f(base + k * s + j, base + kp * s + j, base + km * s + j);
      }
    }
  }
}

}  // namespace

void laplacian_raw(const TorusGrid& grid, const double* in, double* out) {
  std::fill(out, out + grid.size(), 0.0);
  for (int a = 0; a < grid.dim(); ++a) {
    const double w = 1.0 / (grid.spacing(a) * grid.spacing(a));
    for_each_axis_pair(grid, a, [&](std::size_t i, std::size_t ip, std::size_t im) {
      out[i] += w * (in[ip] - 2.0 * in[i] + in[im]);
    });
  }
}

auto laplacian(const ScalarField& u) -> ScalarField {
  ScalarField out(u.grid_ptr());
  laplacian_raw(u.grid(), u.data(), out.data());
  return out;
}

auto gradient_sq(const ScalarField& u) -> ScalarField {
  ScalarField out(u.grid_ptr());
  const double* v = u.data();
  for (int a = 0; a < u.grid().dim(); ++a) {
    const double w = 0.5 / (u.grid().spacing(a) * u.grid().spacing(a));
    for_each_axis_pair(u.grid(), a, [&](std::size_t i, std::size_t ip, std::size_t im) {
      double fwd = v[ip] - v[i];
      double bwd = v[i] - v[im];
      out[i] += w * (fwd * fwd + bwd * bwd);
    });
  }
  return out;
}

auto integrate(const ScalarField& u) -> double {
  double s = 0.0;
  for (double v : u.values()) s += v;
  return s * u.grid().cell_volume();
}

auto inner(const ScalarField& u, const ScalarField& v) -> double {
  require_same_grid(u, v, "inner");
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s * u.grid().cell_volume();
}

auto l2_norm(const ScalarField& u) -> double { return std::sqrt(inner(u, u)); }

auto sup_norm(const ScalarField& u) -> double {
  double m = 0.0;
  for (double v : u.values()) m = std::max(m, std::abs(v));
  return m;
}

auto axpy(double a, const ScalarField& x, const ScalarField& y) -> ScalarField {
  require_same_grid(x, y, "axpy");
  ScalarField out(y.grid_ptr());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i] + y[i];
  return out;
}

auto pointwise_map(const ScalarField& u, const std::function<double(double)>& f) -> ScalarField {
  ScalarField out(u.grid_ptr());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = f(u[i]);
  return out;
}

auto pointwise_zip(const ScalarField& u, const ScalarField& v, const std::function<double(double, double)>& f)
    -> ScalarField {
  require_same_grid(u, v, "pointwise_zip");
  ScalarField out(u.grid_ptr());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = f(u[i], v[i]);
  return out;
}

auto operator+(const ScalarField& a, const ScalarField& b) -> ScalarField { return axpy(1.0, a, b); }
auto operator-(const ScalarField& a, const ScalarField& b) -> ScalarField { return axpy(-1.0, b, a); }
auto operator*(double s, const ScalarField& a) -> ScalarField {
  return pointwise_map(a, [s](double v) { return s * v; });
}

}  // namespace pmcf
