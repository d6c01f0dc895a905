#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace pmcf {

// Periodic rectangular grid on [0,L_0) x ... x [0,L_{d-1}), nodes at i*h.
// Storage is row-major with axis 0 fastest.
class TorusGrid {
 public:
  TorusGrid(std::vector<int> dims, std::vector<double> extents);

  [[nodiscard]] auto dim() const noexcept -> int { return static_cast<int>(dims_.size()); }
  [[nodiscard]] auto dims() const noexcept -> const std::vector<int>& { return dims_; }
  [[nodiscard]] auto extents() const noexcept -> const std::vector<double>& { return extents_; }
  [[nodiscard]] auto size() const noexcept -> std::size_t { return size_; }
  [[nodiscard]] auto n(int axis) const -> int { return dims_.at(axis); }
  [[nodiscard]] auto extent(int axis) const -> double { return extents_.at(axis); }
  [[nodiscard]] auto spacing(int axis) const -> double { return extents_.at(axis) / dims_.at(axis); }
  [[nodiscard]] auto stride(int axis) const -> std::size_t { return strides_.at(axis); }
  [[nodiscard]] auto cell_volume() const noexcept -> double { return cell_volume_; }
  [[nodiscard]] auto volume() const noexcept -> double;
  [[nodiscard]] auto min_spacing() const -> double;

  [[nodiscard]] auto index(const std::vector<int>& multi) const -> std::size_t;
  [[nodiscard]] auto multi_index(std::size_t flat) const -> std::vector<int>;
  // Coordinate of a node along one axis.
  [[nodiscard]] auto coord(std::size_t flat, int axis) const -> double;

  auto operator==(const TorusGrid& other) const -> bool {
    return dims_ == other.dims_ && extents_ == other.extents_;
  }

 private:
  std::vector<int> dims_;
  std::vector<double> extents_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
  double cell_volume_ = 0.0;
};

// Periodic difference of two coordinates, wrapped into [-L/2, L/2).
auto periodic_offset(double a, double b, double length) -> double;

class ScalarField {
 public:
  // Empty placeholder without a grid; only assignment and empty() are meaningful.
  ScalarField() = default;
  explicit ScalarField(const TorusGrid& grid, double fill = 0.0);
  ScalarField(std::shared_ptr<const TorusGrid> grid, double fill = 0.0);
  ScalarField(const TorusGrid& grid, std::vector<double> values);
  ScalarField(std::shared_ptr<const TorusGrid> grid, std::vector<double> values);

  [[nodiscard]] auto grid() const noexcept -> const TorusGrid& { return *grid_; }
  [[nodiscard]] auto grid_ptr() const noexcept -> const std::shared_ptr<const TorusGrid>& { return grid_; }
  [[nodiscard]] auto size() const noexcept -> std::size_t { return values_.size(); }
  [[nodiscard]] auto empty() const noexcept -> bool { return !grid_; }
  [[nodiscard]] auto values() noexcept -> std::vector<double>& { return values_; }
  [[nodiscard]] auto values() const noexcept -> const std::vector<double>& { return values_; }
  [[nodiscard]] auto data() noexcept -> double* { return values_.data(); }
  [[nodiscard]] auto data() const noexcept -> const double* { return values_.data(); }
  auto operator[](std::size_t i) -> double& { return values_[i]; }
  auto operator[](std::size_t i) const -> double { return values_[i]; }

  [[nodiscard]] auto same_grid(const ScalarField& other) const -> bool;
  [[nodiscard]] auto min() const -> double;
  [[nodiscard]] auto max() const -> double;
  [[nodiscard]] auto all_finite() const -> bool;

  // Fill from a function of the node coordinates.
  static auto from_function(const TorusGrid& grid, const std::function<double(const std::vector<double>&)>& f)
      -> ScalarField;

 private:
  std::shared_ptr<const TorusGrid> grid_;
  std::vector<double> values_;
};

void require_same_grid(const ScalarField& a, const ScalarField& b, const char* where);

// Raw kernels on the node arrays, shared by the field operators and solvers.
void laplacian_raw(const TorusGrid& grid, const double* in, double* out);

// Backward-divergence of the forward gradient; the standard 2d+1 point stencil.
auto laplacian(const ScalarField& u) -> ScalarField;
// Average of the squared forward and backward differences; its integral is
// the squared forward-difference gradient, which is what the energy uses.
auto gradient_sq(const ScalarField& u) -> ScalarField;
// Sum of node values times the cell volume.
auto integrate(const ScalarField& u) -> double;
// Integral of u*v.
auto inner(const ScalarField& u, const ScalarField& v) -> double;
auto l2_norm(const ScalarField& u) -> double;
auto sup_norm(const ScalarField& u) -> double;

// a*x + y
auto axpy(double a, const ScalarField& x, const ScalarField& y) -> ScalarField;
auto pointwise_map(const ScalarField& u, const std::function<double(double)>& f) -> ScalarField;
auto pointwise_zip(const ScalarField& u, const ScalarField& v, const std::function<double(double, double)>& f)
    -> ScalarField;
auto operator+(const ScalarField& a, const ScalarField& b) -> ScalarField;
auto operator-(const ScalarField& a, const ScalarField& b) -> ScalarField;
auto operator*(double s, const ScalarField& a) -> ScalarField;

}  // namespace pmcf
