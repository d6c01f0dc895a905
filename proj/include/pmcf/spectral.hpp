#pragma once

#include <complex>
#include <memory>
#include <vector>

#include "pmcf/grid.hpp"

namespace pmcf {

// FFT diagonalisation of constant-coefficient periodic operators built from
// the discrete Laplacian. One instance owns its plans and buffers; it is not
// meant to be shared between threads.
class PeriodicSpectral {
 public:
  explicit PeriodicSpectral(const TorusGrid& grid);
  ~PeriodicSpectral();
  PeriodicSpectral(const PeriodicSpectral&) = delete;
  auto operator=(const PeriodicSpectral&) -> PeriodicSpectral& = delete;

  [[nodiscard]] auto grid() const -> const TorusGrid& { return grid_; }

  // x = (alpha - beta * laplacian)^{-1} rhs. Requires alpha > 0, beta >= 0.
  void solve_helmholtz(double alpha, double beta, const double* rhs, double* x);

  // Circular convolution with a kernel sampled on the grid (kernel node 0 is
  // the origin); the kernel transform is cached until the next call with a
  // different kernel pointer.
  void set_kernel(const std::vector<double>& kernel);
  void convolve(const double* in, double* out);

  // Eigenvalue of -laplacian for each stored Fourier coefficient.
  [[nodiscard]] auto symbol() const -> const std::vector<double>& { return symbol_; }

 private:
  void forward(const double* in);
  void backward(double* out);

  TorusGrid grid_;
  std::size_t n_real_ = 0;
  std::size_t n_complex_ = 0;
  double* real_buf_ = nullptr;
  void* complex_buf_ = nullptr;
  void* plan_fwd_ = nullptr;
  void* plan_bwd_ = nullptr;
  std::vector<double> symbol_;
  std::vector<std::complex<double>> kernel_hat_;
};

}  // namespace pmcf
