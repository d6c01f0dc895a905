#include "pmcf/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <mutex>
#include <numbers>

#include "pmcf/error.hpp"

namespace pmcf {

namespace {
// FFTW planning is not thread safe.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

PeriodicSpectral::PeriodicSpectral(const TorusGrid& grid) : grid_(grid) {
  const int d = grid.dim();
  std::vector<int> rev(d);
  for (int a = 0; a < d; ++a) rev[a] = grid.n(d - 1 - a);
  n_real_ = grid.size();
  n_complex_ = n_real_ / grid.n(0) * (grid.n(0) / 2 + 1);
  real_buf_ = fftw_alloc_real(n_real_);
  complex_buf_ = fftw_alloc_complex(n_complex_);
  {
    std::lock_guard<std::mutex> lock(plan_mutex());
    plan_fwd_ = fftw_plan_dft_r2c(d, rev.data(), real_buf_, static_cast<fftw_complex*>(complex_buf_), FFTW_ESTIMATE);
    plan_bwd_ = fftw_plan_dft_c2r(d, rev.data(), static_cast<fftw_complex*>(complex_buf_), real_buf_, FFTW_ESTIMATE);
  }
  require(plan_fwd_ != nullptr && plan_bwd_ != nullptr, ErrorKind::numeric, "FFT planning failed");

  // Complex layout: axis 0 is the contiguous half-spectrum dimension.
  symbol_.assign(n_complex_, 0.0);
  const std::size_t half = grid.n(0) / 2 + 1;
  for (std::size_t c = 0; c < n_complex_; ++c) {
    std::size_t rest = c / half;
    std::size_t k0 = c % half;
    double h0 = grid.spacing(0);
    double s = std::sin(std::numbers::pi * static_cast<double>(k0) / grid.n(0));
    double val = 4.0 / (h0 * h0) * s * s;
    for (int a = 1; a < d; ++a) {
      std::size_t ka = rest % grid.n(a);
      rest /= grid.n(a);
      double h = grid.spacing(a);
      double sa = std::sin(std::numbers::pi * static_cast<double>(ka) / grid.n(a));
      val += 4.0 / (h * h) * sa * sa;
    }
    symbol_[c] = val;
  }
}

PeriodicSpectral::~PeriodicSpectral() {
  std::lock_guard<std::mutex> lock(plan_mutex());
  if (plan_fwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  if (plan_bwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_bwd_));
  fftw_free(real_buf_);
  fftw_free(complex_buf_);
}

void PeriodicSpectral::forward(const double* in) {
  std::memcpy(real_buf_, in, n_real_ * sizeof(double));
  fftw_execute(static_cast<fftw_plan>(plan_fwd_));
}

void PeriodicSpectral::backward(double* out) {
  fftw_execute(static_cast<fftw_plan>(plan_bwd_));
  const double scale = 1.0 / static_cast<double>(n_real_);
  for (std::size_t i = 0; i < n_real_; ++i) out[i] = real_buf_[i] * scale;
}

void PeriodicSpectral::solve_helmholtz(double alpha, double beta, const double* rhs, double* x) {
  require(alpha > 0.0 && beta >= 0.0, ErrorKind::input, "Helmholtz solve needs alpha > 0 and beta >= 0");
  forward(rhs);
  auto* c = static_cast<fftw_complex*>(complex_buf_);
  for (std::size_t k = 0; k < n_complex_; ++k) {
    double inv = 1.0 / (alpha + beta * symbol_[k]);
    c[k][0] *= inv;
    c[k][1] *= inv;
  }
  backward(x);
}

void PeriodicSpectral::set_kernel(const std::vector<double>& kernel) {
  require(kernel.size() == n_real_, ErrorKind::structural, "kernel length does not match the grid");
  forward(kernel.data());
  auto* c = static_cast<fftw_complex*>(complex_buf_);
  kernel_hat_.resize(n_complex_);
  for (std::size_t k = 0; k < n_complex_; ++k) kernel_hat_[k] = {c[k][0], c[k][1]};
}

void PeriodicSpectral::convolve(const double* in, double* out) {
  require(!kernel_hat_.empty(), ErrorKind::input, "convolve called before set_kernel");
  forward(in);
  auto* c = static_cast<fftw_complex*>(complex_buf_);
  for (std::size_t k = 0; k < n_complex_; ++k) {
    std::complex<double> z(c[k][0], c[k][1]);
    z *= kernel_hat_[k];
    c[k][0] = z.real();
    c[k][1] = z.imag();
  }
  backward(out);
}

}  // namespace pmcf
