#include "pmcf/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <vector>

#include "pmcf/error.hpp"
#include "quadrature.hpp"

namespace pmcf {

namespace {

using detail::adaptive_integral;

auto mollifier_unnormalised(double y) -> double {
  if (std::abs(y) >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - y * y));
}

// Cumulative distribution of the normalised mollifier on [-1,1], tabulated
// and interpolated with quintic Hermite pieces using the exact density.
class MollifierCdf {
 public:
  MollifierCdf() {
    nodes_.resize(kN + 1);
    cdf_.resize(kN + 1);
    cdf_[0] = 0.0;
    for (int i = 0; i <= kN; ++i) nodes_[i] = -1.0 + 2.0 * i / kN;
    for (int i = 0; i < kN; ++i) {
      cdf_[i + 1] = cdf_[i] + adaptive_integral(mollifier_unnormalised, nodes_[i], nodes_[i + 1], 0, 0.0);
    }
    norm_ = cdf_[kN];
    for (double& c : cdf_) c /= norm_;
  }

  [[nodiscard]] auto density(double y) const -> double { return mollifier_unnormalised(y) / norm_; }

  [[nodiscard]] auto density_d1(double y) const -> double {
    if (std::abs(y) >= 1.0) return 0.0;
    double q = 1.0 - y * y;
    return density(y) * (-2.0 * y / (q * q));
  }

  [[nodiscard]] auto operator()(double y) const -> double {
    if (y <= -1.0) return 0.0;
    if (y >= 1.0) return 1.0;
    double pos = (y + 1.0) * kN / 2.0;
    int i = std::min(kN - 1, static_cast<int>(pos));
    double h = nodes_[i + 1] - nodes_[i];
    double s = (y - nodes_[i]) / h;
    // Quintic Hermite pieces with the exact first and second derivatives.
    double s2 = s * s, s3 = s2 * s, s4 = s3 * s, s5 = s4 * s;
    double h0 = 1 - 10 * s3 + 15 * s4 - 6 * s5, h1 = s - 6 * s3 + 8 * s4 - 3 * s5;
    double h2 = 0.5 * (s2 - 3 * s3 + 3 * s4 - s5), h3 = 10 * s3 - 15 * s4 + 6 * s5;
    double h4 = -4 * s3 + 7 * s4 - 3 * s5, h5 = 0.5 * (s3 - 2 * s4 + s5);
    return h0 * cdf_[i] + h1 * h * density(nodes_[i]) + h2 * h * h * density_d1(nodes_[i]) + h3 * cdf_[i + 1] +
           h4 * h * density(nodes_[i + 1]) + h5 * h * h * density_d1(nodes_[i + 1]);
  }

 private:
  static constexpr int kN = 4096;
  std::vector<double> nodes_;
  std::vector<double> cdf_;
  double norm_ = 1.0;
};

auto mollifier_cdf() -> const MollifierCdf& {
  static const MollifierCdf cdf;
  return cdf;
}

// Heteroclinic for a non-standard well: tabulate r(u) = int_0^u du/sqrt(2W)
// on u = tanh(xi), then interpolate u(r) by cubic Hermite pieces whose
// slopes are the exact u' = sqrt(2W(u)).
class HeteroclinicTable {
 public:
  explicit HeteroclinicTable(const WellSpec& w) : well_(w) {
    // Beyond tanh(7.5) the polynomial W cancels to noise; the exponential
    // tails below take over there.
    const int n = 6000;
    const double xi_max = 7.5;
    std::vector<double> u(2 * n + 1), r(2 * n + 1);
    for (int i = -n; i <= n; ++i) u[i + n] = std::tanh(xi_max * i / n);
    auto inv_speed = [&](double s) { return 1.0 / std::sqrt(2.0 * std::max(eval_well(w, s).W, 1e-300)); };
    r[n] = 0.0;
    // Shallow depth: near the tails the integrand carries cancellation noise
    // that no refinement removes.
    for (int i = n; i < 2 * n; ++i) r[i + 1] = r[i] + adaptive_integral(inv_speed, u[i], u[i + 1], 3, 1e-14);
    for (int i = n; i > 0; --i) r[i - 1] = r[i] - adaptive_integral(inv_speed, u[i - 1], u[i], 3, 1e-14);
    for (int i = 0; i < 2 * n; ++i) {
      require(r[i + 1] > r[i], ErrorKind::numeric, "heteroclinic tabulation lost monotonicity");
    }
    r_ = std::move(r);
    u_ = std::move(u);
    slope_.resize(u_.size());
    for (std::size_t i = 0; i < u_.size(); ++i) slope_[i] = speed(u_[i]);
    decay_plus_ = std::sqrt(eval_well(w, 1.0).d2W);
    decay_minus_ = std::sqrt(eval_well(w, -1.0).d2W);
  }

  [[nodiscard]] auto speed(double u) const -> double { return std::sqrt(2.0 * std::max(0.0, eval_well(well_, u).W)); }

  [[nodiscard]] auto operator()(double r) const -> double {
    if (r >= r_.back()) return 1.0 - (1.0 - u_.back()) * std::exp(-decay_plus_ * (r - r_.back()));
    if (r <= r_.front()) return -1.0 + (1.0 + u_.front()) * std::exp(decay_minus_ * (r - r_.front()));
    auto it = std::upper_bound(r_.begin(), r_.end(), r);
    std::size_t i = static_cast<std::size_t>(it - r_.begin()) - 1;
    double h = r_[i + 1] - r_[i];
    double s = (r - r_[i]) / h;
    double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
    double h10 = s * (1 - s) * (1 - s);
    double h01 = s * s * (3 - 2 * s);
    double h11 = s * s * (s - 1);
    return h00 * u_[i] + h10 * h * slope_[i] + h01 * u_[i + 1] + h11 * h * slope_[i + 1];
  }

 private:
  WellSpec well_;
  std::vector<double> r_, u_, slope_;
  double decay_plus_ = 1.0, decay_minus_ = 1.0;
};

auto heteroclinic_table(const WellSpec& w) -> const HeteroclinicTable& {
  static std::mutex m;
  static std::map<std::vector<double>, std::unique_ptr<HeteroclinicTable>> cache;
  std::lock_guard<std::mutex> lock(m);
  auto& slot = cache[w.coeffs];
  if (!slot) slot = std::make_unique<HeteroclinicTable>(w);
  return *slot;
}

auto sign(double r) -> double { return r > 0 ? 1.0 : (r < 0 ? -1.0 : 0.0); }

void check_eps(double eps) {
  require(eps > 0.0 && eps < 1.0, ErrorKind::input, "profile parameter eps must lie in (0,1)");
}

// Unscaled truncated profile and its derivatives.
struct Jet {
  double v, d1, d2;
};

auto truncated_jet(const WellSpec& w, double lambda, double r) -> Jet {
  const double x = r / lambda;
  if (std::abs(x) >= 2.0) return {sign(r), 0.0, 0.0};
  const double H = heteroclinic(w, r);
  const double H1 = heteroclinic_d1(w, r);
  const double H2 = eval_well(w, H).dW;
  if (std::abs(x) <= 1.0) return {H, H1, H2};
  const double c = smooth_bump(x), c1 = smooth_bump_d1(x) / lambda, c2 = smooth_bump_d2(x) / (lambda * lambda);
  const double gap = H - sign(r);
  return {c * H + sign(r) * (1.0 - c), c1 * gap + c * H1, c2 * gap + 2.0 * c1 * H1 + c * H2};
}

}  // namespace

auto smooth_bump(double x) -> double {
  double a = std::abs(x);
  if (a <= 1.0) return 1.0;
  if (a >= 2.0) return 0.0;
  return 1.0 - mollifier_cdf()(2.0 * a - 3.0);
}

auto smooth_bump_d1(double x) -> double {
  double a = std::abs(x);
  if (a <= 1.0 || a >= 2.0) return 0.0;
  return -2.0 * mollifier_cdf().density(2.0 * a - 3.0) * sign(x);
}

auto smooth_bump_d2(double x) -> double {
  double a = std::abs(x);
  if (a <= 1.0 || a >= 2.0) return 0.0;
  return -4.0 * mollifier_cdf().density_d1(2.0 * a - 3.0);
}

auto truncation_width(double eps) -> double { return 3.0 * std::abs(std::log(eps)); }

auto heteroclinic(const WellSpec& w, double r) -> double {
  require(std::isfinite(r), ErrorKind::input, "heteroclinic at a non-finite point");
  if (w.family == WellSpec::Family::standard) return std::tanh(r / std::numbers::sqrt2);
  return heteroclinic_table(w)(r);
}

auto heteroclinic_d1(const WellSpec& w, double r) -> double {
  if (w.family == WellSpec::Family::standard) {
    double c = std::cosh(r / std::numbers::sqrt2);
    return 1.0 / (std::numbers::sqrt2 * c * c);
  }
  return std::sqrt(2.0 * std::max(0.0, eval_well(w, heteroclinic(w, r)).W));
}

auto truncated_profile(const WellSpec& w, double eps, double r) -> double {
  check_eps(eps);
  return truncated_jet(w, truncation_width(eps), r / eps).v;
}

auto double_profile(const WellSpec& w, double eps, double t, double r) -> double {
  check_eps(eps);
  require(t >= 0.0, ErrorKind::input, "double profile shift must be nonnegative");
  const double lambda = truncation_width(eps);
  return truncated_jet(w, lambda, (2.0 * eps * lambda - t - std::abs(r)) / eps).v;
}

auto Profile1D::value(double r) const -> double {
  switch (kind) {
    case Kind::heteroclinic:
      return heteroclinic(well, r / eps);
    case Kind::truncated:
      return truncated_profile(well, eps, r);
    case Kind::double_layer:
      return double_profile(well, eps, 0.0, r);
    case Kind::double_shifted:
      return double_profile(well, eps, t, r);
  }
  return 0.0;
}

auto Profile1D::derivative(double r) const -> double {
  check_eps(eps);
  switch (kind) {
    case Kind::heteroclinic:
      return heteroclinic_d1(well, r / eps) / eps;
    case Kind::truncated:
      return truncated_jet(well, lambda(), r / eps).d1 / eps;
    case Kind::double_layer:
    case Kind::double_shifted: {
      double shift = kind == Kind::double_layer ? 0.0 : t;
      double arg = (2.0 * eps * lambda() - shift - std::abs(r)) / eps;
      return -sign(r) * truncated_jet(well, lambda(), arg).d1 / eps;
    }
  }
  return 0.0;
}

auto Profile1D::second_derivative(double r) const -> double {
  check_eps(eps);
  switch (kind) {
    case Kind::heteroclinic:
      return eval_well(well, heteroclinic(well, r / eps)).dW / (eps * eps);
    case Kind::truncated:
      return truncated_jet(well, lambda(), r / eps).d2 / (eps * eps);
    case Kind::double_layer:
    case Kind::double_shifted: {
      double shift = kind == Kind::double_layer ? 0.0 : t;
      double arg = (2.0 * eps * lambda() - shift - std::abs(r)) / eps;
      return truncated_jet(well, lambda(), arg).d2 / (eps * eps);
    }
  }
  return 0.0;
}

auto Profile1D::energy_density(double r) const -> double {
  double p = value(r);
  double dp = derivative(r);
  return 0.5 * eps * dp * dp + eval_well(well, p).W / eps;
}

auto Profile1D::support() const -> double {
  return 4.0 * eps * lambda() + (kind == Kind::double_shifted ? t : 0.0);
}

auto profile_energy_on(const Profile1D& p, double a, double b) -> double {
  check_eps(p.eps);
  if (b <= a) return 0.0;
  const double el = p.eps * p.lambda();
  // Points where the integrand is only piecewise smooth.
  std::vector<double> cuts{a, b};
  auto add = [&](double c) {
    if (c > a && c < b) cuts.push_back(c);
  };
  if (p.kind == Profile1D::Kind::truncated) {
    for (double c : {-2 * el, -el, el, 2 * el}) add(c);
  } else if (p.kind != Profile1D::Kind::heteroclinic) {
    double shift = p.kind == Profile1D::Kind::double_shifted ? p.t : 0.0;
    add(0.0);
    for (double arg : {-2 * el, -el, el, 2 * el}) {
      double r = 2 * el - shift - arg;
      if (r > 0) {
        add(r);
        add(-r);
      }
    }
  }
  std::sort(cuts.begin(), cuts.end());
  auto f = [&](double r) { return p.energy_density(r); };
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] <= cuts[i]) continue;
    double err = 0.0;
    double v = adaptive_integral(f, cuts[i], cuts[i + 1], 20, 1e-13, &err);
    if (!(err <= 1e-10 * std::max(1.0, std::abs(v)))) {
      std::ostringstream msg;
      msg << "profile energy quadrature did not converge, achieved error " << err;
      fail(ErrorKind::numeric, msg.str());
    }
    total += v;
  }
  return total;
}

auto profile_energy(const Profile1D& p) -> double {
  double R = p.support();
  return profile_energy_on(p, -R, R);
}

}  // namespace pmcf
