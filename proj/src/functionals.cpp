#include "pmcf/functionals.hpp"

#include <cmath>
#include <sstream>

#include "pmcf/eigensolver.hpp"
#include "pmcf/error.hpp"
#include "pmcf/spectral.hpp"

namespace pmcf {

namespace {

void check_finite(const ScalarField& u, const char* what) {
  if (!u.all_finite()) fail(ErrorKind::input, std::string(what) + ": field contains NaN or Inf");
}

// Sum over axes of squared forward differences, times the cell volume.
auto forward_dirichlet(const ScalarField& u) -> double {
  const auto& g = u.grid();
  double total = 0.0;
  for (int a = 0; a < g.dim(); ++a) {
    const std::size_t n = g.n(a), s = g.stride(a), block = n * s;
    const double w = 1.0 / (g.spacing(a) * g.spacing(a));
    double acc = 0.0;
    for (std::size_t base = 0; base < g.size(); base += block) {
      for (std::size_t k = 0; k < n; ++k) {
        std::size_t kp = (k + 1 == n) ? 0 : k + 1;
        for (std::size_t j = 0; j < s; ++j) {
          double d = u[base + kp * s + j] - u[base + k * s + j];
          acc += d * d;
        }
      }
    }
    total += w * acc;
  }
  return total * g.cell_volume();
}

}  // namespace

auto ac_energy(const ScalarField& u, double eps, const WellSpec& w) -> EnergyReport {
  require(eps > 0.0, ErrorKind::input, "ac_energy: eps must be positive");
  check_finite(u, "ac_energy");
  EnergyReport r;
  r.eps = eps;
  r.dirichlet = 0.5 * eps * forward_dirichlet(u);
  double pot = 0.0;
  for (double v : u.values()) pot += eval_well(w, v).W;
  r.potential = pot * u.grid().cell_volume() / eps;
  r.total_E = r.dirichlet + r.potential;
  r.total_F = r.total_E;
  return r;
}

auto pmc_energy(const ScalarField& u, double eps, const ScalarField& g, double lambda, const WellSpec& w)
    -> EnergyReport {
  require_same_grid(u, g, "pmc_energy");
  require(lambda >= 0.0, ErrorKind::input, "pmc_energy: lambda must be nonnegative");
  check_finite(g, "pmc_energy");
  require(g.min() >= 0.0, ErrorKind::input, "pmc_energy: forcing g has a negative node");
  EnergyReport r = ac_energy(u, eps, w);
  r.lambda = lambda;
  r.forcing = lambda * inner(g, u);
  r.total_F = r.total_E - r.forcing;
  return r;
}

auto ac_first_variation(const ScalarField& u, double eps, const WellSpec& w) -> ScalarField {
  require(eps > 0.0, ErrorKind::input, "first_variation: eps must be positive");
  ScalarField out = laplacian(u);
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = -eps * out[i] + eval_well(w, u[i]).dW / eps;
  return out;
}

auto first_variation(const ScalarField& u, double eps, const ScalarField& g, double lambda, const WellSpec& w)
    -> ScalarField {
  require_same_grid(u, g, "first_variation");
  ScalarField out = ac_first_variation(u, eps, w);
  for (std::size_t i = 0; i < u.size(); ++i) out[i] -= lambda * g[i];
  return out;
}

auto jacobi_apply(const ScalarField& u, double eps, const WellSpec& w, const ScalarField& phi) -> ScalarField {
  require_same_grid(u, phi, "jacobi_apply");
  ScalarField out = laplacian(phi);
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = -eps * out[i] + eval_well(w, u[i]).d2W * phi[i] / eps;
  return out;
}

auto stability_quadratic(const ScalarField& u, double eps, const WellSpec& w, const ScalarField& phi) -> double {
  require_same_grid(u, phi, "stability_quadratic");
  double pot = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) pot += eval_well(w, u[i]).d2W * phi[i] * phi[i];
  return eps * forward_dirichlet(phi) + pot * u.grid().cell_volume() / eps;
}

auto morse_index(const ScalarField& u, double eps, const WellSpec& w, int k, const MorseOptions& opts)
    -> SpectrumReport {
  require(eps > 0.0, ErrorKind::input, "morse_index: eps must be positive");
  require(k >= 1 && static_cast<std::size_t>(k) <= u.size(), ErrorKind::input,
          "morse_index: k must be between 1 and the node count");
  check_finite(u, "morse_index");
  const auto& grid = u.grid();
  const double shift = 2.0 / eps;
  std::vector<double> pot(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) pot[i] = eval_well(w, u[i]).d2W / eps + shift;

  PeriodicSpectral spectral(grid);
  std::vector<double> lap(u.size());
  SymmetricOperator op;
  op.n = static_cast<Eigen::Index>(u.size());
  op.apply = [&](const double* x, double* y) {
    laplacian_raw(grid, x, lap.data());
    for (std::size_t i = 0; i < pot.size(); ++i) y[i] = -eps * lap[i] + pot[i] * x[i];
  };
  // Shifted operator sits between -eps lap + 1/eps and -eps lap + 5/eps for
  // values in the wells' basin; the midpoint is a spectrally equivalent inverse.
  op.precondition = [&](const double* x, double* y) { spectral.solve_helmholtz(3.0 / eps, eps, x, y); };

  const int block = std::min<int>(k + opts.guard, static_cast<int>(u.size()));
  auto res = lobpcg_smallest(op, k, block, opts.tol, opts.max_iter, opts.seed);

  SpectrumReport rep;
  rep.iterations = res.iterations;
  rep.converged = res.converged;
  rep.negative_tol = 1e-6 / eps;
  for (int j = 0; j < k; ++j) {
    double mu = res.values(j) - shift;
    rep.eigenvalues.push_back(mu);
    rep.residual_norms.push_back(res.residuals(j));
    ScalarField v(u.grid_ptr());
    for (std::size_t i = 0; i < u.size(); ++i) v[i] = res.vectors(static_cast<Eigen::Index>(i), j);
    rep.eigenvectors.push_back(std::move(v));
    if (mu < -rep.negative_tol) ++rep.negative_count;
  }
  if (!res.converged) {
    std::ostringstream msg;
    msg << "morse_index: eigensolver did not converge in " << res.iterations << " iterations (worst residual "
        << res.residuals.head(k).maxCoeff() << ")";
    throw SpectrumError(msg.str(), std::move(rep));
  }
  return rep;
}

}  // namespace pmcf
