#pragma once

#include <vector>

#include "pmcf/error.hpp"
#include "pmcf/grid.hpp"
#include "pmcf/well.hpp"

namespace pmcf {

struct EnergyReport {
  double dirichlet = 0.0;  // integral of eps |grad u|^2 / 2
  double potential = 0.0;  // integral of W(u) / eps
  double forcing = 0.0;    // integral of lambda g u
  double total_E = 0.0;
  double total_F = 0.0;
  double eps = 0.0;
  double lambda = 0.0;
};

struct SpectrumReport {
  std::vector<double> eigenvalues;  // ascending
  std::vector<double> residual_norms;
  std::vector<ScalarField> eigenvectors;  // unit Euclidean node norm
  int negative_count = 0;
  double negative_tol = 0.0;
  int iterations = 0;
  bool converged = false;
};

auto ac_energy(const ScalarField& u, double eps, const WellSpec& w) -> EnergyReport;
auto pmc_energy(const ScalarField& u, double eps, const ScalarField& g, double lambda, const WellSpec& w)
    -> EnergyReport;

// -eps lap u + W'(u)/eps - lambda g; the exact gradient of pmc_energy with
// respect to the integrate() inner product.
auto first_variation(const ScalarField& u, double eps, const ScalarField& g, double lambda, const WellSpec& w)
    -> ScalarField;
// Same without forcing.
auto ac_first_variation(const ScalarField& u, double eps, const WellSpec& w) -> ScalarField;

// -eps lap phi + W''(u) phi / eps
auto jacobi_apply(const ScalarField& u, double eps, const WellSpec& w, const ScalarField& phi) -> ScalarField;

// integral of eps |grad phi|^2 + W''(u) phi^2 / eps
auto stability_quadratic(const ScalarField& u, double eps, const WellSpec& w, const ScalarField& phi) -> double;

struct MorseOptions {
  double tol = 1e-8;     // eigen-residual relative to the vector norm
  int max_iter = 2000;
  unsigned seed = 12345;
  int guard = 3;         // extra block vectors carried for convergence
};

class SpectrumError : public Error {
 public:
  SpectrumError(const std::string& what, SpectrumReport partial)
      : Error(ErrorKind::numeric, what), partial_(std::move(partial)) {}
  [[nodiscard]] auto partial() const -> const SpectrumReport& { return partial_; }

 private:
  SpectrumReport partial_;
};

// k lowest eigenvalues of the Jacobi operator, computed on J + (2/eps) I and
// shifted back; negative_count uses the threshold 1e-6 / eps. Throws
// SpectrumError with the partial report when max_iter is exhausted.
auto morse_index(const ScalarField& u, double eps, const WellSpec& w, int k, const MorseOptions& opts = {})
    -> SpectrumReport;

}  // namespace pmcf
