#pragma once

#include <Eigen/Dense>
#include <functional>

namespace pmcf {

// Symmetric operator on R^n given by its action, with an optional symmetric
// positive definite preconditioner.
struct SymmetricOperator {
  Eigen::Index n = 0;
  std::function<void(const double*, double*)> apply;
  std::function<void(const double*, double*)> precondition;  // may be empty
};

struct EigenResult {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // orthonormal columns
  Eigen::VectorXd residuals;
  int iterations = 0;
  bool converged = false;
};

// Locally optimal block preconditioned conjugate gradient for the k smallest
// eigenpairs. `block` >= k columns are iterated; convergence is declared when
// the k lowest residual norms are <= tol.
auto lobpcg_smallest(const SymmetricOperator& op, int k, int block, double tol, int max_iter, unsigned seed)
    -> EigenResult;

}  // namespace pmcf
