#include "pmcf/eigensolver.hpp"

#include <random>

#include "pmcf/error.hpp"

namespace pmcf {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

auto apply_columns(const std::function<void(const double*, double*)>& f, const MatrixXd& X) -> MatrixXd {
  MatrixXd Y(X.rows(), X.cols());
  for (Index j = 0; j < X.cols(); ++j) f(X.col(j).data(), Y.col(j).data());
  return Y;
}

// Orthonormal basis of span(S) by pivoted Householder QR on unit columns;
// numerically dependent directions are dropped.
auto orthonormal_basis(MatrixXd S) -> MatrixXd {
  for (Index j = 0; j < S.cols(); ++j) {
    double nrm = S.col(j).norm();
    if (nrm > 0.0) S.col(j) /= nrm;
  }
  Eigen::ColPivHouseholderQR<MatrixXd> qr(S);
  qr.setThreshold(1e-10);
  const Index r = qr.rank();
  return qr.householderQ() * MatrixXd::Identity(S.rows(), r);
}

}  // namespace

auto lobpcg_smallest(const SymmetricOperator& op, int k, int block, double tol, int max_iter, unsigned seed)
    -> EigenResult {
  const Index n = op.n;
  const Index m = std::min<Index>(std::max(block, k), n);
  require(k >= 1 && k <= n, ErrorKind::input, "eigenvalue count must be between 1 and the node count");

  std::mt19937 rng(seed);
  std::normal_distribution<double> normal;
  MatrixXd X(n, m);
  for (Index j = 0; j < m; ++j)
    for (Index i = 0; i < n; ++i) X(i, j) = normal(rng);
  X = X.householderQr().householderQ() * MatrixXd::Identity(n, m);

  MatrixXd AX = apply_columns(op.apply, X);
  {
    MatrixXd H = X.transpose() * AX;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (H + H.transpose()));
    X = X * es.eigenvectors();
    AX = AX * es.eigenvectors();
  }
  VectorXd theta = (X.transpose() * AX).diagonal();
  MatrixXd P;

  EigenResult out;
  for (int it = 1; it <= max_iter; ++it) {
    MatrixXd R = AX - X * theta.asDiagonal();
    VectorXd res = R.colwise().norm();
    out.iterations = it;
    if (res.head(k).maxCoeff() <= tol) {
      out.converged = true;
      out.values = theta;
      out.vectors = X;
      out.residuals = res;
      break;
    }
    MatrixXd Wm = op.precondition ? apply_columns(op.precondition, R) : R;
    Wm -= X * (X.transpose() * Wm);

    Index cols = X.cols() + Wm.cols() + P.cols();
    MatrixXd S(n, cols);
    S.leftCols(X.cols()) = X;
    S.middleCols(X.cols(), Wm.cols()) = Wm;
    if (P.cols() > 0) S.rightCols(P.cols()) = P;
    // Rayleigh-Ritz on an orthonormal basis with a freshly applied operator;
    // the Gram-matrix route loses half the digits once P and W align.
    MatrixXd Q = orthonormal_basis(S);
    if (Q.cols() < m) Q = orthonormal_basis(S.leftCols(X.cols() + Wm.cols()));
    if (Q.cols() < m) fail(ErrorKind::numeric, "eigensolver search space collapsed");
    MatrixXd AQ = apply_columns(op.apply, Q);
    MatrixXd H = Q.transpose() * AQ;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (H + H.transpose()));
    MatrixXd C = es.eigenvectors().leftCols(m);

    MatrixXd Xn = Q * C;
    MatrixXd AXn = AQ * C;
    MatrixXd overlap = X.transpose() * Xn;
    P = Xn - X * overlap;
    X = std::move(Xn);
    AX = std::move(AXn);
    theta = es.eigenvalues().head(m);

    out.values = theta;
    out.vectors = X;
    out.residuals = res;
  }
  if (!out.converged) {
    MatrixXd R = AX - X * theta.asDiagonal();
    out.residuals = R.colwise().norm();
    out.values = theta;
    out.vectors = X;
  }
  return out;
}

}  // namespace pmcf
