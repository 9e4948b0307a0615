#include <cmath>
#include <sstream>

#include <Eigen/SVD>

#include "qlqg/matrix_equations.hpp"

namespace qlqg {
namespace {

// Removes from v its components along the first `count` columns of Q.
void orthogonalize(Eigen::Ref<VectorXd> v, const MatrixXd& Q, Index count) {
  for (int pass = 0; pass < 2; ++pass) {
    for (Index j = 0; j < count; ++j) v -= Q.col(j).dot(v) * Q.col(j);
  }
}

}  // namespace

SkewFactorization skew_canonical_factor(const Eigen::Ref<const MatrixXd>& Theta, double tol) {
  const Index n = Theta.rows();
  if (Theta.cols() != n) throw DimensionError("skew_canonical_factor: Theta must be square");
  const double skew_defect = (Theta + Theta.transpose()).norm();
  if (skew_defect > tol * (1 + Theta.norm())) {
    std::ostringstream msg;
    msg << "skew_canonical_factor: input is not skew-symmetric (||Theta + Theta^T||_F = " << skew_defect << ")";
    throw std::invalid_argument(msg.str());
  }
  const MatrixXd K = 0.5 * (Theta - Theta.transpose());

  // Singular values of K come in equal pairs, one pair per J block.
  Eigen::JacobiSVD<MatrixXd> svd(K, Eigen::ComputeFullV);
  const VectorXd sigma = svd.singularValues();
  const MatrixXd& Vs = svd.matrixV();
  const double sigma_max = n > 0 ? sigma(0) : 0.0;
  const double cutoff = tol * sigma_max;

  Index nonzero = 0;
  for (Index i = 0; i < n; ++i) {
    if (sigma(i) > cutoff && sigma_max > 0) ++nonzero;
  }
  nonzero -= nonzero % 2;
  const Index pairs = nonzero / 2;
  const Index kernel = n - nonzero;
  // Ascending order as in an eigen decomposition of K^T K.
  const MatrixXd V = Vs.rowwise().reverse();

  // Pair basis: q1 from the spectrum, q2 = -K q1 / lambda.
  MatrixXd Qp(n, nonzero);
  std::vector<double> lambdas;
  Index filled = 0;
  for (Index i = n - 1; i >= 0 && filled < nonzero; --i) {
    VectorXd q1 = V.col(i);
    orthogonalize(q1, Qp, filled);
    if (q1.norm() < 0.5) continue;
    q1.normalize();
    const double lambda = (K * q1).norm();
    VectorXd q2 = -K * q1 / lambda;
    orthogonalize(q2, Qp, filled);
    q2.normalize();
    Qp.col(filled) = q1;
    Qp.col(filled + 1) = q2;
    lambdas.push_back(q1.dot(K * q2));
    filled += 2;
  }
  if (filled != nonzero) throw NumericalError("skew_canonical_factor: could not pair the spectrum of Theta");

  // Kernel basis: the orthogonal complement of the pair basis.
  MatrixXd Qk(n, kernel);
  Index kfilled = 0;
  for (Index i = 0; i < n && kfilled < kernel; ++i) {
    VectorXd v = V.col(i);
    orthogonalize(v, Qp, nonzero);
    orthogonalize(v, Qk, kfilled);
    if (v.norm() < 0.5) continue;
    Qk.col(kfilled++) = v.normalized();
  }
  if (kfilled != kernel) throw NumericalError("skew_canonical_factor: could not complete the kernel basis");

  SkewFactorization out;
  out.kernel_dim = kernel;
  out.S.resize(n, n);
  out.S.leftCols(kernel) = Qk;
  for (Index p = 0; p < pairs; ++p) {
    const double scale = std::sqrt(lambdas[p]);
    out.S.col(kernel + 2 * p) = scale * Qp.col(2 * p);
    out.S.col(kernel + 2 * p + 1) = scale * Qp.col(2 * p + 1);
  }
  out.Z_can = MatrixXd::Zero(n, n);
  for (Index p = 0; p < pairs; ++p) {
    out.Z_can(kernel + 2 * p, kernel + 2 * p + 1) = 1.0;
    out.Z_can(kernel + 2 * p + 1, kernel + 2 * p) = -1.0;
  }
  out.lambda_spectrum = lambdas;
  return out;
}

}  // namespace qlqg
