#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "qlqg/matrix_equations.hpp"

namespace qlqg {
namespace {

void require_square(const Eigen::Ref<const MatrixXd>& A, const char* who) {
  if (A.rows() != A.cols()) {
    std::ostringstream msg;
    msg << who << ": matrix must be square, got " << A.rows() << "x" << A.cols();
    throw DimensionError(msg.str());
  }
}

MatrixXd solve_kronecker(const Eigen::Ref<const MatrixXd>& A, const Eigen::Ref<const MatrixXd>& Q) {
  const Index m = A.rows();
  const MatrixXd I = MatrixXd::Identity(m, m);
  // vec(A P + P A^T) = (I kron A + A kron I) vec(P), column-major vec.
  MatrixXd K = MatrixXd::Zero(m * m, m * m);
  for (Index j = 0; j < m; ++j) {
    for (Index l = 0; l < m; ++l) {
      K.block(j * m, l * m, m, m) = I(j, l) * A + A(j, l) * I;
    }
  }
  Eigen::FullPivLU<MatrixXd> lu(K);
  if (!lu.isInvertible()) throw NumericalError("solve_lyapunov: singular Kronecker system");
  const VectorXd rhs = -Eigen::Map<const VectorXd>(MatrixXd(Q).data(), m * m);
  const VectorXd p = lu.solve(rhs);
  return Eigen::Map<const MatrixXd>(p.data(), m, m);
}

// Bartels-Stewart on the complex Schur form.
MatrixXd solve_schur(const Eigen::Ref<const MatrixXd>& A, const Eigen::Ref<const MatrixXd>& Q) {
  using Cd = std::complex<double>;
  using MatrixXcd = Eigen::MatrixXcd;
  const Index m = A.rows();
  Eigen::ComplexSchur<MatrixXd> schur(A);
  if (schur.info() != Eigen::Success) throw NumericalError("solve_lyapunov: Schur decomposition failed");
  const MatrixXcd& U = schur.matrixU();
  const MatrixXcd& T = schur.matrixT();
  const MatrixXcd Qt = U.adjoint() * Q.cast<Cd>() * U;
  MatrixXcd Y = MatrixXcd::Zero(m, m);
  for (Index j = m - 1; j >= 0; --j) {
    Eigen::VectorXcd rhs = -Qt.col(j);
    for (Index k = j + 1; k < m; ++k) rhs -= std::conj(T(j, k)) * Y.col(k);
    MatrixXcd lhs = T;
    lhs.diagonal().array() += std::conj(T(j, j));
    Y.col(j) = lhs.triangularView<Eigen::Upper>().solve(rhs);
  }
  return (U * Y * U.adjoint()).real();
}

}  // namespace

double spectral_abscissa(const Eigen::Ref<const MatrixXd>& A) {
  require_square(A, "spectral_abscissa");
  if (A.rows() == 0) return -std::numeric_limits<double>::infinity();
  Eigen::EigenSolver<MatrixXd> es(A, false);
  if (es.info() != Eigen::Success) throw NumericalError("eigenvalue computation did not converge");
  return es.eigenvalues().real().maxCoeff();
}

bool is_hurwitz(const Eigen::Ref<const MatrixXd>& A, double margin) {
  return spectral_abscissa(A) < -margin;
}

MatrixXd solve_lyapunov(const Eigen::Ref<const MatrixXd>& A, const Eigen::Ref<const MatrixXd>& Q) {
  require_square(A, "solve_lyapunov");
  if (Q.rows() != A.rows() || Q.cols() != A.cols()) {
    throw DimensionError("solve_lyapunov: Q must have the shape of A");
  }
  const double abscissa = spectral_abscissa(A);
  if (!(abscissa < 0)) {
    std::ostringstream msg;
    msg << "solve_lyapunov: A is not Hurwitz (largest eigenvalue real part " << abscissa << ")";
    throw StabilityError(msg.str());
  }
  MatrixXd P = A.rows() <= 64 ? solve_kronecker(A, Q) : solve_schur(A, Q);
  return (P + P.transpose()) / 2;
}

}  // namespace qlqg
