#include <cmath>
#include <sstream>

#include "qlqg/matrix_equations.hpp"

namespace qlqg {
namespace {

// Newton iteration for sign(H) with determinant scaling.
MatrixXd matrix_sign(const MatrixXd& H) {
  const Index m = H.rows();
  MatrixXd Z = H;
  for (int iter = 0; iter < 100; ++iter) {
    Eigen::PartialPivLU<MatrixXd> lu(Z);
    const VectorXd diag = lu.matrixLU().diagonal().cwiseAbs();
    if (diag.minCoeff() <= std::numeric_limits<double>::min() || !diag.allFinite()) {
      throw RiccatiError("solve_care: Hamiltonian has an eigenvalue at the origin; no stabilizing solution");
    }
    const double log_det = diag.array().log().sum();
    const double c = std::exp(log_det / static_cast<double>(m));
    MatrixXd next = 0.5 * (Z / c + c * lu.inverse());
    const double change = (next - Z).lpNorm<1>();
    Z = std::move(next);
    if (!Z.allFinite()) break;
    if (change <= 1e-13 * Z.lpNorm<1>()) return Z;
  }
  throw RiccatiError(
      "solve_care: sign iteration did not converge; the Hamiltonian has eigenvalues on or near the imaginary "
      "axis, so the stable invariant subspace is not n-dimensional (pair not stabilizable/detectable)");
}

}  // namespace

double care_residual(const Eigen::Ref<const MatrixXd>& A, const Eigen::Ref<const MatrixXd>& B,
                     const Eigen::Ref<const MatrixXd>& Q, const Eigen::Ref<const MatrixXd>& R,
                     const Eigen::Ref<const MatrixXd>& S, const Eigen::Ref<const MatrixXd>& P) {
  const MatrixXd PBS = P * B + S;
  const MatrixXd res = A.transpose() * P + P * A - PBS * R.ldlt().solve(PBS.transpose()) + Q;
  return res.norm();
}

CareSolution solve_care(const Eigen::Ref<const MatrixXd>& A, const Eigen::Ref<const MatrixXd>& B,
                        const Eigen::Ref<const MatrixXd>& Q, const Eigen::Ref<const MatrixXd>& R,
                        const Eigen::Ref<const MatrixXd>& S) {
  const Index m = A.rows(), k = B.cols();
  if (A.cols() != m || B.rows() != m || Q.rows() != m || Q.cols() != m || R.rows() != k || R.cols() != k ||
      S.rows() != m || S.cols() != k) {
    throw DimensionError("solve_care: inconsistent dimensions (A m x m, B m x k, Q m x m, R k x k, S m x k)");
  }
  Eigen::LLT<MatrixXd> llt(R);
  if (llt.info() != Eigen::Success || (R - R.transpose()).norm() > 1e-12 * (1 + R.norm())) {
    throw RiccatiError("solve_care: R must be symmetric positive definite");
  }
  const MatrixXd At = A - B * llt.solve(S.transpose());
  const MatrixXd Qt = Q - S * llt.solve(S.transpose());
  const MatrixXd G = B * llt.solve(B.transpose());

  MatrixXd H(2 * m, 2 * m);
  H << At, -G, -Qt, -At.transpose();
  const MatrixXd W = matrix_sign(H);

  MatrixXd lhs(2 * m, m), rhs(2 * m, m);
  lhs << W.topRightCorner(m, m), W.bottomRightCorner(m, m) + MatrixXd::Identity(m, m);
  rhs << -(W.topLeftCorner(m, m) + MatrixXd::Identity(m, m)), -W.bottomLeftCorner(m, m);
  Eigen::ColPivHouseholderQR<MatrixXd> qr(lhs);
  qr.setThreshold(1e-10);
  if (qr.rank() < m) {
    throw RiccatiError("solve_care: stable invariant subspace is not a graph over the state coordinates");
  }
  MatrixXd P = qr.solve(rhs);
  P = (P + P.transpose()) / 2;

  // Newton-Kleinman polish of the sign-function solution.
  const double tol = 1e-8 * (1 + Q.norm());
  for (int iter = 0; iter < 4; ++iter) {
    if (care_residual(A, B, Q, R, S, P) <= 1e-3 * tol) break;
    const MatrixXd Ak = At - G * P;
    if (!is_hurwitz(Ak)) break;
    P = solve_lyapunov(Ak.transpose(), Qt + P * G * P);
  }

  CareSolution sol;
  sol.P = P;
  sol.K = llt.solve(B.transpose() * P + S.transpose());
  const double residual = care_residual(A, B, Q, R, S, P);
  const double abscissa = spectral_abscissa(A - B * sol.K);
  if (!(abscissa < 0)) {
    std::ostringstream msg;
    msg << "solve_care: no stabilizing solution; closed loop A - B K has an eigenvalue with real part " << abscissa;
    throw RiccatiError(msg.str());
  }
  if (!(residual <= tol)) {
    std::ostringstream msg;
    msg << "solve_care: Riccati residual " << residual << " exceeds " << tol;
    throw RiccatiError(msg.str());
  }
  return sol;
}

}  // namespace qlqg
