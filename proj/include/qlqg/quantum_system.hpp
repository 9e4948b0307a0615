#pragma once

#include <algorithm>
#include <complex>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "qlqg/errors.hpp"

namespace qlqg {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Eigen::Index;

// Commutation structure of a vector of quadratures: `classical` commuting
// variables first, followed by `pairs` conjugate (q, p) pairs.
struct CommutationSpec {
  Index classical = 0;
  Index pairs = 0;

  static CommutationSpec canonical(Index n);
  static CommutationSpec degenerate(Index n_classical, Index n);

  Index dim() const { return classical + 2 * pairs; }
  bool is_canonical() const { return classical == 0; }
};

// Canonical Ito convention dw dw^T = F dt with F = I + i diag(J).
// T_w is purely imaginary and is carried by its real coefficient matrix.
struct ItoConvention {
  Index pair_count = 0;

  Mat<std::complex<double>> F() const;
  Eigen::MatrixXd S() const;
  Eigen::MatrixXd T_imag() const;
};

// diag(J, ..., J) of size m x m. m must be even and positive.
template <typename Scalar = double>
Mat<Scalar> block_j(Index m) {
  if (m <= 0 || m % 2 != 0) {
    throw DimensionError("block_j: size must be a positive even number, got " + std::to_string(m));
  }
  Mat<Scalar> out = Mat<Scalar>::Zero(m, m);
  for (Index k = 0; k < m; k += 2) {
    out(k, k + 1) = Scalar(1);
    out(k + 1, k) = Scalar(-1);
  }
  return out;
}

template <typename Scalar = double>
Mat<Scalar> theta_matrix(const CommutationSpec& spec) {
  if (spec.classical < 0 || spec.pairs < 0) {
    throw DimensionError("theta_matrix: negative block count");
  }
  const Index n = spec.dim();
  Mat<Scalar> out = Mat<Scalar>::Zero(n, n);
  if (spec.pairs > 0) {
    out.bottomRightCorner(2 * spec.pairs, 2 * spec.pairs) = block_j<Scalar>(2 * spec.pairs);
  }
  return out;
}

template <typename Scalar>
struct QuantumLinearSystem {
  Mat<Scalar> A, B, C, D;

  Index n() const { return A.rows(); }
  Index n_w() const { return B.cols(); }
  Index n_y() const { return C.rows(); }

  void validate() const {
    const Index n = A.rows();
    if (A.cols() != n) throw DimensionError("QuantumLinearSystem: A must be square");
    if (B.rows() != n) throw DimensionError("QuantumLinearSystem: B must have " + std::to_string(n) + " rows");
    if (C.cols() != n) throw DimensionError("QuantumLinearSystem: C must have " + std::to_string(n) + " columns");
    if (D.rows() != C.rows() || D.cols() != B.cols()) {
      throw DimensionError("QuantumLinearSystem: D must be n_y x n_w");
    }
    if (B.cols() % 2 != 0) throw DimensionError("QuantumLinearSystem: n_w must be even");
    if (C.rows() % 2 != 0) throw DimensionError("QuantumLinearSystem: n_y must be even");
    if (C.rows() > B.cols()) throw DimensionError("QuantumLinearSystem: n_y must not exceed n_w");
  }
};

struct RealizabilityReport {
  double r_ccr = 0;
  double r_out = 0;
  double r_dform = 0;
  double tol = 0;
  bool passed = false;
};

// 1e-8 * (1 + ||A||_F + ||B||_F^2)
template <typename Scalar>
double default_realizability_tol(const QuantumLinearSystem<Scalar>& sys) {
  const double a = static_cast<double>(sys.A.norm());
  const double b = static_cast<double>(sys.B.norm());
  return 1e-8 * (1.0 + a + b * b);
}

// Residuals of the physical realizability conditions, with the commutation
// condition in its real form A Theta + Theta A^T + B diag(J) B^T = 0.
template <typename Scalar>
RealizabilityReport realizability_residuals(const QuantumLinearSystem<Scalar>& sys,
                                            const Mat<Scalar>& theta,
                                            std::optional<double> tol = std::nullopt) {
  sys.validate();
  const Index n = sys.n(), n_w = sys.n_w(), n_y = sys.n_y();
  if (theta.rows() != n || theta.cols() != n) {
    throw DimensionError("realizability_residuals: Theta must be " + std::to_string(n) + "x" + std::to_string(n));
  }
  RealizabilityReport report;
  const Mat<Scalar> ccr = sys.A * theta + theta * sys.A.transpose() +
                          sys.B * block_j<Scalar>(n_w) * sys.B.transpose();
  report.r_ccr = static_cast<double>(ccr.norm());
  if (n_y > 0) {
    const Mat<Scalar> out = sys.B.leftCols(n_y) - theta * sys.C.transpose() * block_j<Scalar>(n_y);
    report.r_out = static_cast<double>(out.norm());
  }
  Mat<Scalar> d_form = Mat<Scalar>::Zero(n_y, n_w);
  d_form.leftCols(n_y).setIdentity();
  report.r_dform = static_cast<double>((sys.D - d_form).norm());
  report.tol = tol ? *tol : default_realizability_tol(sys);
  report.passed = std::max({report.r_ccr, report.r_out, report.r_dform}) <= report.tol;
  return report;
}

template <typename Scalar>
RealizabilityReport realizability_residuals(const QuantumLinearSystem<Scalar>& sys,
                                            const CommutationSpec& spec,
                                            std::optional<double> tol = std::nullopt) {
  if (spec.dim() != sys.n()) {
    throw DimensionError("realizability_residuals: commutation spec dimension does not match A");
  }
  return realizability_residuals(sys, theta_matrix<Scalar>(spec), tol);
}

// R = (-Theta A + A^T Theta) / 4 for canonical Theta.
template <typename Scalar>
Mat<Scalar> hamiltonian_matrix(const Mat<Scalar>& A, const CommutationSpec& spec) {
  if (!spec.is_canonical()) throw std::invalid_argument("hamiltonian_matrix: canonical Theta required");
  if (A.rows() != spec.dim() || A.cols() != spec.dim()) {
    throw DimensionError("hamiltonian_matrix: A must match the commutation spec");
  }
  const Mat<Scalar> theta = theta_matrix<Scalar>(spec);
  const Mat<Scalar> R = (-theta * A + A.transpose() * theta) / Scalar(4);
  return (R + R.transpose()) / Scalar(2);
}

// Gamma = P diag(M, ..., M), M = [[1, i], [1, -i]] / 2, P the interleave
// permutation (a1, a2, ..., a2N) -> (a1, a3, ..., a2, a4, ...).
template <typename Scalar>
Mat<std::complex<Scalar>> gamma_matrix(Index pairs) {
  using C = std::complex<Scalar>;
  const Index m = 2 * pairs;
  Mat<C> diag_m = Mat<C>::Zero(m, m);
  for (Index k = 0; k < pairs; ++k) {
    diag_m(2 * k, 2 * k) = C(0.5, 0);
    diag_m(2 * k, 2 * k + 1) = C(0, 0.5);
    diag_m(2 * k + 1, 2 * k) = C(0.5, 0);
    diag_m(2 * k + 1, 2 * k + 1) = C(0, -0.5);
  }
  Mat<C> perm = Mat<C>::Zero(m, m);
  for (Index k = 0; k < pairs; ++k) {
    perm(k, 2 * k) = C(1, 0);
    perm(pairs + k, 2 * k + 1) = C(1, 0);
  }
  return perm * diag_m;
}

// Lambda = -i/2 [0 I] (Gamma^-1)^T B^T Theta, an N_w x n complex matrix.
template <typename Scalar>
Mat<std::complex<Scalar>> coupling_matrix(const Mat<Scalar>& B, const CommutationSpec& spec) {
  using C = std::complex<Scalar>;
  if (!spec.is_canonical()) throw std::invalid_argument("coupling_matrix: canonical Theta required");
  if (B.rows() != spec.dim()) throw DimensionError("coupling_matrix: B must have n rows");
  if (B.cols() % 2 != 0) throw DimensionError("coupling_matrix: n_w must be even");
  const Index pairs = B.cols() / 2;
  const Mat<C> gamma_inv_t = gamma_matrix<Scalar>(pairs).inverse().transpose();
  const Mat<C> rhs = gamma_inv_t * B.transpose().template cast<C>() * theta_matrix<Scalar>(spec).template cast<C>();
  return C(0, -0.5) * rhs.bottomRows(pairs);
}

}  // namespace qlqg
