#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qlqg/errors.hpp"
#include "qlqg/quantum_system.hpp"

namespace qlqg {

template <typename Scalar>
struct Plant {
  Mat<Scalar> A, B, B_w, C, D_w, C_z, D_z;
  std::vector<bool> classical_outputs;  // per measured channel; empty means all quantum

  Index n() const { return A.rows(); }
  Index n_u() const { return B.cols(); }
  Index n_w() const { return B_w.cols(); }
  Index n_y() const { return C.rows(); }
  Index n_z() const { return C_z.rows(); }

  void validate() const {
    const Index n = A.rows();
    auto check = [](bool ok, const std::string& what) {
      if (!ok) throw DimensionError("Plant: " + what);
    };
    check(A.cols() == n, "A must be square");
    check(B.rows() == n, "B must have n rows");
    check(B_w.rows() == n, "B_w must have n rows");
    check(C.cols() == n, "C must have n columns");
    check(D_w.rows() == C.rows() && D_w.cols() == B_w.cols(), "D_w must be n_y x n_w");
    check(C_z.cols() == n, "C_z must have n columns");
    check(D_z.rows() == C_z.rows() && D_z.cols() == B.cols(), "D_z must be n_z x n_u");
    check(classical_outputs.empty() || static_cast<Index>(classical_outputs.size()) == C.rows(),
          "classical_outputs must have one flag per output");
  }

  // Frobenius norm of all plant data together.
  double norm() const {
    const double s = static_cast<double>(A.squaredNorm() + B.squaredNorm() + B_w.squaredNorm() + C.squaredNorm() +
                                         D_w.squaredNorm() + C_z.squaredNorm() + D_z.squaredNorm());
    return std::sqrt(s);
  }
};

template <typename Scalar>
struct CoherentController {
  Mat<Scalar> A_K, B_K1, B_K2, B_K3, C_K;
  std::optional<Mat<Scalar>> theta_K;  // absent for classical controllers

  Index n() const { return A_K.rows(); }

  Mat<Scalar> B_K() const {
    Mat<Scalar> out(A_K.rows(), B_K1.cols() + B_K2.cols() + B_K3.cols());
    out << B_K1, B_K2, B_K3;
    return out;
  }

  void validate() const {
    const Index n = A_K.rows();
    auto check = [](bool ok, const std::string& what) {
      if (!ok) throw DimensionError("CoherentController: " + what);
    };
    check(A_K.cols() == n, "A_K must be square");
    check(B_K1.rows() == n, "B_K1 must have n rows");
    check(B_K2.rows() == n, "B_K2 must have n rows");
    check(B_K3.rows() == n, "B_K3 must have n rows");
    check(C_K.cols() == n, "C_K must have n columns");
    if (theta_K) {
      check(theta_K->rows() == n && theta_K->cols() == n, "theta_K must be n x n");
      if (static_cast<double>((*theta_K + theta_K->transpose()).norm()) > 1e-12) {
        throw std::invalid_argument("CoherentController: theta_K is not skew-symmetric");
      }
    }
  }

  // The controller as a quantum system driven by [w_K1; w_K2; y].
  QuantumLinearSystem<Scalar> as_quantum_system() const {
    QuantumLinearSystem<Scalar> sys;
    sys.A = A_K;
    sys.B = B_K();
    sys.C = C_K;
    sys.D = Mat<Scalar>::Zero(C_K.rows(), sys.B.cols());
    sys.D.leftCols(std::min(C_K.rows(), sys.B.cols())).setIdentity();
    return sys;
  }
};

template <typename Scalar>
struct ClosedLoop {
  Mat<Scalar> Acl, Bcl, Ccl;
};

struct CostResult {
  double Jinf = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd P;
  bool stable = false;
};

template <typename Scalar>
ClosedLoop<Scalar> close_loop(const Plant<Scalar>& plant, const CoherentController<Scalar>& ctrl) {
  plant.validate();
  ctrl.validate();
  const Index n = plant.n(), nk = ctrl.n();
  if (ctrl.C_K.rows() != plant.n_u()) {
    throw DimensionError("close_loop: C_K has " + std::to_string(ctrl.C_K.rows()) + " rows, plant has n_u = " +
                         std::to_string(plant.n_u()));
  }
  if (ctrl.B_K3.cols() != plant.n_y()) {
    throw DimensionError("close_loop: B_K3 has " + std::to_string(ctrl.B_K3.cols()) + " columns, plant has n_y = " +
                         std::to_string(plant.n_y()));
  }
  if (ctrl.B_K1.cols() != plant.n_u()) {
    throw DimensionError("close_loop: B_K1 must have n_u columns (w_K1 enters the plant through B)");
  }
  const Index n1 = ctrl.B_K1.cols(), n2 = ctrl.B_K2.cols(), nw = plant.n_w();
  ClosedLoop<Scalar> cl;
  cl.Acl.resize(n + nk, n + nk);
  cl.Acl << plant.A, plant.B * ctrl.C_K, ctrl.B_K3 * plant.C, ctrl.A_K;
  cl.Bcl = Mat<Scalar>::Zero(n + nk, nw + n1 + n2);
  cl.Bcl.topLeftCorner(n, nw) = plant.B_w;
  cl.Bcl.block(0, nw, n, n1) = plant.B;
  cl.Bcl.bottomLeftCorner(nk, nw) = ctrl.B_K3 * plant.D_w;
  cl.Bcl.block(n, nw, nk, n1) = ctrl.B_K1;
  cl.Bcl.block(n, nw + n1, nk, n2) = ctrl.B_K2;
  cl.Ccl.resize(plant.n_z(), n + nk);
  cl.Ccl << plant.C_z, plant.D_z * ctrl.C_K;
  return cl;
}

// Loop in which the controller output is a classical signal: plant
// dx = A x dt + B u dt + B_w dw, dy = C x dt + D_w dw, u = C_K xi,
// dxi = A_K xi dt + B_K dy.
template <typename Scalar>
ClosedLoop<Scalar> close_loop_signal(const Plant<Scalar>& plant, const Mat<Scalar>& A_K, const Mat<Scalar>& B_K,
                                     const Mat<Scalar>& C_K) {
  plant.validate();
  const Index n = plant.n(), nk = A_K.rows();
  if (B_K.rows() != nk || B_K.cols() != plant.n_y() || C_K.rows() != plant.n_u() || C_K.cols() != nk) {
    throw DimensionError("close_loop_signal: controller blocks do not match the plant");
  }
  ClosedLoop<Scalar> cl;
  cl.Acl.resize(n + nk, n + nk);
  cl.Acl << plant.A, plant.B * C_K, B_K * plant.C, A_K;
  cl.Bcl.resize(n + nk, plant.n_w());
  cl.Bcl << plant.B_w, B_K * plant.D_w;
  cl.Ccl.resize(plant.n_z(), n + nk);
  cl.Ccl << plant.C_z, plant.D_z * C_K;
  return cl;
}

CostResult lqg_cost(const ClosedLoop<double>& cl);

template <typename Scalar>
CoherentController<Scalar> similarity_transform(const CoherentController<Scalar>& ctrl, const Mat<Scalar>& S) {
  ctrl.validate();
  if (S.rows() != ctrl.n() || S.cols() != ctrl.n()) {
    throw DimensionError("similarity_transform: S must be n x n");
  }
  Eigen::FullPivLU<Mat<Scalar>> lu(S);
  if (!lu.isInvertible()) throw std::invalid_argument("similarity_transform: S is singular");
  const Mat<Scalar> S_inv = lu.inverse();
  CoherentController<Scalar> out;
  out.A_K = S_inv * ctrl.A_K * S;
  out.B_K1 = S_inv * ctrl.B_K1;
  out.B_K2 = S_inv * ctrl.B_K2;
  out.B_K3 = S_inv * ctrl.B_K3;
  out.C_K = ctrl.C_K * S;
  if (ctrl.theta_K) {
    Mat<Scalar> th = S_inv * *ctrl.theta_K * S_inv.transpose();
    out.theta_K = (th - th.transpose()) / Scalar(2);
  }
  return out;
}

// 2-norm condition number of S.
double condition_number(const Eigen::Ref<const Eigen::MatrixXd>& S);

using PlantD = Plant<double>;
using ControllerD = CoherentController<double>;
using ClosedLoopD = ClosedLoop<double>;

}  // namespace qlqg
