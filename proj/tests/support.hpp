#pragma once

#include <random>
#include <string>

#include <Eigen/Dense>

#include "qlqg/io.hpp"

namespace testing {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using qlqg::Index;

inline std::string data_path(const std::string& name) { return std::string(QLQG_DATA_DIR) + "/" + name; }

inline qlqg::PlantD example_plant() { return *qlqg::load_system(data_path("plant.json")).plant; }
inline qlqg::ControllerD load_ctrl(const std::string& name) { return qlqg::load_controller(data_path(name)); }

inline MatrixXd gaussian(Index r, Index c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  MatrixXd M(r, c);
  for (Index j = 0; j < c; ++j) {
    for (Index i = 0; i < r; ++i) M(i, j) = normal(rng);
  }
  return M;
}

inline MatrixXd random_spd(Index n, std::mt19937_64& rng) {
  const MatrixXd G = gaussian(n, n, rng);
  return G * G.transpose() + 0.5 * MatrixXd::Identity(n, n);
}

// Stable by construction: shifted so the spectral abscissa is at most -0.1.
inline MatrixXd random_stable(Index n, std::mt19937_64& rng) {
  MatrixXd A = gaussian(n, n, rng);
  const double shift = A.eigenvalues().real().maxCoeff() + 0.1 + std::abs(gaussian(1, 1, rng)(0));
  return A - shift * MatrixXd::Identity(n, n);
}

inline MatrixXd canonical_j(Index n) {
  MatrixXd J = MatrixXd::Zero(n, n);
  for (Index k = 0; k + 1 < n; k += 2) {
    J(k, k + 1) = 1;
    J(k + 1, k) = -1;
  }
  return J;
}

// Realizable with respect to an invertible theta: the output coupling fixes
// B_K1 and A_K = theta H - S theta^{-1} / 2 with H symmetric cancels the
// noise term of the commutation condition.
inline qlqg::ControllerD random_realizable_controller(Index n, Index n_u, Index n_w2, Index n_y, const MatrixXd& theta,
                                                     std::mt19937_64& rng) {
  qlqg::ControllerD c;
  c.C_K = gaussian(n_u, n, rng);
  c.B_K1 = theta * c.C_K.transpose() * canonical_j(n_u);
  c.B_K2 = gaussian(n, n_w2, rng, 0.5);
  c.B_K3 = gaussian(n, n_y, rng);
  const MatrixXd S = c.B_K1 * canonical_j(n_u) * c.B_K1.transpose() +
                     c.B_K2 * canonical_j(n_w2) * c.B_K2.transpose() + c.B_K3 * canonical_j(n_y) * c.B_K3.transpose();
  const MatrixXd G = gaussian(n, n, rng);
  const MatrixXd H = 0.5 * (G + G.transpose());
  c.A_K = theta * H - 0.5 * S * theta.inverse();
  c.theta_K = theta;
  return c;
}

// Smallest edit that makes a controller realizable with respect to its own
// invertible theta: B_K1 from the output coupling, then the symmetric part of
// theta^{-1} (A_K - A_p) where A_p cancels the noise term.
inline qlqg::ControllerD make_realizable(qlqg::ControllerD c) {
  const MatrixXd& th = *c.theta_K;
  const MatrixXd th_inv = th.inverse();
  c.B_K1 = th * c.C_K.transpose() * canonical_j(c.C_K.rows());
  const MatrixXd S = c.B_K1 * canonical_j(c.B_K1.cols()) * c.B_K1.transpose() +
                     c.B_K2 * canonical_j(c.B_K2.cols()) * c.B_K2.transpose() +
                     c.B_K3 * canonical_j(c.B_K3.cols()) * c.B_K3.transpose();
  const MatrixXd A_p = -0.5 * S * th_inv;
  const MatrixXd G = th_inv * (c.A_K - A_p);
  c.A_K = th * (0.5 * (G + G.transpose())) + A_p;
  return c;
}

inline double max_abs_diff(const MatrixXd& a, const MatrixXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace testing
