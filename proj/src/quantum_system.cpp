#include "qlqg/quantum_system.hpp"

namespace qlqg {

CommutationSpec CommutationSpec::canonical(Index n) {
  if (n <= 0 || n % 2 != 0) {
    throw DimensionError("canonical commutation spec needs a positive even dimension, got " + std::to_string(n));
  }
  return {0, n / 2};
}

CommutationSpec CommutationSpec::degenerate(Index n_classical, Index n) {
  if (n_classical <= 0 || n_classical > n || (n - n_classical) % 2 != 0) {
    throw DimensionError("degenerate commutation spec needs 0 < n' <= n with n - n' even");
  }
  return {n_classical, (n - n_classical) / 2};
}

Mat<std::complex<double>> ItoConvention::F() const {
  using C = std::complex<double>;
  return Mat<C>::Identity(2 * pair_count, 2 * pair_count) + C(0, 1) * T_imag().cast<C>();
}

Eigen::MatrixXd ItoConvention::S() const { return Eigen::MatrixXd::Identity(2 * pair_count, 2 * pair_count); }

Eigen::MatrixXd ItoConvention::T_imag() const {
  if (pair_count == 0) return Eigen::MatrixXd(0, 0);
  return block_j(2 * pair_count);
}

}  // namespace qlqg
