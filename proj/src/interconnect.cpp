#include <Eigen/SVD>

#include "qlqg/interconnect.hpp"
#include "qlqg/matrix_equations.hpp"

namespace qlqg {

CostResult lqg_cost(const ClosedLoop<double>& cl) {
  CostResult out;
  if (cl.Acl.rows() == 0 || !is_hurwitz(cl.Acl)) return out;
  out.P = solve_lyapunov(cl.Acl, cl.Bcl * cl.Bcl.transpose());
  out.Jinf = (cl.Ccl * out.P * cl.Ccl.transpose()).trace();
  out.stable = true;
  return out;
}

double condition_number(const Eigen::Ref<const Eigen::MatrixXd>& S) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(S);
  const auto& s = svd.singularValues();
  if (s.size() == 0) return 1.0;
  return s(s.size() - 1) > 0 ? s(0) / s(s.size() - 1) : std::numeric_limits<double>::infinity();
}

}  // namespace qlqg
