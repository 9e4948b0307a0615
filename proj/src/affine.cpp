#include <sstream>

#include <Eigen/SVD>

#include "qlqg/matrix_equations.hpp"

namespace qlqg {

AffineConstraintSystem::AffineConstraintSystem(VariableLayout layout, MatrixXd E, VectorXd f,
                                               std::vector<Halfspace> halfspaces, double rank_tol)
    : layout_(std::move(layout)), E_(std::move(E)), f_(std::move(f)), halfspaces_(std::move(halfspaces)) {
  const Index d = layout_.dim();
  if (E_.cols() != d) throw DimensionError("AffineConstraintSystem: E must have one column per variable");
  if (f_.size() != E_.rows()) throw DimensionError("AffineConstraintSystem: f must have one entry per row of E");
  if (!E_.allFinite() || !f_.allFinite()) throw std::invalid_argument("AffineConstraintSystem: non-finite data");
  for (const auto& h : halfspaces_) {
    if (h.a.size() != d) throw DimensionError("AffineConstraintSystem: halfspace normal has the wrong length");
  }

  if (E_.rows() > 0) {
    Eigen::BDCSVD<MatrixXd> svd(E_, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const VectorXd& s = svd.singularValues();
    const double cutoff = rank_tol * (s.size() > 0 ? s(0) : 0.0);
    Index r = 0;
    while (r < s.size() && s(r) > cutoff && s(r) > 0) ++r;
    // Minimum-norm handling of rank deficiency: only the numerically
    // independent directions are kept.
    basis_ = svd.matrixV().leftCols(r).transpose();
    target_ = s.head(r).cwiseInverse().asDiagonal() * (svd.matrixU().leftCols(r).transpose() * f_);
  } else {
    basis_.resize(0, d);
    target_.resize(0);
  }
  const VectorXd x0 = basis_.transpose() * target_;
  const double inconsistency = (E_ * x0 - f_).norm();
  if (inconsistency > 1e-8 * (1 + f_.norm())) {
    std::ostringstream msg;
    msg << "infeasible-affine: right-hand side lies outside the range of E (residual " << inconsistency << ")";
    throw InfeasibleAffineError(msg.str());
  }
  for (const auto& h : halfspaces_) half_dirs_.push_back(h.a - basis_.transpose() * (basis_ * h.a));
}

AffineConstraintSystem AffineConstraintSystem::from_affine_map(
    VariableLayout layout, const std::function<VectorXd(const VectorXd&)>& residual,
    std::vector<Halfspace> halfspaces, double rank_tol) {
  const Index d = layout.dim();
  VectorXd x = VectorXd::Zero(d);
  const VectorXd r0 = residual(x);
  MatrixXd E(r0.size(), d);
  for (Index k = 0; k < d; ++k) {
    x(k) = 1.0;
    E.col(k) = residual(x) - r0;
    x(k) = 0.0;
  }
  return AffineConstraintSystem(std::move(layout), std::move(E), -r0, std::move(halfspaces), rank_tol);
}

VectorXd AffineConstraintSystem::project_equalities(const Eigen::Ref<const VectorXd>& x) const {
  if (basis_.rows() == 0) return x;
  return x - basis_.transpose() * (basis_ * x - target_);
}

VectorXd AffineConstraintSystem::project(const Eigen::Ref<const VectorXd>& x) const {
  if (x.size() != layout_.dim()) throw DimensionError("project_affine: point does not match the layout");
  VectorXd y = project_equalities(x);
  // A violated halfspace is handled by projecting, within the affine set,
  // onto its bounding hyperplane.
  for (std::size_t k = 0; k < halfspaces_.size(); ++k) {
    const double excess = halfspaces_[k].a.dot(y) - halfspaces_[k].b;
    if (excess <= 0) continue;
    const double denom = half_dirs_[k].squaredNorm();
    if (denom <= 1e-24 * (1 + halfspaces_[k].a.squaredNorm())) {
      throw InfeasibleAffineError("infeasible-affine: halfspace cannot be met on the affine set");
    }
    y -= (excess / denom) * half_dirs_[k];
  }
  return y;
}

double AffineConstraintSystem::equality_residual(const Eigen::Ref<const VectorXd>& x) const {
  if (E_.rows() == 0) return 0.0;
  return (E_ * x - f_).norm();
}

VectorXd project_affine(const AffineConstraintSystem& sys, const Eigen::Ref<const VectorXd>& x) {
  return sys.project(x);
}

}  // namespace qlqg
