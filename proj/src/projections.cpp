#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "qlqg/matrix_equations.hpp"

namespace qlqg {
namespace {

Eigen::SelfAdjointEigenSolver<MatrixXd> symmetric_eig(const Eigen::Ref<const MatrixXd>& X, const char* who) {
  if (X.rows() != X.cols()) throw DimensionError(std::string(who) + ": matrix must be square");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (X + X.transpose()));
  if (es.info() != Eigen::Success) throw NumericalError(std::string(who) + ": eigensolver failed");
  return es;
}

}  // namespace

MatrixXd project_psd(const Eigen::Ref<const MatrixXd>& X, double floor) {
  const auto es = symmetric_eig(X, "project_psd");
  const VectorXd w = es.eigenvalues().cwiseMax(floor);
  const MatrixXd& V = es.eigenvectors();
  MatrixXd out = V * w.asDiagonal() * V.transpose();
  return (out + out.transpose()) / 2;
}

MatrixXd project_psd_rank(const Eigen::Ref<const MatrixXd>& X, Index r) {
  const Index n = X.rows();
  if (r <= 0 || r > n) {
    throw std::out_of_range("project_psd_rank: rank " + std::to_string(r) + " outside [1, " + std::to_string(n) + "]");
  }
  const auto es = symmetric_eig(X, "project_psd_rank");
  // Eigenvalues ascend; keep the top r that are positive.
  const VectorXd& w = es.eigenvalues();
  const MatrixXd& V = es.eigenvectors();
  Index keep = 0;
  while (keep < r && w(n - 1 - keep) > 0) ++keep;
  if (keep == 0) return MatrixXd::Zero(n, n);
  const MatrixXd U = V.rightCols(keep) * w.tail(keep).cwiseSqrt().asDiagonal();
  MatrixXd out = U * U.transpose();
  return (out + out.transpose()) / 2;
}

VectorXd svec(const Eigen::Ref<const MatrixXd>& X) {
  const Index n = X.rows();
  VectorXd v(svec_size(n));
  Index k = 0;
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i <= j; ++i) {
      v(k++) = i == j ? X(i, i) : M_SQRT2 * 0.5 * (X(i, j) + X(j, i));
    }
  }
  return v;
}

MatrixXd smat(const Eigen::Ref<const VectorXd>& v, Index n) {
  if (v.size() != svec_size(n)) throw DimensionError("smat: vector length does not match n(n+1)/2");
  MatrixXd X(n, n);
  Index k = 0;
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i <= j; ++i) {
      if (i == j) {
        X(i, i) = v(k++);
      } else {
        X(i, j) = X(j, i) = v(k++) / M_SQRT2;
      }
    }
  }
  return X;
}

Index VariableLayout::add(const std::string& name, Index rows, Index cols) {
  for (const auto& b : blocks_) {
    if (b.name == name) throw std::invalid_argument("VariableLayout: duplicate block " + name);
  }
  Block b{name, rows, cols, false, dim_};
  dim_ += b.size();
  blocks_.push_back(b);
  return b.offset;
}

Index VariableLayout::add_symmetric(const std::string& name, Index n) {
  for (const auto& b : blocks_) {
    if (b.name == name) throw std::invalid_argument("VariableLayout: duplicate block " + name);
  }
  Block b{name, n, n, true, dim_};
  dim_ += b.size();
  blocks_.push_back(b);
  return b.offset;
}

const VariableLayout::Block& VariableLayout::block(const std::string& name) const {
  for (const auto& b : blocks_) {
    if (b.name == name) return b;
  }
  throw std::out_of_range("VariableLayout: unknown block " + name);
}

MatrixXd VariableLayout::get(const Eigen::Ref<const VectorXd>& x, const std::string& name) const {
  if (x.size() != dim_) throw DimensionError("VariableLayout: vector does not match layout dimension");
  const Block& b = block(name);
  const auto seg = x.segment(b.offset, b.size());
  if (b.symmetric) return smat(seg, b.rows);
  return Eigen::Map<const MatrixXd>(VectorXd(seg).data(), b.rows, b.cols);
}

void VariableLayout::set(Eigen::Ref<VectorXd> x, const std::string& name,
                         const Eigen::Ref<const MatrixXd>& value) const {
  const Block& b = block(name);
  if (value.rows() != b.rows || value.cols() != b.cols) {
    throw DimensionError("VariableLayout: wrong shape for block " + name);
  }
  if (b.symmetric) {
    x.segment(b.offset, b.size()) = svec(value);
  } else {
    x.segment(b.offset, b.size()) = Eigen::Map<const VectorXd>(MatrixXd(value).data(), b.size());
  }
}

}  // namespace qlqg
