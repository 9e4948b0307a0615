#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qlqg/errors.hpp"

namespace qlqg {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

bool is_hurwitz(const Eigen::Ref<const MatrixXd>& A, double margin = 0.0);

// Largest real part over the spectrum of A.
double spectral_abscissa(const Eigen::Ref<const MatrixXd>& A);

// Solves A P + P A^T + Q = 0 for Hurwitz A.
MatrixXd solve_lyapunov(const Eigen::Ref<const MatrixXd>& A, const Eigen::Ref<const MatrixXd>& Q);

struct CareSolution {
  MatrixXd P;
  MatrixXd K;
};

// Stabilizing solution of A^T P + P A - (P B + S) R^-1 (P B + S)^T + Q = 0,
// K = R^-1 (B^T P + S^T).
CareSolution solve_care(const Eigen::Ref<const MatrixXd>& A, const Eigen::Ref<const MatrixXd>& B,
                        const Eigen::Ref<const MatrixXd>& Q, const Eigen::Ref<const MatrixXd>& R,
                        const Eigen::Ref<const MatrixXd>& S);

double care_residual(const Eigen::Ref<const MatrixXd>& A, const Eigen::Ref<const MatrixXd>& B,
                     const Eigen::Ref<const MatrixXd>& Q, const Eigen::Ref<const MatrixXd>& R,
                     const Eigen::Ref<const MatrixXd>& S, const Eigen::Ref<const MatrixXd>& P);

MatrixXd project_psd(const Eigen::Ref<const MatrixXd>& X, double floor = 0.0);
MatrixXd project_psd_rank(const Eigen::Ref<const MatrixXd>& X, Index r);

// Symmetric-matrix vectorization with sqrt(2) weights off the diagonal so that
// the Euclidean norm of svec(X) is the Frobenius norm of X.
VectorXd svec(const Eigen::Ref<const MatrixXd>& X);
MatrixXd smat(const Eigen::Ref<const VectorXd>& v, Index n);
inline Index svec_size(Index n) { return n * (n + 1) / 2; }

// Named blocks of a flattened variable vector. Symmetric blocks are stored
// with svec, general blocks column-major.
class VariableLayout {
 public:
  struct Block {
    std::string name;
    Index rows = 0;
    Index cols = 0;
    bool symmetric = false;
    Index offset = 0;
    Index size() const { return symmetric ? svec_size(rows) : rows * cols; }
  };

  Index add(const std::string& name, Index rows, Index cols);
  Index add_symmetric(const std::string& name, Index n);

  Index dim() const { return dim_; }
  const Block& block(const std::string& name) const;
  const std::vector<Block>& blocks() const { return blocks_; }

  MatrixXd get(const Eigen::Ref<const VectorXd>& x, const std::string& name) const;
  void set(Eigen::Ref<VectorXd> x, const std::string& name, const Eigen::Ref<const MatrixXd>& value) const;

 private:
  std::vector<Block> blocks_;
  Index dim_ = 0;
};

struct Halfspace {
  VectorXd a;
  double b = 0;  // a^T x <= b
};

// {x : E x = f} with optional halfspaces, factorized once at construction.
class AffineConstraintSystem {
 public:
  AffineConstraintSystem(VariableLayout layout, MatrixXd E, VectorXd f, std::vector<Halfspace> halfspaces = {},
                         double rank_tol = 1e-10);

  // Builds E and f by probing a map that is affine in x: residual(x) = E x - f.
  static AffineConstraintSystem from_affine_map(VariableLayout layout,
                                                const std::function<VectorXd(const VectorXd&)>& residual,
                                                std::vector<Halfspace> halfspaces = {}, double rank_tol = 1e-10);

  const VariableLayout& layout() const { return layout_; }
  const MatrixXd& E() const { return E_; }
  const VectorXd& f() const { return f_; }
  const std::vector<Halfspace>& halfspaces() const { return halfspaces_; }
  Index rank() const { return basis_.rows(); }

  VectorXd project(const Eigen::Ref<const VectorXd>& x) const;
  double equality_residual(const Eigen::Ref<const VectorXd>& x) const;

 private:
  VectorXd project_equalities(const Eigen::Ref<const VectorXd>& x) const;

  VariableLayout layout_;
  MatrixXd E_;
  VectorXd f_;
  std::vector<Halfspace> halfspaces_;
  MatrixXd basis_;     // orthonormal rows spanning the row space of E
  VectorXd target_;    // basis_ x = target_ on the affine set
  std::vector<VectorXd> half_dirs_;  // halfspace normals restricted to the null space of E
};

VectorXd project_affine(const AffineConstraintSystem& sys, const Eigen::Ref<const VectorXd>& x);

struct SkewFactorization {
  MatrixXd S;
  MatrixXd Z_can;
  Index kernel_dim = 0;
  std::vector<double> lambda_spectrum;  // descending, one entry per J block
};

// Theta = S Z_can S^T with Z_can = diag(0, J, ..., J).
SkewFactorization skew_canonical_factor(const Eigen::Ref<const MatrixXd>& Theta, double tol = 1e-9);

}  // namespace qlqg
