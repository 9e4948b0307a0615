#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qlqg/interconnect.hpp"
#include "qlqg/matrix_equations.hpp"

namespace qlqg {

enum class ThetaMode { fixed, free };

// fixed: theta is the controller commutation matrix Theta_K (skew, invertible).
// free: theta is the starting guess Theta_K^0 for the free variable.
struct SynthesisMode {
  ThetaMode kind = ThetaMode::fixed;
  MatrixXd theta;

  static SynthesisMode fixed_theta(MatrixXd theta_K);
  static SynthesisMode free_theta(MatrixXd theta0);
};

struct SynthesisVariables {
  MatrixXd bA, bB, bC, X, Y, Q, N, M;

  MatrixXd bB_k(int k) const;  // k in {1, 2, 3}
};

// Block rows of the lifted matrix Z = V V^T.
enum class Block {
  I, A, BK1, BK2, BK3, C, X, Y, Nb, N, Theta,
  W1, W2, W3, W4, W5, W6, W7, W8, W9, W10, W11, W12, W13, W14
};

std::string block_name(Block b);

struct NamedResidual {
  std::string name;
  MatrixXd value;
};

struct LmiMargins {
  double eps_lmi = 0;
  double eps_tr = 0;
};

class LiftedProgram {
 public:
  LiftedProgram(const PlantD& plant, double gamma, const SynthesisMode& mode);

  ThetaMode mode() const { return mode_.kind; }
  const MatrixXd& theta() const { return mode_.theta; }
  Index n() const { return n_; }
  Index n_z() const { return plant_.n_z(); }
  Index block_count() const { return mode_.kind == ThetaMode::fixed ? 23 : 25; }
  Index z_dim() const { return block_count() * n_; }
  Index rank_bound() const { return n_; }
  double gamma() const { return gamma_; }
  const LmiMargins& margins() const { return margins_; }
  const PlantD& plant() const { return plant_; }
  const PlantD& redefined_plant() const { return redefined_; }
  Index lmi25_dim() const;
  Index lmi26_dim() const;

  bool has_block(Block b) const;
  Index block_row(Block b) const;
  MatrixXd block(const MatrixXd& Z, Block a, Block b) const;
  MatrixXd var(const MatrixXd& Z, Block a) const { return block(Z, a, Block::I); }

  // Anchor, symmetry, lifting definitions and the N-breve relation.
  std::vector<NamedResidual> definitional_residuals(const MatrixXd& Z) const;
  // The linearized commutation and output-coupling equalities.
  std::vector<NamedResidual> realizability_residuals(const MatrixXd& Z) const;

  MatrixXd lmi25(const MatrixXd& Z) const;
  MatrixXd lmi26(const MatrixXd& Z, const MatrixXd& Q) const;

  // Product variable (Z, Q, S25, S26).
  const VariableLayout& layout() const { return affine_->layout(); }
  const AffineConstraintSystem& affine() const { return *affine_; }
  VectorXd pack(const MatrixXd& Z, const MatrixXd& Q, const MatrixXd& S25, const MatrixXd& S26) const;

  // Embeds vars (with M = I, N = I - Y X) as V0 and returns Z0 = V0 V0^T.
  MatrixXd lift(const SynthesisVariables& vars) const;
  MatrixXd lift_factor(const SynthesisVariables& vars) const;

 private:
  SynthesisMode mode_;
  PlantD plant_;
  PlantD redefined_;
  Index n_ = 0;
  double gamma_ = 0;
  LmiMargins margins_;
  std::shared_ptr<const AffineConstraintSystem> affine_;
};

PlantD redefine_plant(const PlantD& plant);

// LMI blocks as functions of the change-of-variables quantities.
MatrixXd lmi25_matrix(const PlantD& redefined, const MatrixXd& bA, const MatrixXd& bB, const MatrixXd& bC,
                      const MatrixXd& X, const MatrixXd& Y);
MatrixXd lmi26_matrix(const PlantD& plant, const MatrixXd& X, const MatrixXd& Y, const MatrixXd& bC,
                      const MatrixXd& Q);

LmiMargins default_margins(const PlantD& plant, double gamma);

struct Phase1Options {
  int max_iter = 60000;
  std::vector<double> floors = {1e-2, 1e-3, 1e-4};  // relative to 1 + ||plant||_F
};

struct Phase1Result {
  bool feasible = false;
  SynthesisVariables vars;
  int iterations = 0;
  double lmi25_max_eig = 0;  // largest eigenvalue of L25 (should be <= -eps_lmi)
  double lmi26_min_eig = 0;  // smallest eigenvalue of L26 (should be >= eps_lmi)
  double trace_q = 0;
  double lower_bound = 0;    // full-information bound used for the early exit
  std::string message;
};

Phase1Result solve_lmi_phase1(const PlantD& plant, double gamma, const Phase1Options& opts = {});

// Forward change of variables for a given controller and (X, Y), M = I.
SynthesisVariables controller_to_variables(const PlantD& plant, const ControllerD& ctrl, const MatrixXd& X,
                                           const MatrixXd& Y);

// Symmetric (X, Y) such that the closed-loop Lyapunov certificate of a
// controller has identity off-diagonal block after a controller change of
// basis; returns the transformed controller too.
struct ControllerEmbedding {
  ControllerD controller;  // in the basis where M = I
  SynthesisVariables vars;
  MatrixXd basis;          // controller state transform used
};
ControllerEmbedding embed_controller(const PlantD& plant, const ControllerD& ctrl, double gamma);

SynthesisVariables initial_point_variables(const SynthesisVariables& vars);
MatrixXd initial_point(const LiftedProgram& program, const SynthesisVariables& vars);

struct SynthesisOptions {
  int max_iter = 5000;
  double tol = 1e-8;
  int restarts = 20;
  std::uint64_t seed = 0;
  double perturb = 1e-2;
  double prune = 0.0;            // zero |entries| of B_K2 below this; 0 disables
  double rank_threshold = 1e-6;  // sigma_{n+1} <= rank_threshold * sigma_1
  double certify_tol = 1e-6;     // relative to 1 + ||A_K||_F + ||B_K||_F^2
  double theta_zero_tol = 1e-9;
  int stall_window = 500;
  double stall_ratio = 0.99;     // restart when the gap fails to drop below ratio * old gap over a window
  bool general_nm = false;       // free M, N variant: not implemented
  Phase1Options phase1;
  // Skips the convex phase and lifts these variables instead.
  std::optional<SynthesisVariables> warm_start;
};

struct ProjectionTrace {
  std::vector<double> gap;  // one entry per iteration
  std::vector<int> restart_at;
};

enum class ProjectionStatus { converged, max_iterations };

struct ProjectionResult {
  MatrixXd Z;
  MatrixXd Q;
  ProjectionStatus status = ProjectionStatus::max_iterations;
  int iterations = 0;
  int restarts = 0;
  double equality_residual = 0;
  double cone_distance = 0;
  ProjectionTrace trace;
};

ProjectionResult alternating_projections(const LiftedProgram& program, const MatrixXd& Z0, const MatrixXd& Q0,
                                         const SynthesisOptions& opts);

struct RankError : std::runtime_error {
  RankError(const std::string& msg, std::vector<double> values)
      : std::runtime_error(msg), singular_values(std::move(values)) {}
  std::vector<double> singular_values;
};

ControllerD extract_controller(const MatrixXd& Z, const LiftedProgram& program, const SynthesisOptions& opts = {});

enum class SynthesisStatus { solved, phase1_infeasible, no_convergence };
std::string to_string(SynthesisStatus status);

struct Certificate {
  bool passed = false;
  bool stable = false;
  double Jinf = std::numeric_limits<double>::infinity();
  double r_ccr = 0;
  double r_out = 0;
  double tol = 0;
  std::string reason;
};

// Recomputes stability, the cost bound and realizability from scratch.
Certificate certify(const PlantD& plant, const ControllerD& ctrl, double gamma, double certify_tol);

struct SynthesisReport {
  SynthesisStatus status = SynthesisStatus::no_convergence;
  std::optional<ControllerD> controller;
  std::optional<double> Jinf;
  double r_ccr = 0;
  double r_out = 0;
  double affine_residual = 0;
  double lmi_margin = 0;
  int iterations = 0;
  int restarts = 0;
  std::uint64_t seed = 0;
  double gamma = 0;
  ThetaMode mode = ThetaMode::fixed;
  std::optional<MatrixXd> theta_K_out;
  std::vector<double> theta_spectrum;
  std::string message;
};

SynthesisReport synthesize(const PlantD& plant, double gamma, const SynthesisMode& mode,
                           const SynthesisOptions& opts = {});

struct BisectionStep {
  double gamma = 0;
  SynthesisStatus status = SynthesisStatus::no_convergence;
};

struct BisectionResult {
  SynthesisReport best;  // lowest-gamma solved report, or the last probe when none solved
  bool any_solved = false;
  bool heuristic = true;
  std::vector<BisectionStep> history;
};

BisectionResult bisect_gamma(const PlantD& plant, double gamma_lo, double gamma_hi, int steps,
                             const SynthesisMode& mode, const SynthesisOptions& opts = {});

}  // namespace qlqg
