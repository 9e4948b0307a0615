#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "qlqg/synthesis.hpp"

namespace qlqg {
namespace {

MatrixXd sym(const MatrixXd& X) { return 0.5 * (X + X.transpose()); }

void check_regime(const PlantD& plant) {
  plant.validate();
  const Index n = plant.n();
  if (plant.n_u() != n || plant.n_y() != n) {
    std::ostringstream msg;
    msg << "synthesis requires n_u = n_y = n (got n = " << n << ", n_u = " << plant.n_u() << ", n_y = "
        << plant.n_y() << ")";
    throw DimensionError(msg.str());
  }
  if (n % 2 != 0) throw DimensionError("synthesis requires an even plant order");
}

const Block kWBlocks[14] = {Block::W1, Block::W2,  Block::W3,  Block::W4,  Block::W5,  Block::W6,  Block::W7,
                            Block::W8, Block::W9,  Block::W10, Block::W11, Block::W12, Block::W13, Block::W14};

}  // namespace

SynthesisMode SynthesisMode::fixed_theta(MatrixXd theta_K) { return {ThetaMode::fixed, std::move(theta_K)}; }
SynthesisMode SynthesisMode::free_theta(MatrixXd theta0) { return {ThetaMode::free, std::move(theta0)}; }

MatrixXd SynthesisVariables::bB_k(int k) const {
  const Index n = bA.rows();
  if (k < 1 || k > 3) throw std::out_of_range("bB_k: index must be 1, 2 or 3");
  return bB.middleCols((k - 1) * n, n);
}

std::string block_name(Block b) {
  static const char* names[] = {"I",  "A",  "BK1", "BK2", "BK3", "C",   "X",   "Y",   "Nb",
                                "N",  "Theta", "W1", "W2",  "W3",  "W4",  "W5",  "W6",  "W7",
                                "W8", "W9", "W10", "W11", "W12", "W13", "W14"};
  return names[static_cast<int>(b)];
}

PlantD redefine_plant(const PlantD& plant) {
  check_regime(plant);
  const Index n = plant.n(), n_w = plant.n_w();
  PlantD out = plant;
  out.B_w = MatrixXd::Zero(n, n_w + 2 * n);
  out.B_w.leftCols(n_w) = plant.B_w;
  out.B_w.middleCols(n_w, n) = plant.B;
  out.C = MatrixXd::Zero(3 * n, n);
  out.C.bottomRows(n) = plant.C;
  out.D_w = MatrixXd::Zero(3 * n, n_w + 2 * n);
  out.D_w.block(0, n_w, n, n).setIdentity();
  out.D_w.block(n, n_w + n, n, n).setIdentity();
  out.D_w.block(2 * n, 0, n, n_w) = plant.D_w;
  out.classical_outputs.clear();
  return out;
}

MatrixXd lmi25_matrix(const PlantD& rp, const MatrixXd& bA, const MatrixXd& bB, const MatrixXd& bC,
                      const MatrixXd& X, const MatrixXd& Y) {
  const Index n = rp.n(), m = rp.n_w();
  const MatrixXd BC = rp.B * bC;
  const MatrixXd BCp = bB * rp.C;
  MatrixXd L(2 * n + m, 2 * n + m);
  L.topLeftCorner(n, n) = rp.A * X + X * rp.A.transpose() + BC + BC.transpose();
  L.block(0, n, n, n) = bA.transpose() + rp.A;
  L.block(n, 0, n, n) = bA + rp.A.transpose();
  L.block(n, n, n, n) = rp.A.transpose() * Y + Y * rp.A + BCp + BCp.transpose();
  const MatrixXd top = rp.B_w;
  const MatrixXd mid = Y * rp.B_w + bB * rp.D_w;
  L.block(0, 2 * n, n, m) = top;
  L.block(n, 2 * n, n, m) = mid;
  L.block(2 * n, 0, m, n) = top.transpose();
  L.block(2 * n, n, m, n) = mid.transpose();
  L.bottomRightCorner(m, m) = -MatrixXd::Identity(m, m);
  return L;
}

MatrixXd lmi26_matrix(const PlantD& plant, const MatrixXd& X, const MatrixXd& Y, const MatrixXd& bC,
                      const MatrixXd& Q) {
  const Index n = plant.n(), nz = plant.n_z();
  const MatrixXd F = plant.C_z * X + plant.D_z * bC;
  MatrixXd L(2 * n + nz, 2 * n + nz);
  L << X, MatrixXd::Identity(n, n), F.transpose(), MatrixXd::Identity(n, n), Y, plant.C_z.transpose(), F, plant.C_z,
      Q;
  return L;
}

LmiMargins default_margins(const PlantD& plant, double gamma) {
  return {1e-6 * (1 + plant.norm()), 1e-6 * gamma};
}

LiftedProgram::LiftedProgram(const PlantD& plant, double gamma, const SynthesisMode& mode)
    : mode_(mode), plant_(plant), redefined_(redefine_plant(plant)), n_(plant.n()), gamma_(gamma) {
  if (!(gamma > 0)) throw std::invalid_argument("LiftedProgram: gamma must be positive");
  const Index n = n_;
  if (mode_.theta.rows() != n || mode_.theta.cols() != n) {
    throw DimensionError("LiftedProgram: theta must be n x n");
  }
  if ((mode_.theta + mode_.theta.transpose()).norm() > 1e-12 * (1 + mode_.theta.norm())) {
    throw std::invalid_argument("LiftedProgram: theta must be skew-symmetric");
  }
  if (mode_.kind == ThetaMode::fixed) {
    Eigen::FullPivLU<MatrixXd> lu(mode_.theta);
    if (!lu.isInvertible()) {
      throw std::invalid_argument("LiftedProgram: fixed Theta_K must be invertible (degenerate Theta_K needs free mode)");
    }
  }
  margins_ = default_margins(plant, gamma);

  VariableLayout layout;
  layout.add_symmetric("Z", z_dim());
  layout.add_symmetric("Q", n_z());
  layout.add_symmetric("S25", lmi25_dim());
  layout.add_symmetric("S26", lmi26_dim());

  auto residual = [this, &layout](const VectorXd& x) {
    const MatrixXd Z = layout.get(x, "Z");
    const MatrixXd Q = layout.get(x, "Q");
    std::vector<VectorXd> parts;
    Index total = 0;
    auto push = [&](VectorXd v) {
      total += v.size();
      parts.push_back(std::move(v));
    };
    for (const auto& r : definitional_residuals(Z)) push(Eigen::Map<const VectorXd>(r.value.data(), r.value.size()));
    for (const auto& r : realizability_residuals(Z)) push(Eigen::Map<const VectorXd>(r.value.data(), r.value.size()));
    push(svec(layout.get(x, "S25") + sym(lmi25(Z))));
    push(svec(layout.get(x, "S26") - sym(lmi26(Z, Q))));
    VectorXd out(total);
    Index k = 0;
    for (const auto& p : parts) {
      out.segment(k, p.size()) = p;
      k += p.size();
    }
    return out;
  };

  Halfspace trace_cap;
  trace_cap.a = VectorXd::Zero(layout.dim());
  layout.set(trace_cap.a, "Q", MatrixXd::Identity(n_z(), n_z()));
  trace_cap.b = gamma - margins_.eps_tr;
  affine_ = std::make_shared<const AffineConstraintSystem>(
      AffineConstraintSystem::from_affine_map(layout, residual, {trace_cap}));
}

Index LiftedProgram::lmi25_dim() const { return 2 * n_ + redefined_.n_w(); }
Index LiftedProgram::lmi26_dim() const { return 2 * n_ + n_z(); }

bool LiftedProgram::has_block(Block b) const {
  return mode_.kind == ThetaMode::free || (b != Block::N && b != Block::Theta);
}

Index LiftedProgram::block_row(Block b) const {
  if (!has_block(b)) throw std::out_of_range("LiftedProgram: block " + block_name(b) + " only exists in free mode");
  const int k = static_cast<int>(b);
  if (mode_.kind == ThetaMode::free || k <= static_cast<int>(Block::Nb)) return k;
  return k - 2;
}

MatrixXd LiftedProgram::block(const MatrixXd& Z, Block a, Block b) const {
  return Z.block(block_row(a) * n_, block_row(b) * n_, n_, n_);
}

std::vector<NamedResidual> LiftedProgram::definitional_residuals(const MatrixXd& Z) const {
  const Index n = n_;
  const MatrixXd I = MatrixXd::Identity(n, n);
  const MatrixXd Jn = block_j(n);
  const MatrixXd& A = plant_.A;
  const MatrixXd& B = plant_.B;
  const MatrixXd& C = plant_.C;
  auto v = [&](Block a) { return var(Z, a); };
  auto b = [&](Block x, Block y) { return block(Z, x, y); };

  std::vector<NamedResidual> out;
  out.push_back({"anchor", b(Block::I, Block::I) - I});
  out.push_back({"X symmetry", b(Block::I, Block::X) - v(Block::X)});
  out.push_back({"Y symmetry", b(Block::I, Block::Y) - v(Block::Y)});
  out.push_back({"W1", v(Block::W1) - v(Block::BK1) * Jn});
  out.push_back({"W2", v(Block::W2) - v(Block::BK2) * Jn});
  out.push_back({"W3", v(Block::W3) - v(Block::BK3) * Jn});
  out.push_back({"W4", v(Block::W4) - v(Block::Y) * B});
  out.push_back({"W5", v(Block::W5) - v(Block::BK3) * C - v(Block::Y) * A});
  out.push_back({"W6", v(Block::W6) - b(Block::Nb, Block::C)});
  out.push_back({"W7", v(Block::W7) - b(Block::Nb, Block::X)});
  out.push_back({"W8", v(Block::W8) - b(Block::A, Block::Nb)});
  out.push_back({"W9", v(Block::W9) - b(Block::Y, Block::X)});
  out.push_back({"W10", v(Block::W10) - b(Block::W4, Block::W6)});
  out.push_back({"W11", v(Block::W11) - b(Block::W5, Block::W7)});
  out.push_back({"W12", v(Block::W12) - b(Block::W1, Block::BK1)});
  out.push_back({"W13", v(Block::W13) - b(Block::W2, Block::BK2)});
  out.push_back({"W14", v(Block::W14) - b(Block::W3, Block::BK3)});
  if (mode_.kind == ThetaMode::fixed) {
    const MatrixXd& T = mode_.theta;
    out.push_back({"N-breve", v(Block::Nb) - T + v(Block::W9) * T});
  } else {
    out.push_back({"N", v(Block::N) - I + v(Block::W9)});
    out.push_back({"Theta skew", v(Block::Theta) + b(Block::I, Block::Theta)});
    out.push_back({"N-breve", v(Block::Nb) + b(Block::N, Block::Theta)});
  }
  return out;
}

std::vector<NamedResidual> LiftedProgram::realizability_residuals(const MatrixXd& Z) const {
  const MatrixXd Jn = block_j(n_);
  auto v = [&](Block a) { return var(Z, a); };
  const MatrixXd W8 = v(Block::W8), W10 = v(Block::W10), W11 = v(Block::W11);
  std::vector<NamedResidual> out;
  out.push_back({"commutation", -W8 + W8.transpose() + W11 - W11.transpose() + W10 - W10.transpose() +
                                    v(Block::W12) + v(Block::W13) + v(Block::W14)});
  out.push_back({"output coupling", v(Block::BK1) - v(Block::W6) * Jn});
  return out;
}

MatrixXd LiftedProgram::lmi25(const MatrixXd& Z) const {
  MatrixXd bB(n_, 3 * n_);
  bB << var(Z, Block::BK1), var(Z, Block::BK2), var(Z, Block::BK3);
  return lmi25_matrix(redefined_, var(Z, Block::A), bB, var(Z, Block::C), var(Z, Block::X), var(Z, Block::Y));
}

MatrixXd LiftedProgram::lmi26(const MatrixXd& Z, const MatrixXd& Q) const {
  return lmi26_matrix(plant_, var(Z, Block::X), var(Z, Block::Y), var(Z, Block::C), Q);
}

VectorXd LiftedProgram::pack(const MatrixXd& Z, const MatrixXd& Q, const MatrixXd& S25, const MatrixXd& S26) const {
  VectorXd x(layout().dim());
  layout().set(x, "Z", Z);
  layout().set(x, "Q", Q);
  layout().set(x, "S25", S25);
  layout().set(x, "S26", S26);
  return x;
}

SynthesisVariables initial_point_variables(const SynthesisVariables& vars) {
  SynthesisVariables out = vars;
  const Index n = vars.X.rows();
  const MatrixXd I = MatrixXd::Identity(n, n);
  out.M = I;
  out.N = I - out.Y * out.X;
  Eigen::FullPivLU<MatrixXd> lu(out.N);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) {
    // Regularize: shift X slightly and recompute N.
    out.X = out.X + 1e-8 * I;
    out.N = I - out.Y * out.X;
    Eigen::FullPivLU<MatrixXd> lu2(out.N);
    if (!lu2.isInvertible()) throw NumericalError("initial_point: N = I - Y X is singular");
  }
  return out;
}

MatrixXd LiftedProgram::lift_factor(const SynthesisVariables& in) const {
  const SynthesisVariables vars = initial_point_variables(in);
  const Index n = n_;
  const MatrixXd Jn = block_j(n);
  const MatrixXd& A = plant_.A;
  const MatrixXd& B = plant_.B;
  const MatrixXd& C = plant_.C;
  if (vars.bA.rows() != n || vars.bB.cols() != 3 * n || vars.bC.rows() != plant_.n_u()) {
    throw DimensionError("lift: variables do not match the plant");
  }
  const MatrixXd& theta = mode_.theta;
  const MatrixXd B1 = vars.bB_k(1), B2 = vars.bB_k(2), B3 = vars.bB_k(3);
  const MatrixXd Nb = vars.N * theta;

  MatrixXd G[25];
  G[static_cast<int>(Block::I)] = MatrixXd::Identity(n, n);
  G[static_cast<int>(Block::A)] = vars.bA;
  G[static_cast<int>(Block::BK1)] = B1;
  G[static_cast<int>(Block::BK2)] = B2;
  G[static_cast<int>(Block::BK3)] = B3;
  G[static_cast<int>(Block::C)] = vars.bC;
  G[static_cast<int>(Block::X)] = vars.X;
  G[static_cast<int>(Block::Y)] = vars.Y;
  G[static_cast<int>(Block::Nb)] = Nb;
  G[static_cast<int>(Block::N)] = vars.N;
  G[static_cast<int>(Block::Theta)] = theta;
  MatrixXd W[15];
  W[1] = B1 * Jn;
  W[2] = B2 * Jn;
  W[3] = B3 * Jn;
  W[4] = vars.Y * B;
  W[5] = B3 * C + vars.Y * A;
  W[6] = Nb * vars.bC.transpose();
  W[7] = Nb * vars.X;
  W[8] = vars.bA * Nb.transpose();
  W[9] = vars.Y * vars.X;
  W[10] = W[4] * W[6].transpose();
  W[11] = W[5] * W[7].transpose();
  W[12] = W[1] * B1.transpose();
  W[13] = W[2] * B2.transpose();
  W[14] = W[3] * B3.transpose();
  for (int k = 0; k < 14; ++k) G[static_cast<int>(kWBlocks[k])] = W[k + 1];

  MatrixXd V(z_dim(), n);
  for (int k = 0; k < 25; ++k) {
    const Block b = static_cast<Block>(k);
    if (!has_block(b)) continue;
    V.middleRows(block_row(b) * n, n) = G[k];
  }
  return V;
}

MatrixXd LiftedProgram::lift(const SynthesisVariables& vars) const {
  const MatrixXd V = lift_factor(vars);
  return V * V.transpose();
}

MatrixXd initial_point(const LiftedProgram& program, const SynthesisVariables& vars) { return program.lift(vars); }

SynthesisVariables controller_to_variables(const PlantD& plant, const ControllerD& ctrl, const MatrixXd& X,
                                           const MatrixXd& Y) {
  check_regime(plant);
  ctrl.validate();
  const Index n = plant.n();
  if (ctrl.n() != n) throw DimensionError("controller_to_variables: controller order must equal plant order");
  SynthesisVariables vars;
  vars.X = X;
  vars.Y = Y;
  vars.M = MatrixXd::Identity(n, n);
  vars.N = MatrixXd::Identity(n, n) - Y * X;
  vars.bB = vars.N * ctrl.B_K();
  vars.bC = ctrl.C_K;
  vars.bA = vars.N * ctrl.A_K + vars.N * ctrl.B_K3 * plant.C * X + Y * plant.B * ctrl.C_K + Y * plant.A * X;
  return vars;
}

ControllerEmbedding embed_controller(const PlantD& plant, const ControllerD& ctrl, double gamma) {
  check_regime(plant);
  const Index n = plant.n();
  const ClosedLoopD cl = close_loop(plant, ctrl);
  const CostResult cost = lqg_cost(cl);
  if (!cost.stable) throw StabilityError("embed_controller: controller does not stabilize the plant");
  if (!(cost.Jinf < gamma)) throw std::invalid_argument("embed_controller: controller cost is not below gamma");

  // Strict Lyapunov certificate P + delta P1 with A P1 + P1 A^T + I = 0.
  const MatrixXd P1 = solve_lyapunov(cl.Acl, MatrixXd::Identity(2 * n, 2 * n));
  const double slope = (cl.Ccl * P1 * cl.Ccl.transpose()).trace();
  const double delta = std::min(1e-1, 0.25 * (gamma - cost.Jinf) / std::max(slope, 1e-12));
  const MatrixXd Xcl = cost.P + delta * P1;

  const MatrixXd M = Xcl.topRightCorner(n, n);
  if (!Eigen::FullPivLU<MatrixXd>(M).isInvertible()) throw NumericalError("embed_controller: off-diagonal certificate block is singular");

  ControllerEmbedding out;
  out.basis = M.transpose();
  out.controller = similarity_transform(ctrl, out.basis);
  const MatrixXd Xcl_inv = Xcl.inverse();
  const MatrixXd X = sym(Xcl.topLeftCorner(n, n));
  const MatrixXd Y = sym(Xcl_inv.topLeftCorner(n, n));
  out.vars = controller_to_variables(plant, out.controller, X, Y);

  const ClosedLoopD cl2 = close_loop(plant, out.controller);
  MatrixXd T = MatrixXd::Identity(2 * n, 2 * n);
  T.bottomRightCorner(n, n) = out.basis.inverse();
  const MatrixXd Xcl2 = T * Xcl * T.transpose();
  const double slack = 0.5 * (gamma - (cl2.Ccl * Xcl2 * cl2.Ccl.transpose()).trace()) / plant.n_z();
  out.vars.Q = sym(cl2.Ccl * Xcl2 * cl2.Ccl.transpose()) + slack * MatrixXd::Identity(plant.n_z(), plant.n_z());
  return out;
}

ControllerD extract_controller(const MatrixXd& Z, const LiftedProgram& program, const SynthesisOptions& opts) {
  const Index n = program.n();
  if (Z.rows() != program.z_dim() || Z.cols() != program.z_dim()) {
    throw DimensionError("extract_controller: Z does not match the program");
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym(Z));
  if (es.info() != Eigen::Success) throw NumericalError("extract_controller: eigensolver failed");
  const VectorXd w = es.eigenvalues().reverse();
  const double s1 = w(0);
  if (!(s1 > 0)) throw RankError("extract_controller: Z has no positive spectrum", {});
  if (w.size() > n && std::abs(w(n)) > opts.rank_threshold * s1) {
    std::vector<double> head;
    for (Index k = 0; k < std::min<Index>(w.size(), n + 3); ++k) head.push_back(w(k));
    std::ostringstream msg;
    msg << "extract_controller: rank of Z exceeds " << n << " (sigma_" << n + 1 << " / sigma_1 = " << w(n) / s1 << ")";
    throw RankError(msg.str(), head);
  }
  const MatrixXd U = es.eigenvectors().rightCols(n).rowwise().reverse();
  const MatrixXd V = U * w.head(n).cwiseMax(0.0).cwiseSqrt().asDiagonal();
  const MatrixXd V0 = V.topRows(n);
  Eigen::FullPivLU<MatrixXd> lu0(V0);
  if (!lu0.isInvertible()) throw NumericalError("extract_controller: identity block of the factor is singular");
  const MatrixXd Vn = V * lu0.inverse();
  auto G = [&](Block b) -> MatrixXd { return Vn.middleRows(program.block_row(b) * n, n); };

  const MatrixXd bA = G(Block::A);
  const MatrixXd B1 = G(Block::BK1), B2 = G(Block::BK2), B3 = G(Block::BK3);
  const MatrixXd bC = G(Block::C);
  const MatrixXd X = sym(G(Block::X));
  const MatrixXd Y = sym(G(Block::Y));
  MatrixXd N, theta;
  if (program.mode() == ThetaMode::fixed) {
    theta = program.theta();
    N = G(Block::Nb) * theta.inverse();
  } else {
    const MatrixXd T = G(Block::Theta);
    theta = 0.5 * (T - T.transpose());
    N = G(Block::N);
  }
  Eigen::FullPivLU<MatrixXd> luN(N);
  if (!luN.isInvertible()) throw NumericalError("extract_controller: N is singular");
  const MatrixXd N_inv = luN.inverse();

  const PlantD& plant = program.plant();
  ControllerD ctrl;
  ctrl.C_K = bC;
  ctrl.B_K1 = N_inv * B1;
  ctrl.B_K2 = N_inv * B2;
  ctrl.B_K3 = N_inv * B3;
  ctrl.A_K = N_inv * (bA - B3 * plant.C * X - Y * plant.B * ctrl.C_K - Y * plant.A * X);
  ctrl.theta_K = theta;
  if (opts.prune > 0) {
    ctrl.B_K2 = (ctrl.B_K2.array().abs() < opts.prune).select(0.0, ctrl.B_K2);
  }
  return ctrl;
}

}  // namespace qlqg
