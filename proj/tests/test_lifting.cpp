#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "oracles.hpp"
#include "support.hpp"

using namespace qlqg;
using namespace testing;

namespace {

double worst(const std::vector<NamedResidual>& rs) {
  double w = 0;
  for (const auto& r : rs) w = std::max(w, r.value.cwiseAbs().maxCoeff());
  return w;
}

struct Sample {
  ControllerD ctrl;
  SynthesisVariables vars;
};

Sample sample(const PlantD& p, const MatrixXd& theta, std::mt19937_64& rng) {
  Sample s;
  s.ctrl = random_realizable_controller(p.n(), p.n_u(), p.n(), p.n_y(), theta, rng);
  s.vars = controller_to_variables(p, s.ctrl, random_spd(p.n(), rng), random_spd(p.n(), rng));
  return s;
}

}  // namespace

TEST_SUITE("lifting") {

TEST_CASE("lifted point of a realizable controller satisfies every equality") {
  std::mt19937_64 rng(31);
  const PlantD p = example_plant();
  const LiftedProgram prog(p, 6.0, SynthesisMode::fixed_theta(canonical_j(2)));
  CHECK(prog.z_dim() == 46);
  for (int trial = 0; trial < 20; ++trial) {
    const Sample s = sample(p, canonical_j(2), rng);
    const MatrixXd Z = prog.lift(s.vars);
    const double scale = 1 + Z.cwiseAbs().maxCoeff();
    CHECK(worst(prog.definitional_residuals(Z)) <= 1e-10 * scale);
    CHECK(worst(prog.realizability_residuals(Z)) <= 1e-10 * scale);
  }
}

TEST_CASE("linearized commutation residual equals the congruence of the nonlinear one") {
  std::mt19937_64 rng(32);
  const PlantD p = example_plant();
  const LiftedProgram prog(p, 6.0, SynthesisMode::fixed_theta(canonical_j(2)));
  for (int trial = 0; trial < 20; ++trial) {
    Sample s = sample(p, canonical_j(2), rng);
    s.ctrl.A_K += gaussian(2, 2, rng);
    s.ctrl.B_K1 += gaussian(2, 2, rng);
    s.vars = controller_to_variables(p, s.ctrl, s.vars.X, s.vars.Y);
    const MatrixXd Z = prog.lift(s.vars);
    const auto lin = prog.realizability_residuals(Z);
    const MatrixXd& N = s.vars.N;
    const MatrixXd ccr = N * commutation_nonlinear(s.ctrl, canonical_j(2)) * N.transpose();
    const MatrixXd out = N * (s.ctrl.B_K1 - canonical_j(2) * s.ctrl.C_K.transpose() * canonical_j(2));
    CHECK(max_abs_diff(lin[0].value, ccr) <= 1e-9 * (1 + ccr.norm()));
    CHECK(max_abs_diff(lin[1].value, out) <= 1e-9 * (1 + out.norm()));
  }
}

TEST_CASE("extraction inverts lifting") {
  std::mt19937_64 rng(33);
  const PlantD p = example_plant();
  for (ThetaMode m : {ThetaMode::fixed, ThetaMode::free}) {
    const SynthesisMode mode =
        m == ThetaMode::fixed ? SynthesisMode::fixed_theta(canonical_j(2)) : SynthesisMode::free_theta(canonical_j(2));
    const LiftedProgram prog(p, 6.0, mode);
    for (int trial = 0; trial < 10; ++trial) {
      const Sample s = sample(p, canonical_j(2), rng);
      const MatrixXd Z = prog.lift(s.vars);
      const ControllerD e = extract_controller(Z, prog);
      CHECK(max_abs_diff(e.A_K, s.ctrl.A_K) <= 1e-8 * (1 + s.ctrl.A_K.norm()));
      CHECK(max_abs_diff(e.B_K(), s.ctrl.B_K()) <= 1e-8 * (1 + s.ctrl.B_K().norm()));
      CHECK(max_abs_diff(e.C_K, s.ctrl.C_K) <= 1e-8 * (1 + s.ctrl.C_K.norm()));
      CHECK(max_abs_diff(*e.theta_K, canonical_j(2)) <= 1e-8);
    }
  }
}

TEST_CASE("lifted matrix is PSD with rank n") {
  std::mt19937_64 rng(34);
  const PlantD p = example_plant();
  const LiftedProgram prog(p, 6.0, SynthesisMode::fixed_theta(canonical_j(2)));
  const Sample s = sample(p, canonical_j(2), rng);
  const MatrixXd Z = prog.lift(s.vars);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(Z);
  const VectorXd w = es.eigenvalues().reverse();
  CHECK(w(1) > 0);
  CHECK(std::abs(w(2)) <= 1e-12 * w(0));
  CHECK(w.minCoeff() >= -1e-12 * w(0));
}

TEST_CASE("extraction refuses a high-rank matrix") {
  const PlantD p = example_plant();
  const LiftedProgram prog(p, 6.0, SynthesisMode::fixed_theta(canonical_j(2)));
  const MatrixXd Z = MatrixXd::Identity(prog.z_dim(), prog.z_dim());
  CHECK_THROWS_AS(extract_controller(Z, prog), RankError);
}

TEST_CASE("free mode has two extra block rows and keeps the commutation variable") {
  std::mt19937_64 rng(35);
  const PlantD p = example_plant();
  MatrixXd theta(2, 2);
  theta << 0, -0.182, 0.182, 0;
  const LiftedProgram prog(p, 6.0, SynthesisMode::free_theta(theta));
  CHECK(prog.z_dim() == 50);
  CHECK(prog.has_block(Block::Theta));
  const Sample s = sample(p, theta, rng);
  const MatrixXd Z = prog.lift(s.vars);
  const double scale = 1 + Z.cwiseAbs().maxCoeff();
  CHECK(worst(prog.definitional_residuals(Z)) <= 1e-10 * scale);
  CHECK(worst(prog.realizability_residuals(Z)) <= 1e-10 * scale);
  CHECK(max_abs_diff(prog.var(Z, Block::Theta), theta) <= 1e-12);
  const ControllerD e = extract_controller(Z, prog);
  CHECK(max_abs_diff(*e.theta_K, theta) <= 1e-10);
  CHECK(max_abs_diff(e.A_K, s.ctrl.A_K) <= 1e-8 * (1 + s.ctrl.A_K.norm()));
}

TEST_CASE("fixed mode needs an invertible skew theta") {
  const PlantD p = example_plant();
  CHECK_THROWS(LiftedProgram(p, 6.0, SynthesisMode::fixed_theta(MatrixXd::Zero(2, 2))));
  CHECK_THROWS(LiftedProgram(p, 6.0, SynthesisMode::fixed_theta(MatrixXd::Identity(2, 2))));
  CHECK_NOTHROW(LiftedProgram(p, 6.0, SynthesisMode::free_theta(MatrixXd::Zero(2, 2))));
}

TEST_CASE("LMI sizes for the example") {
  const LiftedProgram prog(example_plant(), 6.0, SynthesisMode::fixed_theta(canonical_j(2)));
  CHECK(prog.lmi25_dim() == 12);
  CHECK(prog.lmi26_dim() == 6);
  CHECK(prog.redefined_plant().n_w() == 8);
}

TEST_CASE("embedding a controller gives strictly feasible LMIs") {
  const PlantD p = example_plant();
  for (const char* name : {"controller_i.json", "controller_ii.json"}) {
    const ControllerD c = load_ctrl(name);
    const double J = lqg_cost(close_loop(p, c)).Jinf;
    const double gamma = J + 0.05;
    const ControllerEmbedding emb = embed_controller(p, c, gamma);
    const SynthesisVariables& v = emb.vars;
    const MatrixXd L25 = lmi25_matrix(redefine_plant(p), v.bA, v.bB, v.bC, v.X, v.Y);
    const MatrixXd L26 = lmi26_matrix(p, v.X, v.Y, v.bC, v.Q);
    Eigen::SelfAdjointEigenSolver<MatrixXd> e25(L25), e26(L26);
    CHECK(e25.eigenvalues().maxCoeff() < 0);
    CHECK(e26.eigenvalues().minCoeff() > 0);
    CHECK(v.Q.trace() < gamma);
    CHECK(std::abs(lqg_cost(close_loop(p, emb.controller)).Jinf - J) <= 1e-9 * J * condition_number(emb.basis));
  }
}

TEST_CASE("controller variables round trip through the change of variables") {
  std::mt19937_64 rng(36);
  const PlantD p = example_plant();
  const Sample s = sample(p, canonical_j(2), rng);
  CHECK(max_abs_diff(s.vars.N, MatrixXd::Identity(2, 2) - s.vars.Y * s.vars.X) <= 1e-14);
  CHECK(max_abs_diff(s.vars.bB_k(3), s.vars.N * s.ctrl.B_K3) <= 1e-12);
  CHECK_THROWS_AS(s.vars.bB_k(4), std::out_of_range);
}

}
