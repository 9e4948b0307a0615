#include "doctest.h"
#include "support.hpp"

using namespace qlqg;
using namespace testing;

namespace {

SynthesisOptions quick(int max_iter = 300, int restarts = 1) {
  SynthesisOptions o;
  o.max_iter = max_iter;
  o.restarts = restarts;
  o.stall_window = 100;
  o.phase1.max_iter = 30000;
  return o;
}

}  // namespace

TEST_SUITE("coherent-synthesis") {

TEST_CASE("repaired first controller stays close in cost") {
  const PlantD p = example_plant();
  const ControllerD c = make_realizable(load_ctrl("controller_i.json"));
  CHECK(realizability_residuals(c.as_quantum_system(), *c.theta_K).passed);
  CHECK(lqg_cost(close_loop(p, c)).Jinf < 5.75);
}

// The first controller's certificate has a nearly singular N = I - Y X, which
// leaves its lifted point inside the LMI cones by less than the margin; the
// second controller is well conditioned.
TEST_CASE("alternating projections stop at once on an exactly feasible point") {
  const PlantD p = example_plant();
  const ControllerD c = make_realizable(load_ctrl("controller_ii.json"));
  const ControllerEmbedding emb = embed_controller(p, c, 5.75);
  // The embedding basis moves theta, so the program uses the moved one.
  const LiftedProgram prog(p, 5.75, SynthesisMode::fixed_theta(*emb.controller.theta_K));
  const MatrixXd Z0 = initial_point(prog, emb.vars);
  const ProjectionResult r = alternating_projections(prog, Z0, emb.vars.Q, quick());
  CHECK(r.status == ProjectionStatus::converged);
  CHECK(r.iterations <= 2);
  CHECK(r.restarts == 0);
  CHECK(r.equality_residual <= 1e-8);
}

TEST_CASE("warm-started synthesis returns a certified controller") {
  const PlantD p = example_plant();
  const ControllerD c = make_realizable(load_ctrl("controller_ii.json"));
  const ControllerEmbedding emb = embed_controller(p, c, 5.75);
  SynthesisOptions o = quick();
  o.warm_start = emb.vars;
  const SynthesisReport rep = synthesize(p, 5.75, SynthesisMode::fixed_theta(*emb.controller.theta_K), o);
  REQUIRE(rep.status == SynthesisStatus::solved);
  REQUIRE(rep.controller.has_value());
  REQUIRE(rep.Jinf.has_value());
  CHECK(*rep.Jinf < 5.75);
  const Certificate cert = certify(p, *rep.controller, 5.75, 1e-6);
  CHECK(cert.passed);
  CHECK(std::abs(lqg_cost(close_loop(p, *rep.controller)).Jinf - *rep.Jinf) <= 1e-12);
  CHECK(rep.lmi_margin > 0);
}

TEST_CASE("free-mode synthesis canonicalizes the commutation matrix") {
  const PlantD p = example_plant();
  ControllerD hat = make_realizable(load_ctrl("controller_ii_hat.json"));
  const double J = lqg_cost(close_loop(p, hat)).Jinf;
  REQUIRE(J < 5.0);
  const ControllerEmbedding emb = embed_controller(p, hat, 5.0);
  SynthesisOptions o = quick();
  o.warm_start = emb.vars;
  const SynthesisReport rep = synthesize(p, 5.0, SynthesisMode::free_theta(*emb.controller.theta_K), o);
  REQUIRE(rep.status == SynthesisStatus::solved);
  CHECK(max_abs_diff(*rep.controller->theta_K, canonical_j(2)) <= 1e-12);
  REQUIRE(rep.theta_spectrum.size() == 1);
  REQUIRE(rep.theta_K_out.has_value());
  CHECK(certify(p, *rep.controller, 5.0, 1e-6).passed);
  CHECK(std::abs(*rep.Jinf - J) <= 1e-3);
}

TEST_CASE("certificate rejects rounded, unstable and over-budget controllers") {
  const PlantD p = example_plant();
  const ControllerD c1 = load_ctrl("controller_i.json");
  const Certificate strict = certify(p, c1, 5.75, 1e-6);
  CHECK(strict.stable);
  CHECK_FALSE(strict.passed);
  CHECK(strict.reason.find("commutation") != std::string::npos);
  CHECK(certify(p, c1, 5.75, 1e-5).passed);
  CHECK_FALSE(certify(p, c1, 5.7, 1e-5).passed);
  const Certificate zero = certify(p, load_ctrl("zero_controller.json"), 100, 1e-6);
  CHECK_FALSE(zero.stable);
  CHECK_FALSE(zero.passed);
}

TEST_CASE("convex phase is feasible at both example budgets") {
  const PlantD p = example_plant();
  for (double gamma : {5.75, 5.0}) {
    const Phase1Result r = solve_lmi_phase1(p, gamma);
    CHECK(r.feasible);
    CHECK(r.lmi25_max_eig <= -default_margins(p, gamma).eps_lmi);
    CHECK(r.lmi26_min_eig >= default_margins(p, gamma).eps_lmi);
    CHECK(r.trace_q <= gamma);
  }
}

TEST_CASE("budgets below the full-information bound are infeasible") {
  const PlantD p = example_plant();
  const Phase1Result r = solve_lmi_phase1(p, 1.0);
  CHECK_FALSE(r.feasible);
  const SynthesisReport rep = synthesize(p, 0.001, SynthesisMode::fixed_theta(canonical_j(2)), quick());
  CHECK(rep.status == SynthesisStatus::phase1_infeasible);
  CHECK_FALSE(rep.controller.has_value());
}

TEST_CASE("cold synthesis is reproducible and honest") {
  const PlantD p = example_plant();
  const SynthesisMode mode = SynthesisMode::fixed_theta(canonical_j(2));
  SynthesisOptions o = quick(200, 2);
  o.seed = 7;
  const SynthesisReport a = synthesize(p, 5.75, mode, o);
  const SynthesisReport b = synthesize(p, 5.75, mode, o);
  CHECK(a.status == b.status);
  CHECK(a.iterations == b.iterations);
  CHECK(a.restarts == b.restarts);
  CHECK(a.affine_residual == b.affine_residual);
  if (a.status == SynthesisStatus::solved) {
    CHECK(certify(p, *a.controller, 5.75, o.certify_tol).passed);
  } else {
    CHECK_FALSE(a.controller.has_value());
    CHECK_FALSE(a.message.empty());
  }
}

TEST_CASE("restarts are recorded in the trace") {
  const PlantD p = example_plant();
  const LiftedProgram prog(p, 5.75, SynthesisMode::fixed_theta(canonical_j(2)));
  const Phase1Result ph = solve_lmi_phase1(p, 5.75);
  REQUIRE(ph.feasible);
  SynthesisOptions o = quick(50, 3);
  o.stall_window = 10;
  o.stall_ratio = 1.0 - 1e-15;
  o.tol = 0;
  const ProjectionResult r = alternating_projections(prog, initial_point(prog, ph.vars), ph.vars.Q, o);
  CHECK(r.status == ProjectionStatus::max_iterations);
  CHECK(static_cast<int>(r.trace.gap.size()) == r.iterations);
  CHECK(static_cast<int>(r.trace.restart_at.size()) == r.restarts);
  CHECK(r.restarts <= 3);
}

TEST_CASE("argument validation") {
  const PlantD p = example_plant();
  const SynthesisMode mode = SynthesisMode::fixed_theta(canonical_j(2));
  CHECK_THROWS_AS(synthesize(p, 0.0, mode), std::invalid_argument);
  SynthesisOptions o;
  o.general_nm = true;
  CHECK_THROWS_AS(synthesize(p, 5.75, mode, o), std::logic_error);
  CHECK_THROWS_AS(bisect_gamma(p, 6.0, 5.0, 3, mode), std::invalid_argument);
  CHECK(to_string(SynthesisStatus::no_convergence) == "no_convergence");
}

TEST_CASE("bisection probes the upper budget first") {
  const PlantD p = example_plant();
  const SynthesisMode mode = SynthesisMode::fixed_theta(canonical_j(2));
  const BisectionResult single = bisect_gamma(p, 0.5, 0.5, 4, mode, quick());
  CHECK(single.history.size() == 1);
  CHECK_FALSE(single.any_solved);
  CHECK(single.heuristic);
  const BisectionResult r = bisect_gamma(p, 0.1, 1.0, 3, mode, quick());
  REQUIRE(r.history.size() == 4);
  CHECK(r.history[0].gamma == 1.0);
  CHECK(r.history[1].gamma == doctest::Approx(0.55));
  for (const auto& h : r.history) CHECK(h.status == SynthesisStatus::phase1_infeasible);
}

}
