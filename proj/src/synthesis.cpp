#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "qlqg/synthesis.hpp"

namespace qlqg {
namespace {

MatrixXd sym(const MatrixXd& X) { return 0.5 * (X + X.transpose()); }

MatrixXd symmetric_noise(Index m, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd G(m, m);
  for (Index j = 0; j < m; ++j) {
    for (Index i = 0; i < m; ++i) G(i, j) = normal(rng);
  }
  const MatrixXd S = sym(G);
  return S / S.norm();
}

}  // namespace

std::string to_string(SynthesisStatus status) {
  switch (status) {
    case SynthesisStatus::solved:
      return "solved";
    case SynthesisStatus::phase1_infeasible:
      return "phase1_infeasible";
    case SynthesisStatus::no_convergence:
      return "no_convergence";
  }
  return "unknown";
}

ProjectionResult alternating_projections(const LiftedProgram& program, const MatrixXd& Z0, const MatrixXd& Q0,
                                         const SynthesisOptions& opts) {
  const Index zd = program.z_dim();
  if (Z0.rows() != zd || Z0.cols() != zd) throw DimensionError("alternating_projections: Z0 does not match program");
  if (Q0.rows() != program.n_z() || Q0.cols() != program.n_z()) {
    throw DimensionError("alternating_projections: Q0 does not match program");
  }
  const VariableLayout& layout = program.layout();
  const AffineConstraintSystem& affine = program.affine();
  const double eps = program.margins().eps_lmi;
  const Index rank = program.rank_bound();

  auto cone = [&](const VectorXd& y) {
    VectorXd out = y;
    layout.set(out, "Z", project_psd_rank(layout.get(y, "Z"), rank));
    layout.set(out, "S25", project_psd(layout.get(y, "S25"), eps));
    layout.set(out, "S26", project_psd(layout.get(y, "S26"), eps));
    return out;
  };

  const MatrixXd Zs = sym(Z0);
  VectorXd x = program.pack(Zs, sym(Q0), project_psd(-sym(program.lmi25(Zs)), eps),
                            project_psd(sym(program.lmi26(Zs, Q0)), eps));

  ProjectionResult result;
  std::mt19937_64 rng(opts.seed);
  VectorXd y = x;
  double gap = std::numeric_limits<double>::infinity();
  for (int attempt = 0; attempt <= opts.restarts; ++attempt) {
    double window_gap = std::numeric_limits<double>::infinity();
    for (int it = 0; it < opts.max_iter; ++it) {
      y = affine.project(x);
      const VectorXd xc = cone(y);
      gap = (xc - y).norm();
      ++result.iterations;
      result.trace.gap.push_back(gap);
      x = xc;
      if (gap < opts.tol) {
        result.status = ProjectionStatus::converged;
        break;
      }
      if (opts.stall_window > 0 && (it + 1) % opts.stall_window == 0) {
        if (gap > opts.stall_ratio * window_gap) break;
        window_gap = gap;
      }
    }
    // A stalled or exhausted attempt restarts from a perturbed point.
    if (result.status == ProjectionStatus::converged || attempt == opts.restarts) break;
    MatrixXd Z = layout.get(x, "Z");
    Z += opts.perturb * Z.norm() * symmetric_noise(zd, rng);
    layout.set(x, "Z", Z);
    ++result.restarts;
    result.trace.restart_at.push_back(result.iterations);
  }

  result.Z = layout.get(x, "Z");
  result.Q = layout.get(x, "Q");
  result.cone_distance = gap;
  result.equality_residual = affine.equality_residual(x);
  return result;
}

Certificate certify(const PlantD& plant, const ControllerD& ctrl, double gamma, double certify_tol) {
  Certificate cert;
  if (!ctrl.theta_K) {
    cert.reason = "controller has no commutation matrix";
    return cert;
  }
  const QuantumLinearSystem<double> sys = ctrl.as_quantum_system();
  const MatrixXd BK = sys.B;
  cert.tol = certify_tol * (1 + ctrl.A_K.norm() + BK.squaredNorm());
  const RealizabilityReport rep = qlqg::realizability_residuals(sys, *ctrl.theta_K, cert.tol);
  cert.r_ccr = rep.r_ccr;
  cert.r_out = rep.r_out;
  const CostResult cost = lqg_cost(close_loop(plant, ctrl));
  cert.stable = cost.stable;
  cert.Jinf = cost.Jinf;
  std::ostringstream why;
  if (!cost.stable) why << "closed loop not asymptotically stable; ";
  if (cost.stable && !(cost.Jinf < gamma)) why << "cost " << cost.Jinf << " not below gamma " << gamma << "; ";
  if (rep.r_ccr > cert.tol) why << "commutation residual " << rep.r_ccr << " above " << cert.tol << "; ";
  if (rep.r_out > cert.tol) why << "output coupling residual " << rep.r_out << " above " << cert.tol << "; ";
  cert.reason = why.str();
  cert.passed = cert.reason.empty();
  return cert;
}

SynthesisReport synthesize(const PlantD& plant, double gamma, const SynthesisMode& mode,
                           const SynthesisOptions& opts) {
  if (!(gamma > 0)) throw std::invalid_argument("synthesize: gamma must be positive");
  if (opts.general_nm) throw std::logic_error("synthesize: the free M, N variant is not implemented");

  SynthesisReport report;
  report.gamma = gamma;
  report.mode = mode.kind;
  report.seed = opts.seed;

  const LiftedProgram program(plant, gamma, mode);

  SynthesisVariables vars;
  if (opts.warm_start) {
    vars = *opts.warm_start;
  } else {
    const Phase1Result phase1 = solve_lmi_phase1(plant, gamma, opts.phase1);
    report.iterations = phase1.iterations;
    if (!phase1.feasible) {
      report.status = SynthesisStatus::phase1_infeasible;
      report.message = phase1.message;
      return report;
    }
    vars = phase1.vars;
  }

  const MatrixXd Z0 = initial_point(program, vars);
  const ProjectionResult ap = alternating_projections(program, Z0, vars.Q, opts);
  report.iterations += ap.iterations;
  report.restarts = ap.restarts;
  report.affine_residual = ap.equality_residual;
  report.lmi_margin = -std::max(0.0, ap.cone_distance);
  if (ap.status != ProjectionStatus::converged) {
    report.status = SynthesisStatus::no_convergence;
    std::ostringstream msg;
    msg << "alternating projections stopped after " << ap.iterations << " iterations and " << ap.restarts
        << " restarts with gap " << ap.cone_distance;
    report.message = msg.str();
    return report;
  }

  ControllerD ctrl;
  try {
    ctrl = extract_controller(ap.Z, program, opts);
  } catch (const std::exception& e) {
    report.status = SynthesisStatus::no_convergence;
    report.message = e.what();
    return report;
  }

  if (mode.kind == ThetaMode::free) {
    const SkewFactorization f = skew_canonical_factor(*ctrl.theta_K, opts.theta_zero_tol);
    report.theta_spectrum = f.lambda_spectrum;
    report.theta_K_out = *ctrl.theta_K;
    ctrl = similarity_transform(ctrl, f.S);
    ctrl.theta_K = f.Z_can;
  }

  const Certificate cert = certify(plant, ctrl, gamma, opts.certify_tol);
  report.r_ccr = cert.r_ccr;
  report.r_out = cert.r_out;
  {
    const Index n = plant.n();
    SynthesisVariables v;
    v.bA = program.var(ap.Z, Block::A);
    v.bC = program.var(ap.Z, Block::C);
    v.X = sym(program.var(ap.Z, Block::X));
    v.Y = sym(program.var(ap.Z, Block::Y));
    v.bB.resize(n, 3 * n);
    v.bB << program.var(ap.Z, Block::BK1), program.var(ap.Z, Block::BK2), program.var(ap.Z, Block::BK3);
    const MatrixXd l25 = lmi25_matrix(program.redefined_plant(), v.bA, v.bB, v.bC, v.X, v.Y);
    const MatrixXd l26 = lmi26_matrix(plant, v.X, v.Y, v.bC, ap.Q);
    Eigen::SelfAdjointEigenSolver<MatrixXd> e25(sym(l25), Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<MatrixXd> e26(sym(l26), Eigen::EigenvaluesOnly);
    report.lmi_margin = std::min(-e25.eigenvalues().maxCoeff(), e26.eigenvalues().minCoeff());
  }
  if (!cert.passed) {
    report.status = SynthesisStatus::no_convergence;
    report.message = "certification failed: " + cert.reason;
    return report;
  }
  report.status = SynthesisStatus::solved;
  report.controller = ctrl;
  report.Jinf = cert.Jinf;
  return report;
}

BisectionResult bisect_gamma(const PlantD& plant, double gamma_lo, double gamma_hi, int steps,
                             const SynthesisMode& mode, const SynthesisOptions& opts) {
  if (gamma_lo > gamma_hi) throw std::invalid_argument("bisect_gamma: gamma_lo must not exceed gamma_hi");
  BisectionResult out;
  auto probe = [&](double gamma) {
    SynthesisReport rep = synthesize(plant, gamma, mode, opts);
    out.history.push_back({gamma, rep.status});
    if (rep.status == SynthesisStatus::solved && (!out.any_solved || gamma < out.best.gamma)) {
      out.best = rep;
      out.any_solved = true;
    } else if (!out.any_solved) {
      out.best = rep;
    }
    return rep.status == SynthesisStatus::solved;
  };
  if (gamma_lo == gamma_hi) {
    probe(gamma_hi);
    return out;
  }
  probe(gamma_hi);
  double lo = gamma_lo, hi = gamma_hi;
  for (int k = 0; k < steps; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (probe(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return out;
}

}  // namespace qlqg
