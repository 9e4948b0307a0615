#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "qlqg/classical.hpp"
#include "qlqg/synthesis.hpp"

namespace qlqg {
namespace {

MatrixXd sym(const MatrixXd& X) { return 0.5 * (X + X.transpose()); }

double min_eig(const MatrixXd& X) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym(X), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double max_eig(const MatrixXd& X) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym(X), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(X.rows() - 1);
}

}  // namespace

Phase1Result solve_lmi_phase1(const PlantD& plant, double gamma, const Phase1Options& opts) {
  if (!(gamma > 0)) throw std::invalid_argument("solve_lmi_phase1: gamma must be positive");
  const PlantD rp = redefine_plant(plant);
  const Index n = plant.n(), n_u = plant.n_u(), n_z = plant.n_z();
  const LmiMargins margins = default_margins(plant, gamma);

  Phase1Result result;
  try {
    result.lower_bound = full_information_bound(plant);
  } catch (const std::exception&) {
    result.lower_bound = 0;
  }
  if (gamma <= result.lower_bound) {
    std::ostringstream msg;
    msg << "gamma " << gamma << " is not above the full-information bound " << result.lower_bound;
    result.message = msg.str();
    return result;
  }

  VariableLayout layout;
  layout.add("bA", n, n);
  layout.add("bB", n, 3 * n);
  layout.add("bC", n_u, n);
  layout.add_symmetric("X", n);
  layout.add_symmetric("Y", n);
  layout.add_symmetric("Q", n_z);
  const Index m25 = 2 * n + rp.n_w(), m26 = 2 * n + n_z;
  layout.add_symmetric("S25", m25);
  layout.add_symmetric("S26", m26);

  auto L25 = [&](const VectorXd& x) {
    return lmi25_matrix(rp, layout.get(x, "bA"), layout.get(x, "bB"), layout.get(x, "bC"), layout.get(x, "X"),
                        layout.get(x, "Y"));
  };
  auto L26 = [&](const VectorXd& x) {
    return lmi26_matrix(plant, layout.get(x, "X"), layout.get(x, "Y"), layout.get(x, "bC"), layout.get(x, "Q"));
  };
  auto residual = [&](const VectorXd& x) {
    VectorXd out(svec_size(m25) + svec_size(m26));
    out << svec(layout.get(x, "S25") + sym(L25(x))), svec(layout.get(x, "S26") - sym(L26(x)));
    return out;
  };
  Halfspace trace_cap;
  trace_cap.a = VectorXd::Zero(layout.dim());
  layout.set(trace_cap.a, "Q", MatrixXd::Identity(n_z, n_z));
  trace_cap.b = gamma - margins.eps_tr;
  const AffineConstraintSystem affine = AffineConstraintSystem::from_affine_map(layout, residual, {trace_cap});

  // Alternating projections between the affine coupling and the slack cones.
  // The cones are floored deeper than the required margin so the iterates
  // reach the interior; success is judged at the affine point.
  const double scale = 1 + plant.norm();
  VectorXd x = VectorXd::Zero(layout.dim());
  const int per_floor = std::max<int>(1, opts.max_iter / std::max<int>(1, static_cast<int>(opts.floors.size())));
  int iterations = 0;
  for (double rel_floor : opts.floors) {
    const double floor = std::max(rel_floor * scale, margins.eps_lmi);
    for (int it = 0; it < per_floor; ++it) {
      ++iterations;
      const VectorXd y = affine.project(x);
      const MatrixXd l25 = L25(y), l26 = L26(y);
      const double top25 = max_eig(l25), bottom26 = min_eig(l26);
      if (top25 <= -margins.eps_lmi && bottom26 >= margins.eps_lmi &&
          layout.get(y, "Q").trace() <= gamma - margins.eps_tr) {
        result.feasible = true;
        result.iterations = iterations;
        result.lmi25_max_eig = top25;
        result.lmi26_min_eig = bottom26;
        SynthesisVariables& v = result.vars;
        v.bA = layout.get(y, "bA");
        v.bB = layout.get(y, "bB");
        v.bC = layout.get(y, "bC");
        v.X = layout.get(y, "X");
        v.Y = layout.get(y, "Y");
        v.Q = layout.get(y, "Q");
        v.M = MatrixXd::Identity(n, n);
        v.N = MatrixXd::Identity(n, n) - v.Y * v.X;
        result.trace_q = v.Q.trace();
        return result;
      }
      x = y;
      layout.set(x, "S25", project_psd(layout.get(y, "S25"), floor));
      layout.set(x, "S26", project_psd(layout.get(y, "S26"), floor));
    }
  }
  result.iterations = iterations;
  const MatrixXd l25 = L25(affine.project(x)), l26 = L26(affine.project(x));
  result.lmi25_max_eig = max_eig(l25);
  result.lmi26_min_eig = min_eig(l26);
  std::ostringstream msg;
  msg << "no strictly feasible point after " << iterations << " iterations (max eig L25 = " << result.lmi25_max_eig
      << ", min eig L26 = " << result.lmi26_min_eig << ")";
  result.message = msg.str();
  return result;
}

}  // namespace qlqg
