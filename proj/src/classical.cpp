#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qlqg/classical.hpp"
#include "qlqg/matrix_equations.hpp"

namespace qlqg {
namespace {

using Eigen::MatrixXd;

// diag(a, b) repeated once per quadrature pair.
MatrixXd pair_diag(Index pairs, double a, double b) {
  MatrixXd out = MatrixXd::Zero(2 * pairs, 2 * pairs);
  for (Index k = 0; k < pairs; ++k) {
    out(2 * k, 2 * k) = a;
    out(2 * k + 1, 2 * k + 1) = b;
  }
  return out;
}

}  // namespace

MeasurementModel MeasurementModel::indirect(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("indirect measurement: alpha must lie in [0, 1]");
  return {Kind::indirect, alpha};
}

double MeasurementModel::beta() const { return std::sqrt(std::max(0.0, 1.0 - alpha * alpha)); }

ModifiedPlant modified_plant(const PlantD& plant, const MeasurementModel& model) {
  plant.validate();
  const Index n = plant.n(), n_u = plant.n_u(), n_w = plant.n_w();
  MatrixXd C_m, D_m;  // D_m acts on [w; w0]
  if (model.kind == MeasurementModel::Kind::direct) {
    if (plant.n_y() < 1) throw DimensionError("modified_plant: plant has no output to measure");
    C_m = plant.C.topRows(1);
    D_m = plant.D_w.topRows(1);
  } else {
    if (!(model.alpha >= 0.0 && model.alpha <= 1.0)) {
      throw std::invalid_argument("modified_plant: alpha must lie in [0, 1]");
    }
    if (plant.n_y() % 2 != 0) throw DimensionError("modified_plant: indirect measurement needs quadrature pairs");
    const Index pairs = plant.n_y() / 2;
    const MatrixXd mix_a = pair_diag(pairs, model.alpha, -model.beta());
    const MatrixXd mix_b = pair_diag(pairs, model.beta(), model.alpha);
    C_m = mix_a * plant.C;
    D_m.resize(plant.n_y(), n_w + plant.n_y());
    D_m << mix_a * plant.D_w, mix_b;
  }
  const Index n_m = C_m.rows(), n_e = D_m.cols();

  ModifiedPlant out;
  out.C_m = C_m;
  out.loop_plant.A = plant.A;
  out.loop_plant.B = plant.B;
  out.loop_plant.B_w = MatrixXd::Zero(n, n_e);
  out.loop_plant.B_w.leftCols(n_w) = plant.B_w;
  out.loop_plant.C = C_m;
  out.loop_plant.D_w = D_m;
  out.loop_plant.C_z = plant.C_z;
  out.loop_plant.D_z = plant.D_z;
  out.loop_plant.classical_outputs.assign(static_cast<std::size_t>(n_m), true);

  out.plant = out.loop_plant;
  out.plant.B_w.resize(n, n_u + n_e);
  out.plant.B_w << plant.B, out.loop_plant.B_w;
  out.plant.D_w.resize(n_m, n_u + n_e);
  out.plant.D_w << MatrixXd::Zero(n_m, n_u), D_m;

  out.process_cov = out.plant.B_w * out.plant.B_w.transpose();
  out.measurement_cov = out.plant.D_w * out.plant.D_w.transpose();
  out.cross_cov = out.plant.B_w * out.plant.D_w.transpose();
  return out;
}

ClassicalDesign design_classical_lqg(const PlantD& plant, const MeasurementModel& model) {
  const ModifiedPlant mp = modified_plant(plant, model);
  const Index n = plant.n();

  const MatrixXd Qc = plant.C_z.transpose() * plant.C_z;
  const MatrixXd Rc = plant.D_z.transpose() * plant.D_z;
  const MatrixXd Sc = plant.C_z.transpose() * plant.D_z;
  const CareSolution control = solve_care(plant.A, plant.B, Qc, Rc, Sc);

  // Kalman filter with correlated noise, as the dual Riccati equation.
  const CareSolution filter = solve_care(plant.A.transpose(), mp.C_m.transpose(), mp.process_cov,
                                         mp.measurement_cov, mp.cross_cov);
  const MatrixXd L = filter.K.transpose();

  ClassicalDesign design;
  design.Pc = control.P;
  design.Pf = filter.P;
  ControllerD& ctrl = design.controller;
  ctrl.C_K = -control.K;
  ctrl.A_K = plant.A + plant.B * ctrl.C_K - L * mp.C_m;
  ctrl.B_K1 = MatrixXd::Zero(n, plant.n_u());
  ctrl.B_K2 = MatrixXd::Zero(n, 0);
  ctrl.B_K3 = L;

  const CostResult cost = lqg_cost(close_loop(mp.loop_plant, ctrl));
  if (!cost.stable) throw StabilityError("design_classical_lqg: designed loop is not asymptotically stable");
  design.Jinf = cost.Jinf;
  return design;
}

CostCurve sweep_alpha(const PlantD& plant, const std::vector<double>& grid) {
  if (grid.empty()) throw std::invalid_argument("sweep_alpha: empty grid");
  std::vector<double> alphas = grid;
  std::sort(alphas.begin(), alphas.end());
  CostCurve curve;
  curve.reserve(alphas.size());
  for (double alpha : alphas) {
    CostPoint point;
    point.alpha = alpha;
    point.cost = std::numeric_limits<double>::infinity();
    const MeasurementModel model = MeasurementModel::indirect(alpha);
    try {
      point.cost = design_classical_lqg(plant, model).Jinf;
      point.feasible = true;
    } catch (const RiccatiError&) {
    } catch (const StabilityError&) {
    }
    curve.push_back(point);
  }
  return curve;
}

std::vector<double> uniform_grid(int points) {
  if (points < 2) throw std::invalid_argument("uniform_grid: need at least two points");
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) grid[static_cast<std::size_t>(i)] = static_cast<double>(i) / (points - 1);
  return grid;
}

double full_information_bound(const PlantD& plant) {
  plant.validate();
  const CareSolution control = solve_care(plant.A, plant.B, plant.C_z.transpose() * plant.C_z,
                                          plant.D_z.transpose() * plant.D_z, plant.C_z.transpose() * plant.D_z);
  const MatrixXd W = plant.B_w * plant.B_w.transpose() + plant.B * plant.B.transpose();
  return (control.P * W).trace();
}

}  // namespace qlqg
