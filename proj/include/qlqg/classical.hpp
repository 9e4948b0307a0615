#pragma once

#include <vector>

#include <Eigen/Dense>

#include "qlqg/interconnect.hpp"

namespace qlqg {

// Homodyne measurement of the first output quadrature, or a beamsplitter
// with ratio alpha:beta followed by complementary quadrature measurements.
struct MeasurementModel {
  enum class Kind { direct, indirect };
  Kind kind = Kind::direct;
  double alpha = 1.0;

  static MeasurementModel direct() { return {Kind::direct, 1.0}; }
  static MeasurementModel indirect(double alpha);
  double beta() const;
};

// Measured system seen by a classical controller.
struct ModifiedPlant {
  // Process noise [w_K1; w; w0], measured output y'.
  PlantD plant;
  // Same measurement with noise [w; w0]; w_K1 enters through B when the
  // loop is closed with a B_K1 block of width n_u.
  PlantD loop_plant;
  Eigen::MatrixXd C_m;
  Eigen::MatrixXd process_cov;      // W
  Eigen::MatrixXd measurement_cov;  // V
  Eigen::MatrixXd cross_cov;        // N
};

struct ClassicalDesign {
  ControllerD controller;
  double Jinf = 0;
  Eigen::MatrixXd Pc, Pf;
};

struct CostPoint {
  double alpha = 0;
  double cost = 0;
  bool feasible = false;
};

using CostCurve = std::vector<CostPoint>;

ModifiedPlant modified_plant(const PlantD& plant, const MeasurementModel& model);

ClassicalDesign design_classical_lqg(const PlantD& plant, const MeasurementModel& model);

CostCurve sweep_alpha(const PlantD& plant, const std::vector<double>& grid);

std::vector<double> uniform_grid(int points);

// tr(Pc (B_w B_w^T + B B^T)): no controller of the plant, with the
// modulator noise entering through B, does better.
double full_information_bound(const PlantD& plant);

}  // namespace qlqg
