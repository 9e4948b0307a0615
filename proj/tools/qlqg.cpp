#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "qlqg/classical.hpp"
#include "qlqg/io.hpp"
#include "qlqg/synthesis.hpp"

using namespace qlqg;

namespace {

const Eigen::IOFormat kFull(Eigen::FullPrecision, 0, ", ", "\n", "  [", "]");

void print_matrix(const std::string& label, const Eigen::MatrixXd& M) {
  std::cout << label << " =\n";
  if (M.size() == 0) {
    std::cout << "  (" << M.rows() << "x" << M.cols() << ")\n";
  } else {
    const Eigen::MatrixXd shown = M.array() + 0.0;  // no negative zeros
    std::cout << shown.format(kFull) << "\n";
  }
}

void print_controller(const ControllerD& c) {
  print_matrix("A_K", c.A_K);
  print_matrix("B_K1", c.B_K1);
  print_matrix("B_K2", c.B_K2);
  print_matrix("B_K3", c.B_K3);
  print_matrix("C_K", c.C_K);
  if (c.theta_K) print_matrix("theta_K", *c.theta_K);
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

// "canonical", "degenerate:k", "zero", or a row-major list "a,b,c,d".
Eigen::MatrixXd parse_theta(const std::string& text, Index n) {
  if (text == "canonical") return theta_matrix(CommutationSpec::canonical(n));
  if (text == "zero") return Eigen::MatrixXd::Zero(n, n);
  if (text.rfind("degenerate:", 0) == 0) {
    const long k = std::stol(text.substr(11));
    if (k < 0 || k > n) throw std::invalid_argument("degenerate block size out of range");
    return theta_matrix(CommutationSpec::degenerate(k, n));
  }
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) values.push_back(std::stod(item));
  if (static_cast<Index>(values.size()) != n * n) {
    throw std::invalid_argument("theta needs " + std::to_string(n * n) + " comma-separated entries");
  }
  Eigen::MatrixXd th(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) th(i, j) = values[static_cast<std::size_t>(i * n + j)];
  }
  return th;
}

PlantD load_plant(const std::string& path) {
  SystemFile f = load_system(path);
  if (f.kind != FileKind::plant) throw ParseError("/kind", "expected a plant file");
  return *f.plant;
}

int run_check(const std::string& path, const std::string& theta_flag, double tol_flag) {
  const SystemFile f = load_system(path);
  const QuantumLinearSystem<double> sys = to_quantum_system(f);
  Eigen::MatrixXd theta;
  if (!theta_flag.empty()) {
    theta = parse_theta(theta_flag, sys.n());
  } else if (f.kind == FileKind::controller && f.controller->theta_K) {
    theta = *f.controller->theta_K;
  } else {
    theta = theta_matrix(CommutationSpec::canonical(sys.n()));
  }
  const std::optional<double> tol = tol_flag > 0 ? std::optional<double>(tol_flag) : std::nullopt;
  const RealizabilityReport rep = realizability_residuals(sys, theta, tol);
  std::cout << "r_ccr   " << num(rep.r_ccr) << "\n"
            << "r_out   " << num(rep.r_out) << "\n"
            << "r_dform " << num(rep.r_dform) << "\n"
            << "tol     " << num(rep.tol) << "\n"
            << (rep.passed ? "physically realizable" : "not physically realizable") << "\n";
  return rep.passed ? 0 : 1;
}

int run_cost(const std::string& plant_path, const std::string& ctrl_path, const std::string& out) {
  const PlantD plant = load_plant(plant_path);
  const ControllerD ctrl = load_controller(ctrl_path);
  const CostResult cost = lqg_cost(close_loop(plant, ctrl));
  std::cout << (cost.stable ? num(cost.Jinf) : std::string("INF")) << "\n";
  if (!out.empty()) {
    nlohmann::json doc;
    doc["kind"] = "cost";
    doc["stable"] = cost.stable;
    doc["Jinf"] = cost.stable ? nlohmann::json(cost.Jinf) : nlohmann::json();
    doc["tool_version"] = tool_version;
    doc["input_digest"] = fnv1a64_hex(read_text(plant_path) + read_text(ctrl_path));
    write_text(out, doc.dump(2) + "\n");
  }
  return cost.stable ? 0 : 1;
}

int exit_code(SynthesisStatus s) {
  switch (s) {
    case SynthesisStatus::solved:
      return 0;
    case SynthesisStatus::no_convergence:
      return 3;
    case SynthesisStatus::phase1_infeasible:
      return 4;
  }
  return 2;
}

struct SynthFlags {
  std::string plant, mode = "fixed", theta, theta0 = "zero", out;
  double gamma = 0;
  std::uint64_t seed = 0;
  int max_iter = 5000, restarts = 20;
  double prune = 0;
};

int run_synthesize(const SynthFlags& f) {
  const std::string plant_text = read_text(f.plant);
  const SystemFile file = parse_system(plant_text);
  if (file.kind != FileKind::plant) throw ParseError("/kind", "expected a plant file");
  const PlantD& plant = *file.plant;
  const Index n = plant.n();

  SynthesisMode mode;
  if (f.mode == "fixed") {
    mode = SynthesisMode::fixed_theta(parse_theta(f.theta.empty() ? "canonical" : f.theta, n));
  } else {
    mode = SynthesisMode::free_theta(parse_theta(f.theta0, n));
  }
  SynthesisOptions opts;
  opts.seed = f.seed;
  opts.max_iter = f.max_iter;
  opts.restarts = f.restarts;
  opts.prune = f.prune;

  const SynthesisReport rep = synthesize(plant, f.gamma, mode, opts);
  std::ostringstream flags;
  flags << "\ngamma=" << num(f.gamma) << " mode=" << f.mode << " theta=" << f.theta << " theta0=" << f.theta0
        << " seed=" << f.seed << " max_iter=" << f.max_iter << " restarts=" << f.restarts << " prune=" << f.prune;
  write_text(f.out, emit_report(rep, fnv1a64_hex(plant_text + flags.str())));

  std::cout << "status " << to_string(rep.status) << "\n";
  if (rep.Jinf) std::cout << "Jinf " << num(*rep.Jinf) << "\n";
  std::cout << "iterations " << rep.iterations << ", restarts " << rep.restarts << "\n";
  if (!rep.message.empty()) std::cout << rep.message << "\n";
  return exit_code(rep.status);
}

int run_classical(const std::string& plant_path, const std::optional<double>& alpha, bool sweep, int points,
                  const std::string& csv) {
  const PlantD plant = load_plant(plant_path);
  if (sweep) {
    const CostCurve curve = sweep_alpha(plant, uniform_grid(points));
    write_text(csv, cost_curve_csv(curve));
    const CostPoint* best = nullptr;
    for (const CostPoint& p : curve) {
      if (p.feasible && (!best || p.cost < best->cost)) best = &p;
    }
    if (!best) {
      std::cout << "no feasible design on the grid\n";
      return 1;
    }
    std::cout << "argmin alpha " << num(best->alpha) << "\nmin cost " << num(best->cost) << "\n";
    return 0;
  }
  const MeasurementModel model = alpha ? MeasurementModel::indirect(*alpha) : MeasurementModel::direct();
  ClassicalDesign design;
  try {
    design = design_classical_lqg(plant, model);
  } catch (const RiccatiError& e) {
    std::cout << "design failed: " << e.what() << "\n";
    return 1;
  }
  std::cout << "Jinf " << num(design.Jinf) << "\n";
  print_controller(design.controller);
  return 0;
}

int run_physics(const std::string& path) {
  const QuantumLinearSystem<double> sys = to_quantum_system(load_system(path));
  const CommutationSpec spec = CommutationSpec::canonical(sys.n());
  print_matrix("R", hamiltonian_matrix(sys.A, spec));
  const auto lambda = coupling_matrix(sys.B, spec);
  std::cout << "Lambda =\n";
  for (Index i = 0; i < lambda.rows(); ++i) {
    std::cout << "  [";
    for (Index j = 0; j < lambda.cols(); ++j) {
      std::cout << (j ? ", " : "") << num(lambda(i, j).real()) << (lambda(i, j).imag() < 0 ? " - " : " + ")
                << num(std::abs(lambda(i, j).imag())) << "i";
    }
    std::cout << "]\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coherent quantum LQG synthesis"};
  app.require_subcommand(1);

  std::string system_path, theta_flag;
  double tol = 0;
  auto* check = app.add_subcommand("check", "Check physical realizability of a system file");
  check->add_option("--system", system_path)->required();
  check->add_option("--theta", theta_flag, "canonical, degenerate:k, zero, or row-major entries");
  check->add_option("--tol", tol, "Absolute tolerance (default relative 1e-8)");

  std::string plant_path, ctrl_path, out;
  auto* cost = app.add_subcommand("cost", "LQG cost of a plant and controller");
  cost->add_option("--plant", plant_path)->required();
  cost->add_option("--controller", ctrl_path, "Controller or synthesis report")->required();
  cost->add_option("--out", out, "Write a cost report");

  SynthFlags sf;
  auto* synth = app.add_subcommand("synthesize", "Coherent controller synthesis by alternating projections");
  synth->add_option("--plant", sf.plant)->required();
  synth->add_option("--gamma", sf.gamma)->required()->check(CLI::PositiveNumber);
  synth->add_option("--mode", sf.mode)->check(CLI::IsMember({"fixed", "free"}));
  synth->add_option("--theta", sf.theta, "Controller commutation matrix in fixed mode");
  synth->add_option("--theta0", sf.theta0, "Starting commutation matrix in free mode");
  synth->add_option("--seed", sf.seed);
  synth->add_option("--max-iter", sf.max_iter)->check(CLI::PositiveNumber);
  synth->add_option("--restarts", sf.restarts)->check(CLI::NonNegativeNumber);
  synth->add_option("--prune", sf.prune)->check(CLI::NonNegativeNumber);
  synth->add_option("--out", sf.out)->required();

  std::optional<double> alpha;
  bool sweep = false;
  int points = 201;
  std::string csv;
  auto* classical = app.add_subcommand("classical", "Measurement-based LQG design");
  classical->add_option("--plant", plant_path)->required();
  auto* alpha_opt = classical->add_option("--alpha", alpha, "Beamsplitter ratio")->check(CLI::Range(0.0, 1.0));
  auto* sweep_flag = classical->add_flag("--sweep", sweep, "Sweep alpha over a uniform grid");
  auto* points_opt = classical->add_option("--points", points)->check(CLI::Range(2, 1000000));
  auto* csv_opt = classical->add_option("--csv", csv);
  alpha_opt->excludes(sweep_flag);
  sweep_flag->needs(csv_opt);
  points_opt->needs(sweep_flag);
  csv_opt->needs(sweep_flag);

  auto* physics = app.add_subcommand("physics", "Hamiltonian and coupling matrices");
  physics->add_option("--system", system_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*check) return run_check(system_path, theta_flag, tol);
    if (*cost) return run_cost(plant_path, ctrl_path, out);
    if (*synth) return run_synthesize(sf);
    if (*classical) return run_classical(plant_path, alpha, sweep, points, csv);
    if (*physics) return run_physics(system_path);
  } catch (const ParseError& e) {
    std::cerr << "parse error at " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
