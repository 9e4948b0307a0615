#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "qlqg/classical.hpp"
#include "qlqg/interconnect.hpp"
#include "qlqg/synthesis.hpp"

namespace qlqg {

// Parse failure; location is "line L, column C" for syntax errors or a JSON
// pointer such as "/dims/n_y" for schema errors.
struct ParseError : std::runtime_error {
  ParseError(const std::string& where, const std::string& what)
      : std::runtime_error(where + ": " + what), location(where) {}
  std::string location;
};

enum class FileKind { plant, controller, system };

struct SystemMetadata {
  std::string name;
  std::vector<std::string> channel_classicality;  // "quantum" or "classical" per output
};

struct SystemFile {
  FileKind kind = FileKind::plant;
  SystemMetadata metadata;
  std::optional<PlantD> plant;
  std::optional<ControllerD> controller;
  std::optional<QuantumLinearSystem<double>> system;
};

SystemFile parse_system(const std::string& text);
SystemFile load_system(const std::string& path);
std::string emit_system(const SystemFile& file);

SystemFile make_plant_file(const PlantD& plant, std::string name = {});
SystemFile make_controller_file(const ControllerD& ctrl, std::string name = {});

// The file as a quantum system driven by [w_y; u; w_rest] (plant), by
// [w_K1; w_K2; y] (controller), or as given.
QuantumLinearSystem<double> to_quantum_system(const SystemFile& file);

// Accepts a controller file or a synthesis report with an embedded controller.
ControllerD load_controller(const std::string& path);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

std::string fnv1a64_hex(const std::string& data);

inline constexpr const char* tool_version = "0.1.0";

nlohmann::json report_to_json(const SynthesisReport& report, const std::string& input_digest);
std::string emit_report(const SynthesisReport& report, const std::string& input_digest);

// "alpha,cost" with six significant digits, infeasible points as "inf".
std::string cost_curve_csv(const CostCurve& curve);

}  // namespace qlqg
