#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "qlqg/io.hpp"

namespace qlqg {
namespace {

using nlohmann::json;

std::string pointer(const std::string& parent, const std::string& key) { return parent + "/" + key; }

void reject_unknown(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) throw ParseError(pointer(where, it.key()), "unknown key");
  }
}

const json& require(const json& obj, const std::string& where, const std::string& key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(pointer(where, key), "missing required key");
  return *it;
}

Index read_dim(const json& dims, const std::string& key) {
  const json& v = require(dims, "/dims", key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ParseError(pointer("/dims", key), "must be a non-negative integer");
  }
  return static_cast<Index>(v.get<long long>());
}

MatrixXd read_matrix(const json& doc, const std::string& key, Index rows, Index cols) {
  const std::string where = pointer("", key);
  const json& v = require(doc, "", key);
  if (!v.is_array()) throw ParseError(where, "matrix must be an array of rows");
  if (static_cast<Index>(v.size()) != rows) {
    throw ParseError(where, "expected " + std::to_string(rows) + " rows, found " + std::to_string(v.size()));
  }
  MatrixXd M(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const json& row = v[static_cast<std::size_t>(i)];
    const std::string rw = where + "/" + std::to_string(i);
    if (!row.is_array()) throw ParseError(rw, "row must be an array");
    if (static_cast<Index>(row.size()) != cols) {
      throw ParseError(rw, "expected " + std::to_string(cols) + " entries, found " + std::to_string(row.size()));
    }
    for (Index j = 0; j < cols; ++j) {
      const json& x = row[static_cast<std::size_t>(j)];
      if (!x.is_number()) throw ParseError(rw + "/" + std::to_string(j), "entry must be a number");
      M(i, j) = x.get<double>();
    }
  }
  return M;
}

json matrix_json(const MatrixXd& M) {
  json rows = json::array();
  for (Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string location_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

SystemMetadata read_metadata(const json& doc) {
  SystemMetadata meta;
  auto it = doc.find("metadata");
  if (it == doc.end()) return meta;
  if (!it->is_object()) throw ParseError("/metadata", "must be an object");
  reject_unknown(*it, "/metadata", {"name", "channel_classicality"});
  if (auto n = it->find("name"); n != it->end()) {
    if (!n->is_string()) throw ParseError("/metadata/name", "must be a string");
    meta.name = n->get<std::string>();
  }
  if (auto c = it->find("channel_classicality"); c != it->end()) {
    if (!c->is_array()) throw ParseError("/metadata/channel_classicality", "must be an array");
    for (std::size_t k = 0; k < c->size(); ++k) {
      const json& s = (*c)[k];
      const std::string where = "/metadata/channel_classicality/" + std::to_string(k);
      if (!s.is_string() || (s != "quantum" && s != "classical")) {
        throw ParseError(where, "must be \"quantum\" or \"classical\"");
      }
      meta.channel_classicality.push_back(s.get<std::string>());
    }
  }
  return meta;
}

SystemFile from_json(const json& doc) {
  if (!doc.is_object()) throw ParseError("/", "document must be an object");
  const json& kind = require(doc, "", "kind");
  if (!kind.is_string()) throw ParseError("/kind", "must be a string");
  const std::string k = kind.get<std::string>();

  SystemFile file;
  const json& dims = require(doc, "", "dims");
  if (!dims.is_object()) throw ParseError("/dims", "must be an object");
  reject_unknown(dims, "/dims", {"n", "n_u", "n_w", "n_y", "n_z"});
  file.metadata = read_metadata(doc);

  if (k == "plant") {
    reject_unknown(doc, "", {"kind", "dims", "metadata", "A", "B", "B_w", "C", "D_w", "C_z", "D_z"});
    const Index n = read_dim(dims, "n"), n_u = read_dim(dims, "n_u"), n_w = read_dim(dims, "n_w"),
                n_y = read_dim(dims, "n_y"), n_z = read_dim(dims, "n_z");
    PlantD p;
    p.A = read_matrix(doc, "A", n, n);
    p.B = read_matrix(doc, "B", n, n_u);
    p.B_w = read_matrix(doc, "B_w", n, n_w);
    p.C = read_matrix(doc, "C", n_y, n);
    p.D_w = read_matrix(doc, "D_w", n_y, n_w);
    p.C_z = read_matrix(doc, "C_z", n_z, n);
    p.D_z = read_matrix(doc, "D_z", n_z, n_u);
    const auto& cc = file.metadata.channel_classicality;
    if (!cc.empty()) {
      if (static_cast<Index>(cc.size()) != n_y) {
        throw ParseError("/metadata/channel_classicality", "expected one entry per output (n_y)");
      }
      for (const auto& s : cc) p.classical_outputs.push_back(s == "classical");
    }
    file.kind = FileKind::plant;
    file.plant = std::move(p);
  } else if (k == "controller") {
    reject_unknown(doc, "", {"kind", "dims", "metadata", "A_K", "B_K1", "B_K2", "B_K3", "C_K", "theta_K"});
    const Index n = read_dim(dims, "n"), n_u = read_dim(dims, "n_u"), n_w = read_dim(dims, "n_w"),
                n_y = read_dim(dims, "n_y");
    file.kind = FileKind::controller;
    ControllerD& c = file.controller.emplace();
    c.A_K = read_matrix(doc, "A_K", n, n);
    c.B_K1 = read_matrix(doc, "B_K1", n, n_u);
    c.B_K2 = read_matrix(doc, "B_K2", n, n_w);
    c.B_K3 = read_matrix(doc, "B_K3", n, n_y);
    c.C_K = read_matrix(doc, "C_K", n_u, n);
    if (doc.contains("theta_K")) {
      MatrixXd th = read_matrix(doc, "theta_K", n, n);
      if ((th + th.transpose()).norm() > 1e-12) throw ParseError("/theta_K", "must be skew-symmetric");
      c.theta_K = std::move(th);
    }
  } else if (k == "system") {
    reject_unknown(doc, "", {"kind", "dims", "metadata", "A", "B", "C", "D"});
    const Index n = read_dim(dims, "n"), n_w = read_dim(dims, "n_w"), n_y = read_dim(dims, "n_y");
    QuantumLinearSystem<double> s;
    s.A = read_matrix(doc, "A", n, n);
    s.B = read_matrix(doc, "B", n, n_w);
    s.C = read_matrix(doc, "C", n_y, n);
    s.D = read_matrix(doc, "D", n_y, n_w);
    file.kind = FileKind::system;
    file.system = std::move(s);
  } else {
    throw ParseError("/kind", "expected \"plant\", \"controller\" or \"system\", found \"" + k + "\"");
  }
  return file;
}

json to_json(const SystemFile& file) {
  json doc;
  switch (file.kind) {
    case FileKind::plant: {
      const PlantD& p = *file.plant;
      doc["kind"] = "plant";
      doc["dims"] = {{"n", p.n()}, {"n_u", p.n_u()}, {"n_w", p.n_w()}, {"n_y", p.n_y()}, {"n_z", p.n_z()}};
      doc["A"] = matrix_json(p.A);
      doc["B"] = matrix_json(p.B);
      doc["B_w"] = matrix_json(p.B_w);
      doc["C"] = matrix_json(p.C);
      doc["D_w"] = matrix_json(p.D_w);
      doc["C_z"] = matrix_json(p.C_z);
      doc["D_z"] = matrix_json(p.D_z);
      break;
    }
    case FileKind::controller: {
      const ControllerD& c = *file.controller;
      doc["kind"] = "controller";
      doc["dims"] = {{"n", c.n()}, {"n_u", c.C_K.rows()}, {"n_w", c.B_K2.cols()}, {"n_y", c.B_K3.cols()}};
      doc["A_K"] = matrix_json(c.A_K);
      doc["B_K1"] = matrix_json(c.B_K1);
      doc["B_K2"] = matrix_json(c.B_K2);
      doc["B_K3"] = matrix_json(c.B_K3);
      doc["C_K"] = matrix_json(c.C_K);
      if (c.theta_K) doc["theta_K"] = matrix_json(*c.theta_K);
      break;
    }
    case FileKind::system: {
      const QuantumLinearSystem<double>& s = *file.system;
      doc["kind"] = "system";
      doc["dims"] = {{"n", s.n()}, {"n_w", s.n_w()}, {"n_y", s.n_y()}};
      doc["A"] = matrix_json(s.A);
      doc["B"] = matrix_json(s.B);
      doc["C"] = matrix_json(s.C);
      doc["D"] = matrix_json(s.D);
      break;
    }
  }
  if (!file.metadata.name.empty() || !file.metadata.channel_classicality.empty()) {
    json meta = json::object();
    if (!file.metadata.name.empty()) meta["name"] = file.metadata.name;
    if (!file.metadata.channel_classicality.empty()) meta["channel_classicality"] = file.metadata.channel_classicality;
    doc["metadata"] = meta;
  }
  return doc;
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(location_of(text, e.byte == 0 ? 0 : e.byte - 1), "syntax error");
  }
}

}  // namespace

SystemFile parse_system(const std::string& text) { return from_json(parse_json(text)); }

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

SystemFile load_system(const std::string& path) { return parse_system(read_text(path)); }

std::string emit_system(const SystemFile& file) { return to_json(file).dump(2) + "\n"; }

SystemFile make_plant_file(const PlantD& plant, std::string name) {
  SystemFile f;
  f.kind = FileKind::plant;
  f.metadata.name = std::move(name);
  for (bool c : plant.classical_outputs) f.metadata.channel_classicality.push_back(c ? "classical" : "quantum");
  f.plant = plant;
  return f;
}

SystemFile make_controller_file(const ControllerD& ctrl, std::string name) {
  SystemFile f;
  f.kind = FileKind::controller;
  f.metadata.name = std::move(name);
  f.controller = ctrl;
  return f;
}

QuantumLinearSystem<double> to_quantum_system(const SystemFile& file) {
  switch (file.kind) {
    case FileKind::system:
      return *file.system;
    case FileKind::controller:
      return file.controller->as_quantum_system();
    case FileKind::plant: {
      const PlantD& p = *file.plant;
      p.validate();
      const Index n_y = std::min(p.n_y(), p.n_w());
      const Index rest = p.n_w() - n_y;
      QuantumLinearSystem<double> s;
      s.A = p.A;
      s.B.resize(p.n(), p.n_w() + p.n_u());
      s.B << p.B_w.leftCols(n_y), p.B, p.B_w.rightCols(rest);
      s.C = p.C;
      s.D.resize(p.n_y(), p.n_w() + p.n_u());
      s.D << p.D_w.leftCols(n_y), MatrixXd::Zero(p.n_y(), p.n_u()), p.D_w.rightCols(rest);
      return s;
    }
  }
  throw std::logic_error("to_quantum_system: unknown file kind");
}

ControllerD load_controller(const std::string& path) {
  const std::string text = read_text(path);
  const json doc = parse_json(text);
  if (doc.is_object() && doc.value("kind", "") == "report") {
    auto it = doc.find("controller");
    if (it == doc.end() || it->is_null()) throw ParseError("/controller", "report carries no controller");
    try {
      return *from_json(*it).controller;
    } catch (const ParseError& e) {
      throw ParseError("/controller" + e.location, std::string(e.what()).substr(e.location.size() + 2));
    }
  }
  SystemFile f = from_json(doc);
  if (f.kind != FileKind::controller) throw ParseError("/kind", "expected a controller or report file");
  return *f.controller;
}

std::string fnv1a64_hex(const std::string& data) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::json report_to_json(const SynthesisReport& report, const std::string& input_digest) {
  json doc;
  doc["kind"] = "report";
  doc["status"] = to_string(report.status);
  doc["controller"] = report.controller ? to_json(make_controller_file(*report.controller)) : json();
  doc["Jinf"] = report.Jinf ? json(*report.Jinf) : json();
  doc["residuals"] = {{"r_ccr", report.r_ccr},
                      {"r_out", report.r_out},
                      {"affine", report.affine_residual},
                      {"lmi_margin", report.lmi_margin}};
  doc["iterations"] = report.iterations;
  doc["restarts"] = report.restarts;
  doc["seed"] = report.seed;
  doc["gamma"] = report.gamma;
  doc["mode"] = report.mode == ThetaMode::fixed ? "fixed" : "free";
  doc["theta_K_out"] = report.theta_K_out ? matrix_json(*report.theta_K_out) : json();
  doc["theta_spectrum"] = report.theta_spectrum;
  doc["message"] = report.message;
  doc["tool_version"] = tool_version;
  doc["input_digest"] = input_digest;
  return doc;
}

std::string emit_report(const SynthesisReport& report, const std::string& input_digest) {
  return report_to_json(report, input_digest).dump(2) + "\n";
}

std::string cost_curve_csv(const CostCurve& curve) {
  std::string out = "alpha,cost\n";
  char buf[64];
  for (const CostPoint& p : curve) {
    if (p.feasible && std::isfinite(p.cost)) {
      std::snprintf(buf, sizeof buf, "%.6g,%.6g\n", p.alpha, p.cost);
    } else {
      std::snprintf(buf, sizeof buf, "%.6g,inf\n", p.alpha);
    }
    out += buf;
  }
  return out;
}

}  // namespace qlqg
