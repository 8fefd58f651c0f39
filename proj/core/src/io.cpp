#include "wkam/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace wkam {

using json = nlohmann::json;

namespace {

double clean(double x) { return x == 0.0 ? 0.0 : x; }

json node_json(const Lattice& lat, Node n) {
  return json{{"cell", lat.cell_index(lat.cell_of(n))}, {"layer", lat.layer_of(n)}};
}

json merged(json j, const std::string& extra) {
  if (extra.empty()) return j;
  const json e = json::parse(extra);
  for (const auto& [k, v] : e.items()) j[k] = v;
  return j;
}

std::string emit(const json& j) { return j.dump(2) + "\n"; }

std::string cell_header(const Lattice& lat, const std::string& prefix) {
  if (lat.dim() == 1) return prefix + "cell";
  std::string out;
  for (int i = 0; i < lat.dim(); ++i) {
    if (i) out += ',';
    out += prefix + "cell_" + std::to_string(i);
  }
  return out;
}

std::string cell_fields(const Lattice& lat, Node n) {
  std::string out;
  const auto idx = lat.cell_index(lat.cell_of(n));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(idx[i]);
  }
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  return out;
}

long long parse_int(const std::string& s, const std::string& where) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    throw ConfigError(where + ": expected an integer, got '" + s + "'");
  }
  if (used != s.size()) throw ConfigError(where + ": expected an integer, got '" + s + "'");
  return v;
}

double parse_double(const std::string& s, const std::string& where) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError(where + ": expected a number, got '" + s + "'");
  }
  if (used != s.size()) throw ConfigError(where + ": expected a number, got '" + s + "'");
  return v;
}

Node node_from_fields(const Lattice& lat, const std::vector<std::string>& f, std::size_t first,
                      const std::string& where) {
  NodeId id;
  for (int i = 0; i < lat.dim(); ++i) {
    const long long c = parse_int(f[first + i], where);
    if (c < 0 || c >= lat.cells()) throw ConfigError(where + ": cell index out of range");
    id.cell.push_back(static_cast<int>(c));
  }
  const long long layer = parse_int(f[first + lat.dim()], where);
  if (layer < 0 || layer >= lat.layers()) throw ConfigError(where + ": layer out of range");
  id.layer = static_cast<int>(layer);
  return lat.node(id);
}

// Rows of a "cell..., layer, value" file; the header row is skipped.
std::vector<std::pair<Node, double>> read_node_values(const std::filesystem::path& path,
                                                      const Lattice& lat) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::vector<std::pair<Node, double>> out;
  std::string line;
  std::size_t lineno = 0;
  const std::size_t width = static_cast<std::size_t>(lat.dim()) + 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (lineno == 1) continue;
    const auto f = split(line);
    const std::string where = path.filename().string() + ":" + std::to_string(lineno);
    if (f.size() != width) {
      throw ConfigError(where + ": expected " + std::to_string(width) + " columns");
    }
    const Node n = node_from_fields(lat, f, 0, where);
    out.emplace_back(n, parse_double(f.back(), where));
  }
  return out;
}

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", clean(x));
  if (std::string(buf) == "-0") return "0";
  return buf;
}

Node parse_node(const Lattice& lattice, const std::string& text) {
  const auto f = split(text);
  if (f.size() != static_cast<std::size_t>(lattice.dim()) + 1) {
    throw ConfigError("node '" + text + "': expected " + std::to_string(lattice.dim()) +
                      " cell indices followed by a layer");
  }
  return node_from_fields(lattice, f, 0, "node '" + text + "'");
}

std::string describe_node(const Lattice& lattice, Node n) {
  return "(cell " + cell_fields(lattice, n) + ", layer " + std::to_string(lattice.layer_of(n)) + ")";
}

std::string value_function_csv(const Lattice& lattice, const ValueFunction& u) {
  std::string out = cell_header(lattice, "") + ",layer,value\n";
  for (Node n = 0; n < lattice.node_count(); ++n) {
    out += cell_fields(lattice, n) + ',' + std::to_string(lattice.layer_of(n)) + ',' +
           format_number(u.values[n]) + '\n';
  }
  return out;
}

ValueFunction read_value_function_csv(const std::filesystem::path& path, const Lattice& lattice,
                                      SolutionKind kind) {
  const auto rows = read_node_values(path, lattice);
  ValueFunction u{std::vector<double>(static_cast<std::size_t>(lattice.node_count()), kInfinity), kind};
  std::vector<char> seen(u.values.size(), 0);
  for (const auto& [n, v] : rows) {
    if (seen[n]) throw ConfigError(path.filename().string() + ": duplicate node " + describe_node(lattice, n));
    seen[n] = 1;
    u.values[n] = v;
  }
  for (Node n = 0; n < lattice.node_count(); ++n) {
    if (!seen[n]) throw ConfigError(path.filename().string() + ": missing node " + describe_node(lattice, n));
  }
  return u;
}

std::vector<BoundaryValue> read_boundary_csv(const std::filesystem::path& path,
                                             const Lattice& lattice) {
  std::vector<BoundaryValue> out;
  for (const auto& [n, v] : read_node_values(path, lattice)) {
    if (!std::isfinite(v)) throw ConfigError(path.filename().string() + ": non-finite boundary value");
    for (const auto& b : out) {
      if (b.node == n) throw ConfigError(path.filename().string() + ": duplicate node " + describe_node(lattice, n));
    }
    out.push_back({n, v});
  }
  if (out.empty()) throw ConfigError(path.filename().string() + ": no boundary values");
  return out;
}

std::string barrier_csv(const Lattice& lattice, Node source, std::span<const double> phi,
                        std::span<const double> h, bool converged) {
  std::string out = cell_header(lattice, "source_") + ",source_layer," + cell_header(lattice, "target_") +
                    ",target_layer,phi,h,converged\n";
  const std::string src = cell_fields(lattice, source) + ',' + std::to_string(lattice.layer_of(source));
  const char* flag = converged ? "true" : "false";
  for (Node n = 0; n < lattice.node_count(); ++n) {
    out += src + ',' + cell_fields(lattice, n) + ',' + std::to_string(lattice.layer_of(n)) + ',' +
           format_number(phi[n]) + ',' + format_number(h[n]) + ',' + flag + '\n';
  }
  return out;
}

std::string alpha_csv(std::span<const AlphaSample> samples) {
  std::string out;
  const std::size_t d = samples.empty() ? 1 : samples.front().h.size();
  if (d == 1) {
    out = "h,alpha\n";
  } else {
    for (std::size_t i = 0; i < d; ++i) out += "h_" + std::to_string(i) + ',';
    out += "alpha\n";
  }
  for (const auto& s : samples) {
    for (double h : s.h) out += format_number(h) + ',';
    out += format_number(s.alpha) + '\n';
  }
  return out;
}

std::string path_csv(const Lattice& lattice, const StepKernel& kernel, const CalibratedPath& path) {
  std::string vel_header;
  if (lattice.dim() == 1) {
    vel_header = "velocity";
  } else {
    for (int i = 0; i < lattice.dim(); ++i) vel_header += (i ? ",velocity_" : "velocity_") + std::to_string(i);
  }
  std::string out = "step," + cell_header(lattice, "") + ",layer," + vel_header + ",step_action\n";
  for (std::size_t i = 0; i < path.nodes.size(); ++i) {
    const Node n = path.nodes[i];
    out += std::to_string(i) + ',' + cell_fields(lattice, n) + ',' + std::to_string(lattice.layer_of(n));
    if (i == 0) {
      for (int c = 0; c < lattice.dim(); ++c) out += ",";
      out += ",\n";
      continue;
    }
    for (double v : kernel.velocity(path.edges[i - 1])) out += ',' + format_number(v);
    out += ',' + format_number(path.step_actions[i - 1]) + '\n';
  }
  return out;
}

std::string critical_json(const Lattice& lattice, const CriticalResult& r, const std::string& extra) {
  json cycle = json::array();
  for (Node n : r.cycle) cycle.push_back(node_json(lattice, n));
  json measure = json::array();
  double max_speed = 0.0;
  for (const auto& a : r.measure) {
    double speed = 0.0;
    for (double v : a.velocity) speed = std::max(speed, std::abs(v));
    max_speed = std::max(max_speed, speed);
    std::vector<double> pos, vel;
    for (double x : a.position) pos.push_back(clean(x));
    for (double v : a.velocity) vel.push_back(clean(v));
    measure.push_back({{"cell", a.node.cell},
                       {"layer", a.node.layer},
                       {"position", pos},
                       {"time", clean(a.time)},
                       {"velocity", vel},
                       {"weight", clean(a.weight)}});
  }
  json j{{"c_est", clean(r.c_est)},
         {"cycle", cycle},
         {"period_steps", r.period_steps},
         {"measure", measure},
         {"measure_action", clean(r.measure_action)},
         {"discretization_tolerance", clean(r.discretization_tolerance)},
         {"max_measure_speed", clean(max_speed)},
         {"converged", true}};
  return emit(merged(std::move(j), extra));
}

std::string aubry_json(const Lattice& lattice, const AubryStructure& a, const std::string& extra) {
  json nodes = json::array();
  for (Node n : a.aubry_nodes) nodes.push_back(node_json(lattice, n));
  json reps = json::array();
  for (Node n : a.representatives) reps.push_back(node_json(lattice, n));
  json j{{"aubry_nodes", nodes},
         {"class_of", a.class_of},
         {"class_count", a.class_count()},
         {"representatives", reps},
         {"epsilon_aubry", clean(a.epsilon_aubry)},
         {"epsilon_class", clean(a.epsilon_class)}};
  return emit(merged(std::move(j), extra));
}

std::string report_json(const VerificationReport& r, const std::string& extra) {
  json j{{"domination_defect", clean(r.domination_defect)},
         {"domination_pairs", r.domination_pairs},
         {"fixed_point_residual", clean(r.fixed_point_residual)},
         {"hj_residual_quantiles",
          {{"median", clean(r.hj_median)}, {"p90", clean(r.hj_p90)}, {"max", clean(r.hj_max)}}},
         {"graph_defect", clean(r.graph_defect)},
         {"lipschitz_constant", clean(r.lipschitz_constant)}};
  return emit(merged(std::move(j), extra));
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace wkam
