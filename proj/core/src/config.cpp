#include "wkam/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"
#include "wkam/digest.hpp"

namespace wkam {

using json = nlohmann::json;

namespace {

constexpr int kDefaultMinPeriods = 4096;
constexpr int kDefaultWindowPeriods = 16;

void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
}

void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ConfigError(where + "." + key + ": unknown key");
  }
}

double get_number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(where + ": must be finite");
  return v;
}

long long get_integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ConfigError(where + ": expected an integer");
  return j.get<long long>();
}

std::vector<double> get_numbers(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(get_number(j[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

FourierSeries get_series(const json& j, const std::string& where) {
  require_object(j, where);
  reject_unknown(j, where, {"constant", "cos", "sin"});
  FourierSeries f;
  if (j.contains("constant")) f.constant = get_number(j["constant"], where + ".constant");
  if (j.contains("cos")) f.cos = get_numbers(j["cos"], where + ".cos");
  if (j.contains("sin")) f.sin = get_numbers(j["sin"], where + ".sin");
  return f;
}

std::vector<FourierSeries> get_series_list(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array of series (one per dimension)");
  std::vector<FourierSeries> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(get_series(j[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

json series_json(const FourierSeries& f) {
  return json{{"constant", f.constant}, {"cos", f.cos}, {"sin", f.sin}};
}

json series_list_json(const std::vector<FourierSeries>& fs) {
  json out = json::array();
  for (const auto& f : fs) out.push_back(series_json(f));
  return out;
}

std::string_view method_name(CycleMethod m) { return m == CycleMethod::karp ? "karp" : "howard"; }

json model_json(const LagrangianSpec& m) {
  return json{{"family", std::string(to_string(m.family))},
              {"dim", m.dim},
              {"potential", series_list_json(m.potential)},
              {"drift", series_list_json(m.drift)},
              {"modulation", series_json(m.modulation)},
              {"cohomology", m.cohomology}};
}

json lattice_json(const LatticeSpec& l) {
  return json{{"cells", l.cells}, {"layers", l.layers}, {"v_max", l.v_max}, {"dim", l.dim}};
}

json body_json(const RunConfig& c, bool with_outputs) {
  json tol{{"tol_c", c.tolerances.tol_c}, {"residual_tol", c.tolerances.residual_tol}};
  tol["epsilon_aubry"] = c.tolerances.epsilon_aubry ? json(*c.tolerances.epsilon_aubry) : json(nullptr);
  tol["epsilon_class"] = c.tolerances.epsilon_class ? json(*c.tolerances.epsilon_class) : json(nullptr);
  json j{{"model", model_json(c.model)},
         {"lattice", lattice_json(c.lattice)},
         {"tolerances", tol},
         {"limits",
          {{"m_min", c.limits.m_min},
           {"m_max", c.limits.m_max},
           {"window", c.limits.window},
           {"iterations", c.limits.iterations},
           {"memory_cap_bytes", c.limits.memory_cap_bytes}}},
         {"algorithms",
          {{"cycle_method", std::string(method_name(c.algorithms.cycle_method))},
           {"all_pairs_max_nodes", c.algorithms.all_pairs_max_nodes}}},
         {"seed", c.seed}};
  if (with_outputs) {
    j["outputs"] = {{"directory", c.outputs.directory.generic_string()},
                    {"cache_directory", c.outputs.cache_directory.generic_string()}};
  }
  return j;
}

}  // namespace

std::string RunConfig::canonical() const { return body_json(*this, true).dump(2) + "\n"; }

std::string RunConfig::hash() const { return sha256_hex(body_json(*this, false).dump()); }

std::string RunConfig::kernel_hash() const {
  const json j{{"model", model_json(model)}, {"lattice", lattice_json(lattice)},
               {"memory_cap_bytes", limits.memory_cap_bytes}};
  return sha256_hex(j.dump());
}

int RunConfig::min_periods() const { return static_cast<int>(limits.m_min / lattice.layers); }

int RunConfig::window_periods() const {
  return static_cast<int>(limits.m_max / lattice.layers) - min_periods();
}

int RunConfig::subsolution_iterations() const {
  if (limits.iterations > 0) return limits.iterations;
  const long long v = static_cast<long long>(Lattice(lattice).node_count());
  return static_cast<int>(std::min<long long>(4 * v, std::numeric_limits<int>::max()));
}

std::filesystem::path RunConfig::cache_directory() const {
  return outputs.cache_directory.empty() ? outputs.directory / "kernel_cache"
                                         : outputs.cache_directory;
}

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: malformed JSON: ") + e.what());
  }
  require_object(root, "config");
  reject_unknown(root, "config",
                 {"model", "lattice", "tolerances", "limits", "algorithms", "outputs", "seed"});
  RunConfig c;

  if (!root.contains("model")) throw ConfigError("model: missing section");
  const json& m = root["model"];
  require_object(m, "model");
  reject_unknown(m, "model", {"family", "dim", "potential", "drift", "modulation", "cohomology"});
  if (!m.contains("family") || !m["family"].is_string()) {
    throw ConfigError("model.family: missing or not a string");
  }
  c.model.family = family_from_string(m["family"].get<std::string>());
  if (m.contains("dim")) c.model.dim = static_cast<int>(get_integer(m["dim"], "model.dim"));
  if (m.contains("potential")) c.model.potential = get_series_list(m["potential"], "model.potential");
  if (m.contains("drift")) c.model.drift = get_series_list(m["drift"], "model.drift");
  if (m.contains("modulation")) c.model.modulation = get_series(m["modulation"], "model.modulation");
  if (m.contains("cohomology")) c.model.cohomology = get_numbers(m["cohomology"], "model.cohomology");
  c.model.validate();

  if (!root.contains("lattice")) throw ConfigError("lattice: missing section");
  const json& l = root["lattice"];
  require_object(l, "lattice");
  reject_unknown(l, "lattice", {"cells", "layers", "v_max", "dim"});
  if (!l.contains("cells")) throw ConfigError("lattice.cells: missing");
  if (!l.contains("layers")) throw ConfigError("lattice.layers: missing");
  const long long cells = get_integer(l["cells"], "lattice.cells");
  const long long layers = get_integer(l["layers"], "lattice.layers");
  if (cells < 4 || cells > 1 << 20) throw ConfigError("lattice.cells: must be in [4, 2^20] (got " + std::to_string(cells) + ")");
  if (layers < 2 || layers > 1 << 20) throw ConfigError("lattice.layers: must be in [2, 2^20] (got " + std::to_string(layers) + ")");
  c.lattice.cells = static_cast<int>(cells);
  c.lattice.layers = static_cast<int>(layers);
  c.lattice.dim = c.model.dim;
  if (l.contains("dim")) {
    const long long d = get_integer(l["dim"], "lattice.dim");
    if (d != c.model.dim) throw ConfigError("lattice.dim: must equal model.dim");
  }
  if (l.contains("v_max") && !l["v_max"].is_null()) {
    c.lattice.v_max = get_number(l["v_max"], "lattice.v_max");
    if (!(c.lattice.v_max > 0.0)) throw ConfigError("lattice.v_max: must be > 0");
  } else {
    c.lattice.v_max = default_velocity_cap(c.model);
    c.v_max_defaulted = true;
  }
  c.lattice.validate();

  if (root.contains("tolerances")) {
    const json& t = root["tolerances"];
    require_object(t, "tolerances");
    reject_unknown(t, "tolerances", {"tol_c", "epsilon_aubry", "epsilon_class", "residual_tol"});
    auto positive = [&](const char* key) {
      const double v = get_number(t[key], std::string("tolerances.") + key);
      if (!(v > 0.0)) throw ConfigError(std::string("tolerances.") + key + ": must be > 0");
      return v;
    };
    if (t.contains("tol_c")) c.tolerances.tol_c = positive("tol_c");
    if (t.contains("residual_tol")) c.tolerances.residual_tol = positive("residual_tol");
    if (t.contains("epsilon_aubry") && !t["epsilon_aubry"].is_null()) {
      c.tolerances.epsilon_aubry = positive("epsilon_aubry");
    }
    if (t.contains("epsilon_class") && !t["epsilon_class"].is_null()) {
      c.tolerances.epsilon_class = positive("epsilon_class");
    }
  }

  const long long period = c.lattice.layers;
  if (root.contains("limits")) {
    const json& li = root["limits"];
    require_object(li, "limits");
    reject_unknown(li, "limits", {"m_min", "m_max", "window", "iterations", "memory_cap_bytes"});
    if (li.contains("m_min")) c.limits.m_min = get_integer(li["m_min"], "limits.m_min");
    if (li.contains("m_max")) c.limits.m_max = get_integer(li["m_max"], "limits.m_max");
    if (li.contains("window")) c.limits.window = static_cast<int>(get_integer(li["window"], "limits.window"));
    if (li.contains("iterations")) {
      c.limits.iterations = static_cast<int>(get_integer(li["iterations"], "limits.iterations"));
    }
    if (li.contains("memory_cap_bytes")) {
      const long long cap = get_integer(li["memory_cap_bytes"], "limits.memory_cap_bytes");
      if (cap <= 0) throw ConfigError("limits.memory_cap_bytes: must be > 0");
      c.limits.memory_cap_bytes = static_cast<std::size_t>(cap);
    }
  }
  if (c.limits.m_min == 0) {
    c.limits.m_min = c.limits.m_max > 0
                         ? std::max(period, c.limits.m_max - kDefaultWindowPeriods * period)
                         : kDefaultMinPeriods * period;
  }
  if (c.limits.m_max == 0) c.limits.m_max = c.limits.m_min + kDefaultWindowPeriods * period;
  if (c.limits.m_min < period) throw ConfigError("limits.m_min: must be >= T (one period)");
  if (c.limits.m_max / period - c.limits.m_min / period < 1) {
    throw ConfigError("limits.m_max: must exceed m_min by at least one period");
  }
  if (c.limits.window < 1) throw ConfigError("limits.window: must be >= 1");
  if (c.limits.window > c.window_periods()) {
    throw ConfigError("limits.window: exceeds the number of periods in [m_min, m_max]");
  }
  if (c.limits.iterations < 0) throw ConfigError("limits.iterations: must be >= 0");
  if (c.limits.m_min / period > std::numeric_limits<int>::max() / 2) {
    throw ConfigError("limits.m_min: too large");
  }

  if (root.contains("algorithms")) {
    const json& a = root["algorithms"];
    require_object(a, "algorithms");
    reject_unknown(a, "algorithms", {"cycle_method", "all_pairs_max_nodes"});
    if (a.contains("cycle_method")) {
      if (!a["cycle_method"].is_string()) throw ConfigError("algorithms.cycle_method: expected a string");
      const auto name = a["cycle_method"].get<std::string>();
      if (name == "karp") {
        c.algorithms.cycle_method = CycleMethod::karp;
      } else if (name == "howard") {
        c.algorithms.cycle_method = CycleMethod::howard;
      } else {
        throw ConfigError("algorithms.cycle_method: expected 'karp' or 'howard'");
      }
    }
    if (a.contains("all_pairs_max_nodes")) {
      c.algorithms.all_pairs_max_nodes =
          static_cast<int>(get_integer(a["all_pairs_max_nodes"], "algorithms.all_pairs_max_nodes"));
      if (c.algorithms.all_pairs_max_nodes < 0) {
        throw ConfigError("algorithms.all_pairs_max_nodes: must be >= 0");
      }
    }
  }

  if (root.contains("outputs")) {
    const json& o = root["outputs"];
    require_object(o, "outputs");
    reject_unknown(o, "outputs", {"directory", "cache_directory"});
    if (o.contains("directory")) {
      if (!o["directory"].is_string()) throw ConfigError("outputs.directory: expected a string");
      c.outputs.directory = o["directory"].get<std::string>();
      if (c.outputs.directory.empty()) throw ConfigError("outputs.directory: must not be empty");
    }
    if (o.contains("cache_directory")) {
      if (!o["cache_directory"].is_string()) {
        throw ConfigError("outputs.cache_directory: expected a string");
      }
      c.outputs.cache_directory = o["cache_directory"].get<std::string>();
    }
  }

  if (root.contains("seed")) {
    const long long s = get_integer(root["seed"], "seed");
    if (s < 0) throw ConfigError("seed: must be >= 0");
    c.seed = static_cast<std::uint64_t>(s);
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace wkam
