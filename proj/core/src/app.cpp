#include "wkam/app.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <ostream>
#include <random>
#include <set>
#include <thread>

#include "json.hpp"
#include "wkam/barrier.hpp"
#include "wkam/critical.hpp"
#include "wkam/digest.hpp"
#include "wkam/io.hpp"
#include "wkam/oracle.hpp"
#include "wkam/parallel.hpp"
#include "wkam/weakkam.hpp"

namespace wkam {

using json = nlohmann::json;

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string repr(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x == 0.0 ? 0.0 : x);
  return buf;
}

// Carries everything the manifest needs across pipeline stages.
struct Run {
  RunConfig config;
  std::filesystem::path out_dir;
  std::string command;
  std::string started_at;
  json convergence = json::object();
  json cache = json::array();
  json warnings = json::array();
  std::vector<std::filesystem::path> files;
  std::ostream* log = nullptr;

  void warn(const std::string& msg) {
    *log << "warning: " << msg << "\n";
    warnings.push_back(msg);
  }

  void emit(const std::string& name, const std::string& text) {
    const auto path = out_dir / name;
    write_text(path, text);
    files.push_back(path);
    *log << "wrote " << path.string() << "\n";
  }

  json tolerances(double eps_aubry = -1, double eps_class = -1) const {
    json t{{"tol_c", config.tolerances.tol_c}, {"residual_tol", config.tolerances.residual_tol}};
    if (eps_aubry >= 0) t["epsilon_aubry"] = eps_aubry;
    if (eps_class >= 0) t["epsilon_class"] = eps_class;
    return t;
  }

  void write_manifest(int status) {
    json files_json = json::array();
    for (const auto& p : files) {
      files_json.push_back({{"path", p.filename().string()},
                            {"sha256", sha256_file(p)},
                            {"bytes", std::filesystem::file_size(p)}});
    }
    json m{{"artifact_version", kVersion},
           {"command", command},
           {"config_hash", config.hash()},
           {"config", json::parse(config.canonical())},
           {"v_max", config.lattice.v_max},
           {"v_max_source", config.v_max_defaulted ? "default" : "config"},
           {"radius", config.lattice.radius()},
           {"threads", thread_count()},
           {"started_at", started_at},
           {"finished_at", utc_now()},
           {"exit_status", status},
           {"convergence", convergence},
           {"kernel_cache", cache},
           {"warnings", warnings},
           {"files", files_json}};
    write_text(out_dir / "run_manifest.json", m.dump(2) + "\n");
  }
};

struct Pipeline {
  Run& run;
  Lattice lattice;
  std::optional<StepKernel> k0;
  std::optional<CriticalResult> crit;
  std::optional<StepKernel> kc;

  explicit Pipeline(Run& r) : run(r), lattice(build_lattice(r.config.lattice)) {}

  const StepKernel& kernel0() {
    if (!k0) {
      CacheStatus status = CacheStatus::miss;
      k0 = cached_kernel(run.config, 0.0, &status, *run.log);
      run.cache.push_back({{"k", 0.0}, {"status", std::string(to_string(status))}});
    }
    return *k0;
  }

  const CriticalResult& critical() {
    if (!crit) {
      crit = critical_value(run.config.model, kernel0(), run.config.algorithms.cycle_method);
      run.convergence["critical"] = true;
      double speed = 0.0;
      for (const auto& a : crit->measure) {
        for (double v : a.velocity) speed = std::max(speed, std::abs(v));
      }
      if (speed >= 0.9 * run.config.lattice.v_max) {
        run.warn("critical: optimal cycle uses speed " + repr(speed) + " >= 0.9 v_max; raise v_max");
      }
    }
    return *crit;
  }

  const StepKernel& kernel_c() {
    if (!kc) kc = kernel0().with_offset(critical().c_est);
    return *kc;
  }

  BarrierOptions barrier_options() const {
    BarrierOptions o;
    o.min_periods = run.config.min_periods();
    o.window_periods = run.config.window_periods();
    o.convergence_window = run.config.limits.window;
    o.residual_tol = run.config.tolerances.residual_tol;
    return o;
  }

  BarrierTable table(const BarrierSelection& sel) {
    auto t = BarrierTable::compute(kernel_c(), barrier_options(), sel);
    run.convergence["barrier"] = t.converged();
    if (!t.converged()) run.warn("barrier: running min not converged (residual " + repr(t.residual()) + ")");
    return t;
  }

  // All-pairs when small; otherwise layer-0 rows plus the Aubry candidates,
  // with Aubry columns for forward solutions.
  BarrierTable full_table() {
    BarrierSelection sel;
    if (lattice.node_count() <= run.config.algorithms.all_pairs_max_nodes) {
      sel.all_pairs = true;
      return table(sel);
    }
    for (int c = 0; c < lattice.cells_per_layer(); ++c) sel.rows.push_back(lattice.node(c, 0));
    auto first = table(sel);
    const auto candidates = aubry_set(first.h_diagonal(), epsilon_aubry(first));
    sel.rows.insert(sel.rows.end(), candidates.begin(), candidates.end());
    sel.columns = candidates;
    return table(sel);
  }

  double epsilon_aubry(const BarrierTable& t) const {
    return run.config.tolerances.epsilon_aubry.value_or(
        default_epsilon_aubry(t, run.config.tolerances.tol_c));
  }
  double epsilon_class(const BarrierTable& t) const {
    return run.config.tolerances.epsilon_class.value_or(2.0 * epsilon_aubry(t));
  }

  AubryStructure aubry(const BarrierTable& t) {
    const double ea = epsilon_aubry(t);
    const auto nodes = aubry_set(t.h_diagonal(), ea);
    return static_classes(t, nodes, ea, epsilon_class(t));
  }
};

std::string extra(const json& j) { return j.dump(); }

int cmd_critical(Run& run) {
  Pipeline p(run);
  const auto& r = p.critical();
  json x{{"config_hash", run.config.hash()},
         {"tolerances", run.tolerances()},
         {"v_max", run.config.lattice.v_max},
         {"radius", p.lattice.radius()},
         {"cycle_method", run.config.algorithms.cycle_method == CycleMethod::karp ? "karp" : "howard"}};
  run.emit("critical.json", critical_json(p.lattice, r, extra(x)));
  *run.log << "c_est = " << format_number(r.c_est) << "\n";
  return kExitOk;
}

int cmd_alpha(Run& run, const CommandLine& cmd) {
  if (cmd.h_steps < 1) throw ConfigError("--h-steps: must be >= 1");
  if (!std::isfinite(cmd.h_min) || !std::isfinite(cmd.h_max)) throw ConfigError("--h-min/--h-max: must be finite");
  const Lattice lat = build_lattice(run.config.lattice);
  std::vector<std::vector<double>> hs;
  for (int i = 0; i < cmd.h_steps; ++i) {
    const double h = cmd.h_steps == 1 ? cmd.h_min
                                      : cmd.h_min + (cmd.h_max - cmd.h_min) * i / (cmd.h_steps - 1);
    std::vector<double> v(static_cast<std::size_t>(run.config.model.dim), 0.0);
    v[0] = h;  // classes along the first coordinate direction
    hs.push_back(std::move(v));
  }
  const auto samples = alpha_function(run.config.model, lat, hs, run.config.algorithms.cycle_method);
  run.emit("alpha.csv", alpha_csv(samples));
  const double violation = alpha_convexity_violation(samples);
  if (std::isfinite(violation)) *run.log << "midpoint convexity violation: " << format_number(violation) << "\n";
  run.convergence["alpha"] = true;
  return kExitOk;
}

int cmd_barrier(Run& run, const CommandLine& cmd) {
  Pipeline p(run);
  if (cmd.source.empty()) throw ConfigError("barrier: --source CELL,LAYER is required");
  const Node src = parse_node(p.lattice, cmd.source);
  BarrierSelection sel;
  sel.rows = {src};
  const auto t = p.table(sel);
  run.emit("barrier.csv", barrier_csv(p.lattice, src, t.phi_row(src), t.h_row(src), t.converged()));
  return t.converged() ? kExitOk : kExitUnconverged;
}

json status_json(Pipeline& p, const BarrierTable& t) {
  return json{{"config_hash", p.run.config.hash()},
              {"c_est", p.critical().c_est == 0.0 ? 0.0 : p.critical().c_est},
              {"converged", t.converged()},
              {"barrier_residual", t.residual()},
              {"stabilization_steps", t.stabilization_steps()},
              {"tolerances", p.run.tolerances(p.epsilon_aubry(t), p.epsilon_class(t))}};
}

int cmd_aubry(Run& run) {
  Pipeline p(run);
  const auto t = p.full_table();
  const auto a = p.aubry(t);
  run.emit("aubry.json", aubry_json(p.lattice, a, extra(status_json(p, t))));
  *run.log << a.aubry_nodes.size() << " Aubry nodes in " << a.class_count() << " static classes\n";
  return t.converged() ? kExitOk : kExitUnconverged;
}

VerifyOptions verify_options(Pipeline& p) {
  VerifyOptions o;
  o.c = p.critical().c_est;
  o.seed = p.run.config.seed;
  return o;
}

int cmd_solve(Run& run, const CommandLine& cmd) {
  Pipeline p(run);
  if (cmd.boundary.empty()) throw ConfigError("solve: --boundary FILE is required");
  const auto f = read_boundary_csv(cmd.boundary, p.lattice);
  const auto t = p.full_table();
  const auto a = p.aubry(t);
  const std::set<Node> aubry_nodes(a.aubry_nodes.begin(), a.aubry_nodes.end());
  for (const auto& b : f) {
    if (!aubry_nodes.count(b.node)) {
      throw ConfigError("solve: boundary node " + describe_node(p.lattice, b.node) + " is not in the Aubry set");
    }
  }
  ValueFunction u;
  try {
    u = cmd.forward ? build_forward_solution(f, t, a.epsilon_class)
                    : build_backward_solution(f, t, a.epsilon_class);
  } catch (const DominationError& e) {
    throw std::runtime_error("boundary data not dominated: violating pair p = " +
                             describe_node(p.lattice, e.p) + ", q = " + describe_node(p.lattice, e.q) +
                             ", f(q) - f(p) - Phi(p -> q) = " + format_number(e.excess));
  }
  double restriction = 0.0;
  for (const auto& b : f) restriction = std::max(restriction, std::abs(u.values[b.node] - b.value));
  const auto report = verify_solution(u, p.kernel_c(), t, run.config.model, verify_options(p));
  run.convergence["solve"] = t.converged();
  run.emit("solution.csv", value_function_csv(p.lattice, u));
  json x = status_json(p, t);
  x["kind"] = std::string(to_string(u.kind));
  x["restriction_defect"] = restriction;
  x["seed"] = run.config.seed;
  run.emit("report.json", report_json(report, extra(x)));
  if (!cmd.path_start.empty()) {
    const Node start = parse_node(p.lattice, cmd.path_start);
    const auto path = extract_calibrated_path(u, p.kernel_c(), start, cmd.path_periods,
                                              cmd.forward ? Direction::forward : Direction::backward);
    run.emit("path.csv", path_csv(p.lattice, p.kernel_c(), path));
  }
  return t.converged() ? kExitOk : kExitUnconverged;
}

int cmd_verify(Run& run, const CommandLine& cmd) {
  Pipeline p(run);
  if (cmd.solution.empty()) throw ConfigError("verify: --solution FILE is required");
  const auto u = read_value_function_csv(cmd.solution, p.lattice,
                                         cmd.forward ? SolutionKind::forward : SolutionKind::backward);
  const auto t = p.full_table();
  const auto report = verify_solution(u, p.kernel_c(), t, run.config.model, verify_options(p));
  json x = status_json(p, t);
  x["kind"] = std::string(to_string(u.kind));
  x["seed"] = run.config.seed;
  run.convergence["verify"] = t.converged();
  run.emit("report.json", report_json(report, extra(x)));
  return t.converged() ? kExitOk : kExitUnconverged;
}

}  // namespace

std::string_view to_string(CacheStatus s) {
  switch (s) {
    case CacheStatus::hit: return "hit";
    case CacheStatus::miss: return "miss";
    case CacheStatus::rebuilt: return "rebuilt";
  }
  return "miss";
}

StepKernel cached_kernel(const RunConfig& config, double k, CacheStatus* status, std::ostream& log) {
  const Lattice lat = build_lattice(config.lattice);
  const std::string key = config.kernel_hash() + "|k=" + repr(k);
  const auto dir = config.cache_directory();
  const auto file = dir / ("kernel-" + sha256_hex(key).substr(0, 32) + ".bin");
  CacheStatus st = CacheStatus::miss;
  std::error_code ec;
  if (std::filesystem::exists(file, ec)) {
    try {
      std::string stored;
      auto kernel = load_kernel(file, &stored);
      if (stored != key || !(kernel.lattice() == lat) || kernel.k() != k) {
        throw std::runtime_error("kernel cache: key mismatch");
      }
      if (status) *status = CacheStatus::hit;
      return kernel;
    } catch (const std::exception& e) {
      log << "warning: " << e.what() << " in " << file.string() << "; rebuilding\n";
      st = CacheStatus::rebuilt;
    }
  }
  auto kernel = build_step_kernel(config.model, lat, k, config.limits.memory_cap_bytes);
  try {
    std::filesystem::create_directories(dir);
    save_kernel(file, kernel, key);
  } catch (const std::exception& e) {
    log << "warning: kernel cache not written: " << e.what() << "\n";
  }
  if (status) *status = st;
  return kernel;
}

bool selftest(std::ostream& out) {
  bool all = true;
  auto report = [&](bool ok, const std::string& name) {
    out << (ok ? "PASS " : "FAIL ") << name << "\n";
    all = all && ok;
  };

  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> coef(-0.5, 0.5);
  LagrangianSpec spec;
  spec.family = Family::mechanical;
  FourierSeries v;
  for (int i = 0; i < 3; ++i) {
    v.cos.push_back(coef(rng));
    v.sin.push_back(coef(rng));
  }
  spec.potential = {v};

  {
    const Lattice lat = build_lattice({6, 4, default_velocity_cap(spec), 1});
    const auto kernel = build_step_kernel(spec, lat, 0.0);
    bool ok = true;
    for (Node s = 0; s < lat.node_count() && ok; ++s) {
      CostVector u(static_cast<std::size_t>(lat.node_count()), kInfinity);
      u[s] = 0.0;
      for (int m = 1; m <= 8 && ok; ++m) {
        u = relax(kernel, u);
        ok = u == oracle::path_costs(kernel.graph(), s, m);
      }
    }
    report(ok, "m-step costs equal path enumeration (N=6, T=4, m<=8)");

    std::uniform_real_distribution<double> val(-1.0, 1.0);
    ok = true;
    for (int trial = 0; trial < 20; ++trial) {
      CostVector u(static_cast<std::size_t>(lat.node_count()));
      for (auto& x : u) x = val(rng);
      ok = ok && relax(kernel, u) == oracle::edge_scan_relax(kernel.graph(), u);
    }
    report(ok, "relax equals full edge scan");
  }

  {
    const Lattice lat = build_lattice({6, 4, 0.6, 1});
    const auto kernel = build_step_kernel(spec, lat, 0.0);
    const auto truth = oracle::min_cycle_mean(kernel.graph());
    const auto karp = min_mean_cycle(kernel, CycleMethod::karp);
    const auto howard = min_mean_cycle(kernel, CycleMethod::howard);
    report(karp.mean == truth.mean, "Karp mean equals simple-cycle enumeration (" +
                                        std::to_string(truth.cycles_seen) + " cycles)");
    report(howard.mean == truth.mean, "Howard mean equals simple-cycle enumeration");
  }

  {
    const auto g = Digraph::from_edges(2, {{0, 1, 1.0}, {1, 0, 3.0}, {0, 0, 2.5}});
    const auto r = min_mean_cycle(g);
    report(r.mean == 2.0 && r.cycle == std::vector<Node>{0, 1} && oracle::min_cycle_mean(g).mean == 2.0,
           "two-node cycle example");
  }
  return all;
}

int run(const CommandLine& cmd, std::ostream& log) {
  set_thread_count(cmd.threads > 0 ? cmd.threads
                                   : static_cast<int>(std::max(1u, std::thread::hardware_concurrency())));
  if (cmd.command == "selftest") {
    try {
      return selftest(log) ? kExitOk : kExitError;
    } catch (const std::exception& e) {
      log << "error: selftest: " << e.what() << "\n";
      return kExitError;
    }
  }

  Run r;
  r.command = cmd.command;
  r.log = &log;
  r.started_at = utc_now();
  try {
    if (cmd.config.empty()) throw ConfigError("--config FILE is required");
    r.config = load_config(cmd.config);
    if (const char* env = std::getenv("WKAM_OUTPUT_DIR"); env && *env) r.config.outputs.directory = env;
    r.out_dir = r.config.outputs.directory;
    std::filesystem::create_directories(r.out_dir);
  } catch (const std::exception& e) {
    log << "error: config: " << e.what() << "\n";
    return kExitError;
  }

  int status = kExitError;
  try {
    if (cmd.command == "critical") {
      status = cmd_critical(r);
    } else if (cmd.command == "alpha") {
      status = cmd_alpha(r, cmd);
    } else if (cmd.command == "barrier") {
      status = cmd_barrier(r, cmd);
    } else if (cmd.command == "aubry") {
      status = cmd_aubry(r);
    } else if (cmd.command == "solve") {
      status = cmd_solve(r, cmd);
    } else if (cmd.command == "verify") {
      status = cmd_verify(r, cmd);
    } else {
      throw ConfigError("unknown command '" + cmd.command + "'");
    }
  } catch (const std::exception& e) {
    log << "error: " << cmd.command << ": " << e.what() << "\n";
    status = kExitError;
  }
  try {
    r.write_manifest(status);
  } catch (const std::exception& e) {
    log << "error: manifest: " << e.what() << "\n";
    return kExitError;
  }
  return status;
}

}  // namespace wkam
