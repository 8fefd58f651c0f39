#include "wkam/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "wkam/digest.hpp"
#include "wkam/parallel.hpp"

namespace wkam {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int ipow(int base, int exp) {
  long long r = 1;
  for (int i = 0; i < exp; ++i) {
    r *= base;
    if (r > std::numeric_limits<int>::max()) throw ConfigError("lattice: node count overflows");
  }
  return static_cast<int>(r);
}

int mod(int a, int n) { return ((a % n) + n) % n; }

// Lifts s with |s| <= r and s = residue (mod N), ascending.
std::vector<int> lifts_for_residue(int residue, int n, int r) {
  std::vector<int> out;
  for (int s = -r; s <= r; ++s) {
    if (mod(s, n) == residue) out.push_back(s);
  }
  return out;
}

// Residues reachable within radius r, ascending.
std::vector<int> reachable_residues(int n, int r) {
  std::vector<int> out;
  for (int c = 0; c < n; ++c) {
    if (!lifts_for_residue(c, n, r).empty()) out.push_back(c);
  }
  return out;
}

// Calls fn(lift) for every element of the product of per-dimension lift lists,
// first dimension most significant.
template <class Fn>
void for_each_product(const std::vector<std::vector<int>>& choices, Fn&& fn) {
  const std::size_t d = choices.size();
  for (const auto& c : choices) {
    if (c.empty()) return;
  }
  std::vector<std::size_t> idx(d, 0);
  std::vector<int> lift(d);
  while (true) {
    for (std::size_t i = 0; i < d; ++i) lift[i] = choices[i][idx[i]];
    fn(std::span<const int>(lift));
    std::size_t i = d;
    while (i > 0) {
      --i;
      if (++idx[i] < choices[i].size()) break;
      idx[i] = 0;
      if (i == 0) return;
    }
    if (d == 0) return;
  }
}

// L(midpoint, velocity, mid-time) / T for one lifted step.
double base_action(const LagrangianSpec& spec, const Lattice& lattice,
                   std::span<const int> x_index, std::span<const int> lift, int layer,
                   std::vector<double>& mid, std::vector<double>& vel) {
  const double n = lattice.cells();
  const double t = lattice.layers();
  for (int i = 0; i < lattice.dim(); ++i) {
    mid[i] = wrap_unit((x_index[i] + 0.5 * lift[i]) / n);
    vel[i] = lift[i] * t / n;
  }
  return eval_lagrangian(spec, mid, vel, (layer + 0.5) / t) / t;
}

template <class T>
void put(std::string& buf, const T& value) {
  buf.append(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T take(std::string_view& buf) {
  if (buf.size() < sizeof(T)) throw std::runtime_error("kernel cache: truncated file");
  T value;
  std::memcpy(&value, buf.data(), sizeof(T));
  buf.remove_prefix(sizeof(T));
  return value;
}

constexpr char kMagic[8] = {'W', 'K', 'A', 'M', 'K', 'E', 'R', 'N'};
constexpr std::uint32_t kFormatVersion = 1;

}  // namespace

int LatticeSpec::radius() const {
  if (!(v_max > 0.0) || cells <= 0 || layers <= 0) return 0;
  return static_cast<int>(std::ceil(v_max * cells / layers));
}

void LatticeSpec::validate() const {
  if (dim < 1) throw ConfigError("lattice.dim: must be >= 1");
  if (cells < 4) throw ConfigError("lattice.cells: must be >= 4 (got " + std::to_string(cells) + ")");
  if (layers < 2) throw ConfigError("lattice.layers: must be >= 2 (got " + std::to_string(layers) + ")");
  if (!std::isfinite(v_max)) throw ConfigError("lattice.v_max: must be finite");
  if (radius() < 1) {
    throw ConfigError("disconnected lattice: raise v_max, T, or N coupling (v_max=" +
                      std::to_string(v_max) + ")");
  }
}

Lattice::Lattice(LatticeSpec spec) : spec_(spec) {
  spec_.validate();
  radius_ = spec_.radius();
  cells_per_layer_ = ipow(spec_.cells, spec_.dim);
  if (static_cast<long long>(cells_per_layer_) * spec_.layers > std::numeric_limits<Node>::max()) {
    throw ConfigError("lattice: node count overflows");
  }
}

Node Lattice::node(const NodeId& id) const {
  if (static_cast<int>(id.cell.size()) != dim() || id.layer < 0 || id.layer >= layers()) {
    throw std::out_of_range("NodeId out of range");
  }
  return node(flat_cell(id.cell), id.layer);
}

NodeId Lattice::node_id(Node n) const {
  if (n < 0 || n >= node_count()) throw std::out_of_range("node index out of range");
  return NodeId{cell_index(cell_of(n)), layer_of(n)};
}

std::vector<int> Lattice::cell_index(int flat) const {
  std::vector<int> idx(dim());
  for (int i = dim() - 1; i >= 0; --i) {
    idx[i] = flat % spec_.cells;
    flat /= spec_.cells;
  }
  return idx;
}

int Lattice::flat_cell(std::span<const int> index) const {
  int flat = 0;
  for (int i = 0; i < dim(); ++i) {
    if (index[i] < 0 || index[i] >= spec_.cells) throw std::out_of_range("cell index out of range");
    flat = flat * spec_.cells + index[i];
  }
  return flat;
}

int Lattice::shifted_cell(int flat, std::span<const int> shift) const {
  auto idx = cell_index(flat);
  for (int i = 0; i < dim(); ++i) idx[i] = mod(idx[i] + shift[i], spec_.cells);
  return flat_cell(idx);
}

std::vector<double> Lattice::position(int flat) const {
  const auto idx = cell_index(flat);
  std::vector<double> x(dim());
  for (int i = 0; i < dim(); ++i) x[i] = static_cast<double>(idx[i]) / spec_.cells;
  return x;
}

Node Lattice::reversed(Node n) const {
  return node(cell_of(n), (layers() - layer_of(n)) % layers());
}

Lattice build_lattice(const LatticeSpec& spec) { return Lattice(spec); }

StepWeight step_weight(const LagrangianSpec& spec, const Lattice& lattice, int x_cell, int y_cell,
                       int layer, double k) {
  const auto xi = lattice.cell_index(x_cell);
  const auto yi = lattice.cell_index(y_cell);
  std::vector<std::vector<int>> choices(lattice.dim());
  for (int i = 0; i < lattice.dim(); ++i) {
    choices[i] = lifts_for_residue(mod(yi[i] - xi[i], lattice.cells()), lattice.cells(),
                                   lattice.radius());
  }
  StepWeight best{kInf, {}};
  std::vector<double> mid(lattice.dim()), vel(lattice.dim());
  for_each_product(choices, [&](std::span<const int> lift) {
    const double w = base_action(spec, lattice, xi, lift, layer, mid, vel);
    if (w < best.weight) best = {w, std::vector<int>(lift.begin(), lift.end())};
  });
  if (best.weight < kInf) best.weight += k / lattice.layers();
  return best;
}

std::vector<double> StepKernel::velocity(EdgeIndex e) const {
  const auto s = lift(e);
  std::vector<double> v(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    v[i] = static_cast<double>(s[i]) * lattice_.layers() / lattice_.cells();
  }
  return v;
}

StepKernel StepKernel::with_offset(double k) const {
  StepKernel out = *this;
  out.k_ = k;
  const double shift = k / lattice_.layers();
  auto w = out.graph_.mutable_weights();
  for (std::size_t e = 0; e < w.size(); ++e) w[e] = base_weight_[e] + shift;
  return out;
}

StepKernel StepKernel::reversed() const {
  struct Rev {
    Node source;
    Node target;
    EdgeIndex original;
  };
  std::vector<Rev> edges(static_cast<std::size_t>(graph_.edge_count()));
  for (EdgeIndex e = 0; e < graph_.edge_count(); ++e) {
    edges[e] = {lattice_.reversed(graph_.target(e)), lattice_.reversed(graph_.source(e)), e};
  }
  std::sort(edges.begin(), edges.end(), [](const Rev& a, const Rev& b) {
    return a.source != b.source ? a.source < b.source : a.target < b.target;
  });
  const int d = lattice_.dim();
  std::vector<EdgeIndex> offset(static_cast<std::size_t>(lattice_.node_count()) + 1, 0);
  std::vector<Node> target(edges.size());
  std::vector<double> weight(edges.size());
  StepKernel out;
  out.lattice_ = lattice_;
  out.k_ = k_;
  out.reversed_ = !reversed_;
  out.base_weight_.resize(edges.size());
  out.lift_.resize(edges.size() * d);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto e = edges[i].original;
    ++offset[edges[i].source + 1];
    target[i] = edges[i].target;
    weight[i] = graph_.weight(e);
    out.base_weight_[i] = base_weight_[e];
    for (int c = 0; c < d; ++c) out.lift_[i * d + c] = -lift_[e * d + c];
  }
  for (std::size_t v = 0; v + 1 < offset.size(); ++v) offset[v + 1] += offset[v];
  out.graph_ = Digraph::from_sorted_csr(std::move(offset), std::move(target), std::move(weight));
  return out;
}

std::size_t StepKernel::memory_bytes() const {
  const auto e = static_cast<std::size_t>(graph_.edge_count());
  const auto v = static_cast<std::size_t>(lattice_.node_count());
  return e * (3 * sizeof(double) + 2 * sizeof(Node) + sizeof(EdgeIndex) +
              lattice_.dim() * sizeof(int)) +
         2 * (v + 1) * sizeof(EdgeIndex);
}

std::size_t estimate_kernel_bytes(const Lattice& lattice) {
  const std::size_t per_dim = std::min(2 * lattice.radius() + 1, lattice.cells());
  std::size_t per_source = 1;
  for (int i = 0; i < lattice.dim(); ++i) per_source *= per_dim;
  const std::size_t e = per_source * static_cast<std::size_t>(lattice.node_count());
  const std::size_t v = static_cast<std::size_t>(lattice.node_count());
  return e * (3 * sizeof(double) + 2 * sizeof(Node) + sizeof(EdgeIndex) +
              lattice.dim() * sizeof(int)) +
         2 * (v + 1) * sizeof(EdgeIndex);
}

namespace {

// Shared builder: fills edges per source node in parallel. `edge_fn` returns
// {base weight, lift} for a (source, target cell) pair, weight +inf if absent.
StepKernel assemble(const Lattice& lattice,
                    const std::function<StepWeight(Node, int, int)>& edge_fn) {
  const int d = lattice.dim();
  const auto residues = reachable_residues(lattice.cells(), lattice.radius());
  std::vector<std::vector<int>> offsets(d, residues);
  std::vector<std::vector<int>> shifts;
  for_each_product(offsets, [&](std::span<const int> s) { shifts.emplace_back(s.begin(), s.end()); });
  const std::size_t per_source = shifts.size();
  const std::size_t v = static_cast<std::size_t>(lattice.node_count());

  std::vector<std::vector<int>> target_cells(v);
  std::vector<std::vector<StepWeight>> weights(v);
  parallel_for(v, [&](std::size_t n) {
    const Node source = static_cast<Node>(n);
    const int cell = lattice.cell_of(source);
    std::vector<int> cells;
    cells.reserve(per_source);
    for (const auto& s : shifts) cells.push_back(lattice.shifted_cell(cell, s));
    std::sort(cells.begin(), cells.end());
    auto& out = weights[n];
    auto& tc = target_cells[n];
    for (int y : cells) {
      auto w = edge_fn(source, cell, y);
      if (w.weight < kInf) {
        tc.push_back(y);
        out.push_back(std::move(w));
      }
    }
  });

  std::vector<EdgeIndex> offset(v + 1, 0);
  for (std::size_t n = 0; n < v; ++n) offset[n + 1] = offset[n] + weights[n].size();
  const auto e_count = static_cast<std::size_t>(offset[v]);
  std::vector<Node> target(e_count);
  std::vector<double> weight(e_count);
  StepKernel::Parts parts;
  parts.base_weight.resize(e_count);
  parts.lift.resize(e_count * d);
  for (std::size_t n = 0; n < v; ++n) {
    const int next_layer = (lattice.layer_of(static_cast<Node>(n)) + 1) % lattice.layers();
    for (std::size_t i = 0; i < weights[n].size(); ++i) {
      const std::size_t e = offset[n] + i;
      target[e] = lattice.node(target_cells[n][i], next_layer);
      weight[e] = weights[n][i].weight;
      parts.base_weight[e] = weights[n][i].weight;
      for (int c = 0; c < d; ++c) parts.lift[e * d + c] = weights[n][i].lift[c];
    }
  }
  parts.graph = Digraph::from_sorted_csr(std::move(offset), std::move(target), std::move(weight));
  return StepKernel::from_parts(lattice, 0.0, std::move(parts));
}

}  // namespace

StepKernel StepKernel::from_parts(const Lattice& lattice, double k, Parts parts) {
  StepKernel out;
  out.lattice_ = lattice;
  out.k_ = k;
  out.graph_ = std::move(parts.graph);
  out.base_weight_ = std::move(parts.base_weight);
  out.lift_ = std::move(parts.lift);
  return out;
}

StepKernel build_step_kernel(const LagrangianSpec& spec, const Lattice& lattice, double k,
                             std::size_t memory_cap_bytes) {
  spec.validate();
  if (spec.dim != lattice.dim()) {
    throw ConfigError("lattice.dim (" + std::to_string(lattice.dim()) +
                      ") does not match model.dim (" + std::to_string(spec.dim) + ")");
  }
  const std::size_t estimate = estimate_kernel_bytes(lattice);
  if (estimate > memory_cap_bytes) {
    throw ConfigError("kernel needs about " + std::to_string(estimate) +
                      " bytes, above limits.memory_cap_bytes=" + std::to_string(memory_cap_bytes));
  }
  StepKernel base = assemble(lattice, [&](Node source, int x_cell, int y_cell) {
    return step_weight(spec, lattice, x_cell, y_cell, lattice.layer_of(source), 0.0);
  });
  return k == 0.0 ? base : base.with_offset(k);
}

StepKernel build_custom_kernel(const Lattice& lattice,
                               const std::function<double(Node, std::span<const int>)>& weight) {
  return assemble(lattice, [&](Node source, int x_cell, int y_cell) {
    const auto xi = lattice.cell_index(x_cell);
    const auto yi = lattice.cell_index(y_cell);
    std::vector<std::vector<int>> choices(lattice.dim());
    for (int i = 0; i < lattice.dim(); ++i) {
      choices[i] = lifts_for_residue(mod(yi[i] - xi[i], lattice.cells()), lattice.cells(),
                                     lattice.radius());
    }
    StepWeight best{kInf, {}};
    for_each_product(choices, [&](std::span<const int> lift) {
      const double w = weight(source, lift);
      if (w < best.weight) best = {w, std::vector<int>(lift.begin(), lift.end())};
    });
    return best;
  });
}

void save_kernel(const std::filesystem::path& path, const StepKernel& kernel,
                 const std::string& config_hash) {
  const auto& lat = kernel.lattice();
  const auto& g = kernel.graph();
  std::string buf;
  buf.append(kMagic, sizeof(kMagic));
  put(buf, kFormatVersion);
  put(buf, static_cast<std::uint32_t>(config_hash.size()));
  buf.append(config_hash);
  put(buf, static_cast<std::uint32_t>(lat.cells()));
  put(buf, static_cast<std::uint32_t>(lat.layers()));
  put(buf, static_cast<std::uint32_t>(lat.dim()));
  put(buf, kernel.k());
  put(buf, lat.spec().v_max);
  put(buf, static_cast<std::uint32_t>(lat.radius()));
  put(buf, static_cast<std::uint8_t>(kernel.is_reversed()));
  put(buf, static_cast<std::uint64_t>(g.edge_count()));
  for (Node v = 0; v <= lat.node_count(); ++v) {
    put(buf, static_cast<std::uint64_t>(v < lat.node_count() ? g.out_begin(v) : g.edge_count()));
  }
  for (EdgeIndex e = 0; e < g.edge_count(); ++e) {
    put(buf, static_cast<std::int32_t>(g.target(e)));
    for (int s : kernel.lift(e)) put(buf, static_cast<std::int32_t>(s));
    put(buf, kernel.base_weight(e));
    put(buf, kernel.weight(e));
  }
  buf.append(sha256_raw(buf));
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("kernel cache: cannot write " + tmp);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw std::runtime_error("kernel cache: write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

StepKernel load_kernel(const std::filesystem::path& path, std::string* config_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("kernel cache: cannot read " + path.string());
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (data.size() < sizeof(kMagic) + 32) throw std::runtime_error("kernel cache: truncated file");
  const std::string_view payload(data.data(), data.size() - 32);
  if (sha256_raw(payload) != std::string_view(data).substr(data.size() - 32)) {
    throw std::runtime_error("kernel cache: digest mismatch");
  }
  std::string_view buf = payload;
  if (buf.substr(0, sizeof(kMagic)) != std::string_view(kMagic, sizeof(kMagic))) {
    throw std::runtime_error("kernel cache: bad magic");
  }
  buf.remove_prefix(sizeof(kMagic));
  if (take<std::uint32_t>(buf) != kFormatVersion) {
    throw std::runtime_error("kernel cache: unsupported format version");
  }
  const auto hash_len = take<std::uint32_t>(buf);
  if (buf.size() < hash_len) throw std::runtime_error("kernel cache: truncated file");
  std::string hash(buf.substr(0, hash_len));
  buf.remove_prefix(hash_len);
  LatticeSpec spec;
  spec.cells = static_cast<int>(take<std::uint32_t>(buf));
  spec.layers = static_cast<int>(take<std::uint32_t>(buf));
  spec.dim = static_cast<int>(take<std::uint32_t>(buf));
  const double k = take<double>(buf);
  spec.v_max = take<double>(buf);
  const auto radius = take<std::uint32_t>(buf);
  const bool reversed = take<std::uint8_t>(buf) != 0;
  const auto e_count = take<std::uint64_t>(buf);
  Lattice lattice(spec);
  if (static_cast<std::uint32_t>(lattice.radius()) != radius) {
    throw std::runtime_error("kernel cache: radius mismatch");
  }
  std::vector<EdgeIndex> offset(static_cast<std::size_t>(lattice.node_count()) + 1);
  for (auto& o : offset) o = static_cast<EdgeIndex>(take<std::uint64_t>(buf));
  const int d = spec.dim;
  std::vector<Node> target(e_count);
  std::vector<double> weight(e_count);
  StepKernel::Parts parts;
  parts.base_weight.resize(e_count);
  parts.lift.resize(e_count * d);
  for (std::size_t e = 0; e < e_count; ++e) {
    target[e] = take<std::int32_t>(buf);
    for (int c = 0; c < d; ++c) parts.lift[e * d + c] = take<std::int32_t>(buf);
    parts.base_weight[e] = take<double>(buf);
    weight[e] = take<double>(buf);
  }
  if (!buf.empty()) throw std::runtime_error("kernel cache: trailing bytes");
  parts.graph = Digraph::from_sorted_csr(std::move(offset), std::move(target), std::move(weight));
  auto kernel = StepKernel::from_parts(lattice, k, std::move(parts));
  kernel.reversed_ = reversed;
  if (config_hash) *config_hash = std::move(hash);
  return kernel;
}

}  // namespace wkam
