#pragma once

/// @file config.hpp
/// @brief Run configuration: strict JSON parsing, defaults, canonical form
/// and content hash.
///
/// Sections: model, lattice, tolerances, limits, algorithms, outputs, seed.
/// Unknown keys are rejected so that a misspelt tolerance cannot silently
/// fall back to its default.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "wkam/lattice.hpp"
#include "wkam/minplus.hpp"
#include "wkam/model.hpp"

namespace wkam {

struct Tolerances {
  double tol_c = 1e-12;
  std::optional<double> epsilon_aubry;
  std::optional<double> epsilon_class;
  double residual_tol = 1e-10;
};

/// Step-count windows for the Peierls barrier. Durations are realized in
/// whole periods, so m_min and m_max are rounded to multiples of T.
struct Limits {
  long long m_min = 0;  // 0: 4096 periods
  long long m_max = 0;  // 0: m_min + 16 periods
  int window = 4;       // final periods that must show no improvement
  int iterations = 0;   // subsolution test cap; 0: 4 V
  std::size_t memory_cap_bytes = std::size_t(1) << 32;
};

struct Algorithms {
  CycleMethod cycle_method = CycleMethod::karp;
  /// Lattices with at most this many nodes get all-pairs barrier tables.
  int all_pairs_max_nodes = 4096;
};

struct Outputs {
  std::filesystem::path directory = "wkam_out";
  /// Empty: <directory>/kernel_cache.
  std::filesystem::path cache_directory;
};

struct RunConfig {
  LagrangianSpec model;
  LatticeSpec lattice;
  bool v_max_defaulted = false;
  Tolerances tolerances;
  Limits limits;
  Algorithms algorithms;
  Outputs outputs;
  std::uint64_t seed = 0;

  /// Sorted-key JSON with every default filled in. Loading it back yields
  /// the same text.
  std::string canonical() const;
  /// SHA-256 of the canonical form without the outputs section, which does
  /// not affect any computed value.
  std::string hash() const;
  /// SHA-256 identifying the model and lattice only (the kernel cache key).
  std::string kernel_hash() const;

  /// Barrier engine options derived from the limits.
  int min_periods() const;
  int window_periods() const;
  int subsolution_iterations() const;
  std::filesystem::path cache_directory() const;
};

/// Parses and validates JSON text; throws ConfigError naming the offending
/// field.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace wkam
