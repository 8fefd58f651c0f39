#pragma once

/// @file io.hpp
/// @brief CSV and JSON payloads. Numbers in CSV carry 12 significant digits;
/// JSON objects are emitted with sorted keys.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "wkam/barrier.hpp"
#include "wkam/critical.hpp"
#include "wkam/weakkam.hpp"

namespace wkam {

/// %.12g with -0 printed as 0 and infinities as inf / -inf.
std::string format_number(double x);

/// Parses "i1,...,id,layer" into a node; throws ConfigError when malformed
/// or out of range.
Node parse_node(const Lattice& lattice, const std::string& text);
std::string describe_node(const Lattice& lattice, Node n);

/// Columns: cell (cell_0.. in d > 1), layer, value. Rows in node order.
std::string value_function_csv(const Lattice& lattice, const ValueFunction& u);
/// Requires every node exactly once.
ValueFunction read_value_function_csv(const std::filesystem::path& path, const Lattice& lattice,
                                      SolutionKind kind);

/// Boundary file: columns cell..., layer, value.
std::vector<BoundaryValue> read_boundary_csv(const std::filesystem::path& path,
                                             const Lattice& lattice);

/// Columns: source cell, source layer, target cell, target layer, phi, h, converged.
std::string barrier_csv(const Lattice& lattice, Node source, std::span<const double> phi,
                        std::span<const double> h, bool converged);

std::string alpha_csv(std::span<const AlphaSample> samples);

/// Columns: step, cell, layer, velocity, step action. Row 0 is the start.
std::string path_csv(const Lattice& lattice, const StepKernel& kernel, const CalibratedPath& path);

/// JSON texts (sorted keys, two-space indent, trailing newline). `extra`
/// is a JSON object text merged in at the top level.
std::string critical_json(const Lattice& lattice, const CriticalResult& r, const std::string& extra);
std::string aubry_json(const Lattice& lattice, const AubryStructure& a, const std::string& extra);
std::string report_json(const VerificationReport& r, const std::string& extra);

/// Writes atomically-enough for our purposes (temp file, then rename).
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace wkam
