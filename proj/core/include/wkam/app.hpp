#pragma once

/// @file app.hpp
/// @brief Command dispatch behind the `wkam` tool: staged pipeline, kernel
/// cache, payload files and the run manifest.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "wkam/config.hpp"
#include "wkam/lattice.hpp"

namespace wkam {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUnconverged = 2;

inline constexpr const char* kVersion = "0.1.0";

struct CommandLine {
  std::string command;  // critical, alpha, barrier, aubry, solve, verify, selftest
  std::filesystem::path config;
  int threads = 0;  // 0: hardware concurrency

  double h_min = -1.0;
  double h_max = 1.0;
  int h_steps = 5;

  std::string source;  // "cell...,layer"
  std::filesystem::path boundary;
  bool forward = false;
  std::filesystem::path solution;
  std::string path_start;  // optional calibrated path from this node
  int path_periods = 20;
};

/// Runs one command. Payloads go to the output directory (overridden by the
/// WKAM_OUTPUT_DIR environment variable); progress and warnings go to `log`.
/// Returns kExitOk, kExitUnconverged or kExitError.
int run(const CommandLine& cmd, std::ostream& log);

enum class CacheStatus { hit, miss, rebuilt };

std::string_view to_string(CacheStatus s);

/// Loads the k kernel from the cache directory or builds and stores it. A
/// corrupt or mismatched file is rebuilt with a warning; an unwritable
/// directory only costs the cache.
StepKernel cached_kernel(const RunConfig& config, double k, CacheStatus* status, std::ostream& log);

/// Runs the exhaustive-oracle checks on N <= 6 lattices; one line per check.
bool selftest(std::ostream& out);

}  // namespace wkam
