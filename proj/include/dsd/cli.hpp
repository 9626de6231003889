#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dsd::cli {

enum class Command { structure, weights, approx, elicit, prior, sample, verify, pipeline };

struct RunConfig {
  Command command = Command::verify;
  std::string config;     // JSON input (elicitation, parameters, fixtures)
  std::string out = ".";  // output directory
  std::optional<std::uint64_t> seed;
  std::size_t grid_points = 512;
  std::optional<std::size_t> mc_draws;
  int threads = 1;
  std::string recipe;     // "rw1 n", "rw2 n", "crw1 n", "crw2 n", "icar"
  std::string edges;      // edge list for icar
  int nodes = 0;          // icar node count (0: largest index)
  std::string design;     // "identity" or a matrix file
  std::string structure;  // matrix file
  int kappa = -1;         // declared rank deficiency for a structure file
  bool unconstrained = false;
  std::size_t count = 10000;
  std::string weights;    // weights JSON
};

/// Exit codes: 0 success, 1 validation error, 2 numerical failure.
int run(const RunConfig& config, std::ostream& log, std::ostream& err);

/// Parses argv (CLI11) and runs; prints usage on --help.
int main_entry(int argc, const char* const* argv, std::ostream& log, std::ostream& err);

std::string command_name(Command c);

}  // namespace dsd::cli
