#pragma once

// Command-line driver. Every flag has a same-named key in the optional JSON
// config file; flags given on the command line win over file values.

#include <cstdint>
#include <string>
#include <vector>

namespace oprisk::cli {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr std::uint64_t kDefaultSeed = 0x5EED0001;

struct RunConfig {
  std::string command;
  double rho = 2.0;
  double lambda = 2.0;
  std::string family = "gaussian";
  double c = 0.0;  // Weibull scale; 0 selects 1/rho
  std::string schedule = "exact-normalized";
  double a = 1.0;
  double b = 1.0;
  double c0 = 0.0;
  double q = 0.99;
  std::uint64_t n = 1024;
  std::vector<std::uint64_t> n_list;  // empty selects the command default
  std::uint64_t reps = 10000;
  std::uint64_t seed = kDefaultSeed;
  std::string output;  // empty writes the table to stdout
  std::string format = "csv";
  unsigned workers = 0;
  bool eq15_printed_sign = false;
  bool exponent_printed_forms = false;
  double rho_min = 1.5;
  double rho_max = 4.0;
  int steps = 251;
};

/// Validates every field against the module preconditions. Throws ConfigError.
void validate(const RunConfig& config);

/// N list used by a command when none is given.
std::vector<std::uint64_t> default_n_list(const std::string& command);

struct RunSummary {
  std::size_t rows;
  double elapsed;
};

/// Runs a validated config and writes its table. Throws on failure.
RunSummary run(const RunConfig& config);

/// Shortest decimal string that parses back to the same double.
std::string format_double(double value);

/// Full driver: parse, validate, run, report. Returns the process exit code
/// (0 success, 2 invalid input, 3 numerical failure, 4 I/O failure).
int main(int argc, char** argv);

}  // namespace oprisk::cli
