#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cardpen/symmat.hpp"

namespace cardpen::cli {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kParse = 2,
  kValidation = 3,
  kGuard = 4,
  kConvergence = 5,
};

enum class OutputFormat { Json, Csv };

struct GridSpec {
  double start = 0.0;
  double stop = 0.0;
  int count = 0;
};

/// "start:stop:count", inclusive linspace.
GridSpec parse_grid(const std::string& spec);

struct RunConfig {
  std::string command;
  std::string input;          // matrix file path
  std::string inline_matrix;  // "a,b;c,d"
  std::optional<double> rho;
  double tol = 1e-6;
  std::uint64_t seed = 0;
  int rounds = 64;
  std::optional<GridSpec> grid;
  OutputFormat format = OutputFormat::Json;
  bool screen = true;
  bool use_rank_k = false;
  int max_oracle_n = 20;
  bool with_oracle = false;
  bool table = false;

  // theta
  std::vector<long> m_values{2, 3, 10, 100};
  std::vector<double> gamma_values;  // empty: 0, 0.25, ..., 5
  std::int64_t mc_samples = 0;

  // gen
  long gen_n = 5;
  long gen_m = 5;
  std::string kind = "dense-psd";
  std::string output;
};

/// Matrix named by --input or --matrix.
SymMatrix load_input(const RunConfig& cfg);

/// Each command writes its report to `out` and returns the exit code.
/// Library errors propagate as exceptions; run_cli maps them to codes.
int cmd_solve(const RunConfig& cfg, std::ostream& out);
int cmd_oracle(const RunConfig& cfg, std::ostream& out);
int cmd_theta(const RunConfig& cfg, std::ostream& out);
int cmd_curve(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_check(const RunConfig& cfg, std::ostream& out);
int cmd_gen(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// The solve report as JSON (keys in emission order). Validates the report
/// invariants before returning; throws std::logic_error if one fails.
nlohmann::ordered_json solve_report(const RunConfig& cfg, int* exit_code = nullptr);

/// Full command line entry point: parses args (without the program name),
/// dispatches, and maps exceptions to the exit-code taxonomy.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cardpen::cli
