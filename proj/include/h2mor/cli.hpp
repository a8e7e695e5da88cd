#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "h2mor/error.hpp"
#include "h2mor/optim.hpp"

namespace h2mor::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kConfigError = 1,      // bad flags, unreadable or malformed files
  kDataAssumption = 2,   // rank conditions or pencil conditions violated
  kNumericalError = 3,   // instability, singular solves, no descent step
};

int exit_code_for(ErrorCode code);

struct GenSystemArgs {
  int n = 100;
  int m = 2;
  double h = 0.1;
  std::uint64_t seed = 1;
  std::filesystem::path out;
};

struct GenDataArgs {
  std::filesystem::path system;
  int N = 102;
  double alpha = 0.0;
  std::uint64_t seed = 2;
  std::filesystem::path out;
};

struct ReduceArgs {
  std::filesystem::path ensemble;
  std::string init = "dmdc";  // dmdc | loewner | databt | file
  std::filesystem::path init_rom;
  int r = 6;
  OptimParams params;
  std::filesystem::path oracle;
  std::filesystem::path out;
  bool force = false;
  bool b_known = false;
  std::uint64_t seed = 3;
  int init_L = 10;
  int loewner_pairs = 30;
  int impulse_count = 10;
  std::filesystem::path freq_data;
  std::filesystem::path impulse_data;
};

struct EvaluateArgs {
  std::filesystem::path system;
  std::filesystem::path rom;
};

int cmd_gen_system(const GenSystemArgs& args, std::ostream& out);
int cmd_gen_data(const GenDataArgs& args, std::ostream& out);
int cmd_reduce(const ReduceArgs& args, std::ostream& out);
int cmd_evaluate(const EvaluateArgs& args, std::ostream& out);

/// history.csv: iter,f,D,step,backtracks,rel_h2_error,stable
void write_history_csv(const std::filesystem::path& path,
                       const std::vector<IterRecord>& history);

/// Inserts the flags stored in a --config JSON file right after the
/// subcommand name, so flags given on the command line (parsed later, last
/// value wins) take precedence.
std::vector<std::string> expand_config(const std::vector<std::string>& args);

/// Parses argv, dispatches and maps errors to exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace h2mor::cli
