#ifndef MARGSIM_CLI_COMMANDS_HPP_
#define MARGSIM_CLI_COMMANDS_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "margsim/cli/config.hpp"
#include "margsim/exact_solver.hpp"

namespace margsim::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,  // config or usage error
  kExitResourceCap = 3,
  kExitInternal = 4,
};

struct Flags {
  std::uint64_t seed = 0;
  std::uint64_t reps = 100'000;
  std::vector<double> rhos;  // overrides the config's rho when nonempty
  std::string out;           // empty: standard output
  unsigned threads = 0;
  std::size_t state_cap = kDefaultStateCap;
  bool verbose_events = false;
  std::string dump_normalized;
};

inline const std::vector<std::string> kCommands = {"exact", "mc", "asymptotic", "couple-stats", "validate"};

// Fixed CSV headers per subcommand.
inline constexpr const char* kExactHeader = "rho,q_exact,states,residual";
inline constexpr const char* kMcHeader = "rho,q_mc,q_mc_stderr,reps,seed,wall_seconds";
inline constexpr const char* kCoupleHeader =
    "rho,event,witness,count,freq,freq_stderr,scaled_freq,scaled_freq_stderr,coefficient,"
    "cond_q,cond_q_stderr,cond_q_infty,cond_q_infty_stderr";
inline constexpr const char* kValidateHeader =
    "rho,q_mc,q_mc_stderr,q_exact,q_infty,q1,scaled_residual,scaled_residual_stderr,scaled_residual_exact,"
    "order_residual_exact";

// Runs one subcommand and returns its output document (CSV or JSON text).
// Event logs go to `log`. Throws the library's error types.
std::string execute(const std::string& command, const ModelConfig& config, const Flags& flags, std::ostream& log);

// Full command-line entry point: parses arguments, loads the config, runs
// the subcommand and writes the output atomically. Returns an ExitCode.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace margsim::cli

#endif  // MARGSIM_CLI_COMMANDS_HPP_
