#ifndef DRSVM_TOOLS_COMMANDS_HPP
#define DRSVM_TOOLS_COMMANDS_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "drsvm/solver.hpp"

namespace drsvm::cli {

enum ExitCode : int { ok = 0, check_failed = 1, bad_config = 2, bad_data = 3, numerical_failure = 4 };

struct SyntheticSpec {
  std::size_t n = 1000;
  std::size_t d = 100;
  double sigma = 0.5;
};

/// "n=1000,d=100,sigma=0.5"; missing keys keep their defaults.
SyntheticSpec parse_synthetic(const std::string& text);

struct RunConfig {
  std::string data;                        ///< LIBSVM path; empty when synthetic
  std::optional<SyntheticSpec> synthetic;  ///< drawn with `seed`
  std::size_t dim = 0;                     ///< declared dimension, 0 = infer
  ProblemConfig problem;
  Algorithm algo = Algorithm::hybrid;
  std::optional<StepSchedule> schedule;       ///< ISG schedule for isg/hybrid, IPPA schedule for ippa
  std::optional<StepSchedule> ippa_schedule;  ///< hybrid only
  std::optional<std::size_t> batch_size;
  long epochs = 100;
  std::uint64_t seed = 0;
  double stall_tol = 1e-9;
  bool shuffle = false;
  std::optional<double> target;
  long switch_epochs = 50;
  std::optional<double> switch_tol = 1e-4;
  bool timing = false;  ///< record elapsed_ms in the trace
  std::string init;     ///< warm start: JSON with "w" and "lambda"
  std::string out;
  std::string trace;

  /// Throws config_error naming the offending field.
  void validate() const;
};

nlohmann::json to_json(const RunConfig& config);
/// Fields absent from `j` keep their value in `base`.
RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {});

/// Loads the data set named by the config.  A bare name that is not an
/// existing file is also looked up under $DRSVM_DATA_DIR.
Dataset load_run_data(const RunConfig& config);

struct RunOutcome {
  SolveResult result;
  double wall_ms = 0;
};

/// Runs the configured algorithm on `data`, filling in preset schedules.
RunOutcome execute(const RunConfig& config, const Dataset& data);

nlohmann::json result_json(const RunConfig& config, const SolveResult& result);

/// Full command line entry point; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace drsvm::cli

#endif  // DRSVM_TOOLS_COMMANDS_HPP
