#ifndef DRSVM_SOLVER_HPP
#define DRSVM_SOLVER_HPP

// Incremental solvers for
//
//   min_{||w||_q <= lam}  lam*eps + (1/n) sum_i max{1 - w'z_i, 1 + w'z_i - lam*kappa, 0}
//                         + (c/2) ||w||_2^2

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "drsvm/core.hpp"
#include "drsvm/data_io.hpp"
#include "drsvm/prox.hpp"

namespace drsvm {

struct ProblemConfig {
  Norm q = Norm::l2;
  double c = 0;
  double kappa = 1;
  double epsilon = 0.1;

  /// Throws config_error naming the offending field.
  void validate() const;
};

using Iterate = ConePoint<double>;

struct Geometric {
  double alpha0 = 1;
  double rho = 0.9;
};
struct PolyHarmonic {
  double gamma = 1;  ///< alpha_k = gamma / (n k)
};
struct PolySqrt {
  double gamma = 1;  ///< alpha_k = gamma / (n sqrt(k))
};
struct Constant {
  double alpha = 1;
};

using StepSchedule = std::variant<Geometric, PolyHarmonic, PolySqrt, Constant>;

void validate(const StepSchedule& schedule);
double step_size(const StepSchedule& schedule, long k, std::size_t n);

/// "geometric:alpha0=1,rho=0.9", "harmonic:gamma=2", "sqrt:gamma=1",
/// "constant:alpha=0.01".  Missing parameters keep their defaults.
StepSchedule parse_schedule(const std::string& text);
std::string to_string(const StepSchedule& schedule);

enum class SolveStatus { max_epochs, objective_stall, target_reached };
const char* to_string(SolveStatus status);

struct EpochRecord {
  long epoch = 0;
  double objective = 0;
  double lambda = 0;
  double step_size = 0;
  double movement_sq = 0;
  double elapsed_ms = 0;
};

struct SolveTrace {
  std::vector<EpochRecord> records;
  SolveStatus status = SolveStatus::max_epochs;
  std::optional<long> switch_epoch;  ///< hybrid only: last ISG epoch
};

struct RunOptions {
  long epochs = 100;
  std::uint64_t seed = 0;
  bool shuffle = false;  ///< reshuffle the cyclic order every epoch
  double stall_tol = 1e-9;
  int stall_window = 10;
  std::optional<double> target;  ///< stop once the objective is <= target
  bool record_time = true;       ///< false writes elapsed_ms = 0
  ProxOptions<double> prox{};
};

struct SolveResult {
  Iterate x;
  SolveTrace trace;
};

double objective(const Dataset& data, const ProblemConfig& config, const Iterate& x);

struct Subgradient {
  Eigen::VectorXd w;
  double lam = 0;
};

/// Averaged subgradient of the batch terms plus c*w.  Per sample the active
/// piece is the max of the three with ties going to the lowest index.
Subgradient subgradient_minibatch(const Dataset& data, std::span<const std::size_t> batch, const ProblemConfig& config,
                                  const Iterate& x);

/// One prox step on sample z with step alpha, including the eps and c terms.
Iterate ippa_step(const Eigen::Ref<const Eigen::VectorXd>& z, const ProblemConfig& config, const Iterate& x, double alpha,
                  const ProxOptions<double>& opts = {});

SolveResult run_isg(const Dataset& data, const ProblemConfig& config, const StepSchedule& schedule, std::size_t batch_size,
                    const Iterate& init, const RunOptions& opts);

SolveResult run_ippa(const Dataset& data, const ProblemConfig& config, const StepSchedule& schedule, const Iterate& init,
                     const RunOptions& opts);

struct SwitchRule {
  long max_isg_epochs = 50;
  /// switch once the relative improvement over `window` epochs drops below
  /// this; disabled when empty
  std::optional<double> min_rel_improvement = 1e-4;
  int window = 5;
};

/// ISG until the switch rule fires, then IPPA from the ISG iterate with its
/// schedule restarted at k = 1.
SolveResult run_hybrid(const Dataset& data, const ProblemConfig& config, const StepSchedule& isg_schedule,
                       const StepSchedule& ippa_schedule, std::size_t batch_size, const SwitchRule& rule,
                       const Iterate& init, const RunOptions& opts);

Iterate zero_iterate(std::size_t d);

void write_trace_csv(std::ostream& out, const SolveTrace& trace);

enum class Algorithm { isg, ippa, hybrid };
const char* to_string(Algorithm algo);
Algorithm parse_algorithm(const std::string& text);

/// Per-norm defaults chosen by coarse grid search on synthetic data.
struct SchedulePreset {
  StepSchedule isg;
  StepSchedule ippa;
  std::size_t batch_size;
};
SchedulePreset default_preset(Norm q);

}  // namespace drsvm

#endif  // DRSVM_SOLVER_HPP
