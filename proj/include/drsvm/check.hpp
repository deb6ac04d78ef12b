#ifndef DRSVM_CHECK_HPP
#define DRSVM_CHECK_HPP

// Randomized property suites over the projection, secant and prox layers,
// each compared against the brute-force oracles.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "drsvm/prox.hpp"

namespace drsvm {

struct CheckOptions {
  std::uint64_t seed = 1;
  long projection_inputs = 2000;  ///< per q
  long grid_inputs = 40;          ///< per q, d <= 3
  long prox_instances = 20;       ///< per (q, c)
  long oracle_iters = 200000;
  long totality_instances = 2000;  ///< per q
  long secant_instances = 1000;
  long d1_instances = 300;
  bool fault_all_active_lambda = false;
};

struct PropertyResult {
  std::string name;
  bool passed = true;
  long checked = 0;
  long failed = 0;
  double worst = 0;  ///< largest violation seen (property specific units)
  std::string detail;
  std::string failing_instance;  ///< JSON of the first failure, for replay
};

/// Random prox instance.  `extreme` draws kappa and alpha from
/// {0.01, 1, 100} x {1e-4, 1, 1e4}; otherwise both are log-normal.
ProxInstance<double> random_prox_instance(std::mt19937_64& rng, Norm q, int d, bool extreme);

std::string instance_to_json(const ProxInstance<double>& inst, double c);
ProxInstance<double> instance_from_json(const std::string& text, double& c);

/// Solves the prox step with the (c/2)||w||^2 term by rescaling, in the
/// instance's coordinates.
ConePoint<double> solve_prox_with_c(const ProxInstance<double>& inst, double c, const ProxOptions<double>& opts = {});

std::vector<PropertyResult> check_projections(const CheckOptions& opts);
std::vector<PropertyResult> check_secant(const CheckOptions& opts);
std::vector<PropertyResult> check_prox_oracle(const CheckOptions& opts);
std::vector<PropertyResult> check_prox_structure(const CheckOptions& opts);
std::vector<PropertyResult> check_d1_agreement(const CheckOptions& opts);

std::vector<PropertyResult> run_all_checks(const CheckOptions& opts);

/// Re-runs the applicable properties on one serialized failing instance
/// (kind "projection", "secant" or "prox").  Throws config_error on bad input.
std::vector<PropertyResult> replay_instance(const std::string& text, const CheckOptions& opts);

}  // namespace drsvm

#endif  // DRSVM_CHECK_HPP
