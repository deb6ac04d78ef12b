#include "drsvm/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <ostream>
#include <random>

#include "drsvm/epigraph.hpp"

namespace drsvm {

void ProblemConfig::validate() const {
  if (!(c >= 0) || !std::isfinite(c)) throw config_error("c: must be a finite value >= 0");
  if (!(kappa >= 0) || !std::isfinite(kappa)) throw config_error("kappa: must be a finite value >= 0");
  if (!(epsilon >= 0) || !std::isfinite(epsilon)) throw config_error("epsilon: must be a finite value >= 0");
}

void validate(const StepSchedule& schedule) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Geometric>) {
          if (!(s.alpha0 > 0) || !std::isfinite(s.alpha0)) throw config_error("alpha0: must be > 0");
          if (!(s.rho > 0 && s.rho < 1)) throw config_error("rho: must lie in (0, 1)");
        } else if constexpr (std::is_same_v<T, Constant>) {
          if (!(s.alpha > 0) || !std::isfinite(s.alpha)) throw config_error("alpha: must be > 0");
        } else {
          if (!(s.gamma > 0) || !std::isfinite(s.gamma)) throw config_error("gamma: must be > 0");
        }
      },
      schedule);
}

double step_size(const StepSchedule& schedule, long k, std::size_t n) {
  if (k < 1) throw config_error("step_size: epoch index must be >= 1");
  const double kk = static_cast<double>(k), nn = static_cast<double>(n);
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Geometric>) return s.alpha0 * std::pow(s.rho, kk);
        else if constexpr (std::is_same_v<T, PolyHarmonic>) return s.gamma / (nn * kk);
        else if constexpr (std::is_same_v<T, PolySqrt>) return s.gamma / (nn * std::sqrt(kk));
        else return s.alpha;
      },
      schedule);
}

StepSchedule parse_schedule(const std::string& text) {
  const std::size_t colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  std::map<std::string, double> params;
  if (colon != std::string::npos) {
    std::size_t pos = colon + 1;
    while (pos <= text.size()) {
      const std::size_t comma = std::min(text.find(',', pos), text.size());
      const std::string item = text.substr(pos, comma - pos);
      pos = comma + 1;
      if (item.empty()) continue;
      const std::size_t eq = item.find('=');
      if (eq == std::string::npos) throw config_error("schedule: expected key=value, got '" + item + "'");
      try {
        std::size_t used = 0;
        const std::string value = item.substr(eq + 1);
        params[item.substr(0, eq)] = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
      } catch (const std::logic_error&) {
        throw config_error("schedule: bad number in '" + item + "'");
      }
    }
  }
  auto take = [&](const char* key, double fallback) {
    auto it = params.find(key);
    if (it == params.end()) return fallback;
    const double v = it->second;
    params.erase(it);
    return v;
  };
  StepSchedule out;
  if (kind == "geometric") {
    Geometric g;
    g.alpha0 = take("alpha0", g.alpha0);
    g.rho = take("rho", g.rho);
    out = g;
  } else if (kind == "harmonic") {
    out = PolyHarmonic{take("gamma", 1)};
  } else if (kind == "sqrt") {
    out = PolySqrt{take("gamma", 1)};
  } else if (kind == "constant") {
    out = Constant{take("alpha", 1)};
  } else {
    throw config_error("schedule: unknown kind '" + kind + "' (geometric, harmonic, sqrt, constant)");
  }
  if (!params.empty()) throw config_error("schedule: unknown parameter '" + params.begin()->first + "' for " + kind);
  validate(out);
  return out;
}

std::string to_string(const StepSchedule& schedule) {
  return std::visit(
      [](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Geometric>)
          return "geometric:alpha0=" + format_double(s.alpha0) + ",rho=" + format_double(s.rho);
        else if constexpr (std::is_same_v<T, PolyHarmonic>) return "harmonic:gamma=" + format_double(s.gamma);
        else if constexpr (std::is_same_v<T, PolySqrt>) return "sqrt:gamma=" + format_double(s.gamma);
        else return "constant:alpha=" + format_double(s.alpha);
      },
      schedule);
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::max_epochs: return "max-epochs";
    case SolveStatus::objective_stall: return "objective-stall";
    case SolveStatus::target_reached: return "target-reached";
  }
  return "?";
}

const char* to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::isg: return "isg";
    case Algorithm::ippa: return "ippa";
    case Algorithm::hybrid: return "hybrid";
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& text) {
  if (text == "isg") return Algorithm::isg;
  if (text == "ippa") return Algorithm::ippa;
  if (text == "hybrid") return Algorithm::hybrid;
  throw config_error("algo: expected isg, ippa or hybrid, got '" + text + "'");
}

Iterate zero_iterate(std::size_t d) { return {Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d)), 0.0}; }

double objective(const Dataset& data, const ProblemConfig& config, const Iterate& x) {
  if (static_cast<std::size_t>(x.w.size()) != data.d())
    throw dimension_error("objective: iterate has length " + std::to_string(x.w.size()) + ", data has d = " +
                          std::to_string(data.d()));
  const Eigen::VectorXd margins = data.z * x.w;
  const double lk = x.lam * config.kappa;
  double sum = 0;
  for (Eigen::Index i = 0; i < margins.size(); ++i)
    sum += std::max({1.0 - margins[i], 1.0 + margins[i] - lk, 0.0});
  return x.lam * config.epsilon + sum / static_cast<double>(data.n()) + 0.5 * config.c * x.w.squaredNorm();
}

Subgradient subgradient_minibatch(const Dataset& data, std::span<const std::size_t> batch, const ProblemConfig& config,
                                  const Iterate& x) {
  if (batch.empty()) throw config_error("subgradient_minibatch: batch must be non-empty");
  Subgradient g{Eigen::VectorXd::Zero(x.w.size()), 0.0};
  const double lk = x.lam * config.kappa;
  for (std::size_t i : batch) {
    if (i >= data.n()) throw dimension_error("subgradient_minibatch: index out of range");
    const auto z = data.z.row(static_cast<Eigen::Index>(i));
    const double m = z.dot(x.w);
    const double h1 = 1.0 - m, h2 = 1.0 + m - lk;
    g.lam += config.epsilon;
    if (h1 >= h2 && h1 >= 0) {
      g.w -= z.transpose();
    } else if (h2 >= 0) {
      g.w += z.transpose();
      g.lam -= config.kappa;
    }
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  g.w *= inv;
  g.lam *= inv;
  g.w += config.c * x.w;
  return g;
}

Iterate ippa_step(const Eigen::Ref<const Eigen::VectorXd>& z, const ProblemConfig& config, const Iterate& x, double alpha,
                  const ProxOptions<double>& opts) {
  ProxInstance<double> inst;
  inst.z = z;
  inst.w_bar = x.w;
  inst.lam_bar = x.lam - alpha * config.epsilon;  // lam*eps folds into the lam center
  inst.alpha = alpha;
  inst.kappa = config.kappa;
  inst.q = config.q;
  if (config.c == 0) return solve_prox(inst, opts).point;
  const ProxInstance<double> scaled = rescale_for_c(inst, config.c);
  Iterate out = solve_prox(scaled, opts).point;
  out.lam *= scaled.cone_scale / inst.cone_scale;
  return out;
}

namespace {

class StallMonitor {
 public:
  StallMonitor(double tol, int window) : tol_(tol), window_(window) {}

  bool update(double f) {
    if (prev_) {
      const double rel = std::abs(f - *prev_) / std::max(std::abs(*prev_), 1e-300);
      quiet_ = rel < tol_ ? quiet_ + 1 : 0;
    }
    prev_ = f;
    return window_ > 0 && quiet_ >= window_;
  }

 private:
  double tol_;
  int window_;
  int quiet_ = 0;
  std::optional<double> prev_;
};

// Runs epochs until the budget, a stall or the target; `epoch` advances the
// iterate by one pass and returns the step size used.
class EpochDriver {
 public:
  EpochDriver(const Dataset& data, const ProblemConfig& config, const Iterate& init, const RunOptions& opts)
      : data_(data), config_(config), opts_(opts), x_(init), stall_(opts.stall_tol, opts.stall_window),
        start_(std::chrono::steady_clock::now()), rng_(opts.seed) {
    config.validate();
    if (opts.epochs < 0) throw config_error("epochs: must be >= 0");
    if (static_cast<std::size_t>(init.w.size()) != data.d()) throw dimension_error("init: length differs from data d");
    if (!cone_feasible(init, config.q, 1e-9)) throw config_error("init: must satisfy ||w||_q <= lam");
    order_.resize(data.n());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
  }

  bool done() const { return finished_ || static_cast<long>(trace_.records.size()) >= opts_.epochs; }
  long epochs_run() const { return static_cast<long>(trace_.records.size()); }
  Iterate& x() { return x_; }
  const std::vector<std::size_t>& order() const { return order_; }
  SolveTrace& trace() { return trace_; }

  /// Shuffles if requested, calls `pass`, records the epoch.
  void run_epoch(const std::function<double(Iterate&)>& pass) {
    if (opts_.shuffle) std::shuffle(order_.begin(), order_.end(), rng_);
    const Iterate before = x_;
    const double alpha = pass(x_);
    EpochRecord rec;
    rec.epoch = epochs_run() + 1;
    rec.objective = objective(data_, config_, x_);
    rec.lambda = x_.lam;
    rec.step_size = alpha;
    rec.movement_sq = (x_.w - before.w).squaredNorm() + (x_.lam - before.lam) * (x_.lam - before.lam);
    rec.elapsed_ms = opts_.record_time
                         ? std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count()
                         : 0.0;
    trace_.records.push_back(rec);
    if (opts_.target && rec.objective <= *opts_.target) {
      trace_.status = SolveStatus::target_reached;
      finished_ = true;
    } else if (stall_.update(rec.objective)) {
      trace_.status = SolveStatus::objective_stall;
      finished_ = true;
    }
  }

  SolveResult result() { return {x_, trace_}; }

 private:
  const Dataset& data_;
  const ProblemConfig& config_;
  const RunOptions& opts_;
  Iterate x_;
  StallMonitor stall_;
  std::chrono::steady_clock::time_point start_;
  std::mt19937_64 rng_;
  std::vector<std::size_t> order_;
  SolveTrace trace_;
  bool finished_ = false;
};

double isg_pass(const Dataset& data, const ProblemConfig& config, const StepSchedule& schedule, std::size_t batch_size,
                long k, const std::vector<std::size_t>& order, Iterate& x) {
  const double alpha = step_size(schedule, k, data.n());
  const std::span<const std::size_t> all(order);
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const auto batch = all.subspan(start, std::min(batch_size, order.size() - start));
    const Subgradient g = subgradient_minibatch(data, batch, config, x);
    x = proj_cone<double>(config.q, Eigen::VectorXd(x.w - alpha * g.w), x.lam - alpha * g.lam);
  }
  return alpha;
}

double ippa_pass(const Dataset& data, const ProblemConfig& config, const StepSchedule& schedule, long k,
                 const std::vector<std::size_t>& order, const ProxOptions<double>& prox, Iterate& x) {
  const double alpha = step_size(schedule, k, data.n());
  for (std::size_t i : order) x = ippa_step(data.z.row(static_cast<Eigen::Index>(i)).transpose(), config, x, alpha, prox);
  return alpha;
}

}  // namespace

SolveResult run_isg(const Dataset& data, const ProblemConfig& config, const StepSchedule& schedule, std::size_t batch_size,
                    const Iterate& init, const RunOptions& opts) {
  validate(schedule);
  if (batch_size < 1) throw config_error("batch_size: must be >= 1");
  EpochDriver driver(data, config, init, opts);
  while (!driver.done()) {
    const long k = driver.epochs_run() + 1;
    driver.run_epoch([&](Iterate& x) { return isg_pass(data, config, schedule, batch_size, k, driver.order(), x); });
  }
  return driver.result();
}

SolveResult run_ippa(const Dataset& data, const ProblemConfig& config, const StepSchedule& schedule, const Iterate& init,
                     const RunOptions& opts) {
  validate(schedule);
  EpochDriver driver(data, config, init, opts);
  while (!driver.done()) {
    const long k = driver.epochs_run() + 1;
    driver.run_epoch([&](Iterate& x) { return ippa_pass(data, config, schedule, k, driver.order(), opts.prox, x); });
  }
  return driver.result();
}

SolveResult run_hybrid(const Dataset& data, const ProblemConfig& config, const StepSchedule& isg_schedule,
                       const StepSchedule& ippa_schedule, std::size_t batch_size, const SwitchRule& rule,
                       const Iterate& init, const RunOptions& opts) {
  validate(isg_schedule);
  validate(ippa_schedule);
  if (batch_size < 1) throw config_error("batch_size: must be >= 1");
  if (rule.max_isg_epochs < 0) throw config_error("switch: max ISG epochs must be >= 0");
  if (rule.window < 1) throw config_error("switch: window must be >= 1");
  EpochDriver driver(data, config, init, opts);
  bool in_isg = rule.max_isg_epochs > 0;
  long switch_epoch = 0;
  std::optional<long> switched;
  if (!in_isg) switched = 0;
  while (!driver.done()) {
    const long k = driver.epochs_run() + 1;
    if (in_isg) {
      driver.run_epoch([&](Iterate& x) { return isg_pass(data, config, isg_schedule, batch_size, k, driver.order(), x); });
      const auto& recs = driver.trace().records;
      bool stop = k >= rule.max_isg_epochs;
      if (rule.min_rel_improvement && static_cast<long>(recs.size()) > rule.window) {
        const double old = recs[recs.size() - 1 - static_cast<std::size_t>(rule.window)].objective;
        const double rel = (old - recs.back().objective) / std::max(std::abs(old), 1e-300);
        stop = stop || rel < *rule.min_rel_improvement;
      }
      if (stop) {
        in_isg = false;
        switch_epoch = k;
        if (!driver.done()) switched = k;
      }
    } else {
      const long kk = k - switch_epoch;
      driver.run_epoch([&](Iterate& x) { return ippa_pass(data, config, ippa_schedule, kk, driver.order(), opts.prox, x); });
    }
  }
  SolveResult out = driver.result();
  out.trace.switch_epoch = switched;
  return out;
}

void write_trace_csv(std::ostream& out, const SolveTrace& trace) {
  out << "epoch,objective,lambda,step_size,movement_sq,elapsed_ms\n";
  for (const EpochRecord& r : trace.records)
    out << r.epoch << ',' << format_double(r.objective) << ',' << format_double(r.lambda) << ','
        << format_double(r.step_size) << ',' << format_double(r.movement_sq) << ',' << format_double(r.elapsed_ms)
        << '\n';
  if (trace.switch_epoch) out << "# switch_epoch=" << *trace.switch_epoch << '\n';
  out << "# status=" << to_string(trace.status) << '\n';
}

SchedulePreset default_preset(Norm q) {
  switch (q) {
    case Norm::l1: return {Geometric{0.03, 0.95}, Geometric{0.01, 0.9}, 8};
    case Norm::l2:
    case Norm::linf: return {Geometric{0.03, 0.95}, Geometric{0.01, 0.95}, 8};
  }
  throw config_error("unknown norm");
}

}  // namespace drsvm
