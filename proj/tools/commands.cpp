#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "drsvm/check.hpp"

namespace drsvm::cli {

namespace {

using json = nlohmann::json;

std::string read_file(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error(std::string("cannot open ") + what + " '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json parse_json(const std::string& text, const std::string& where) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw config_error(where + ": " + e.what());
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw data_error("cannot write '" + path + "'");
  return f;
}

void finish_out(std::ofstream& f, const std::string& path) {
  f.flush();
  if (!f) throw data_error("write failed for '" + path + "'");
}

std::string synthetic_to_string(const SyntheticSpec& s) {
  return "n=" + std::to_string(s.n) + ",d=" + std::to_string(s.d) + ",sigma=" + format_double(s.sigma);
}

std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("DRSVM_SEED");
  if (!v || !*v) return std::nullopt;
  std::uint64_t seed = 0;
  const std::string s(v);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw config_error("DRSVM_SEED: not an unsigned integer");
  return seed;
}

Iterate load_init(const std::string& path, std::size_t d) {
  const json j = parse_json(read_file(path, "init file"), "init");
  std::vector<double> w;
  double lam = 0;
  try {
    w = j.at("w").get<std::vector<double>>();
    lam = j.at("lambda").get<double>();
  } catch (const json::exception& e) {
    throw data_error(std::string("init: ") + e.what());
  }
  if (w.size() != d)
    throw dimension_error("init: w has length " + std::to_string(w.size()) + ", data has d = " + std::to_string(d));
  return {Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size())), lam};
}

int report(std::ostream& err, const char* kind, const std::exception& e, int code) {
  err << "error (" << kind << "): " << e.what() << '\n';
  return code;
}

// Maps library exceptions to exit codes.
template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const config_error& e) {
    return report(err, "config", e, bad_config);
  } catch (const data_error& e) {
    return report(err, "data", e, bad_data);
  } catch (const numerical_error& e) {
    return report(err, "numerical", e, numerical_failure);
  } catch (const std::bad_alloc& e) {
    return report(err, "numerical", e, numerical_failure);
  }
}

}  // namespace

SyntheticSpec parse_synthetic(const std::string& text) {
  SyntheticSpec spec;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const std::size_t eq = item.find('=');
    if (eq == std::string::npos) throw config_error("synthetic: expected key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq), value = item.substr(eq + 1);
    auto number = [&](auto& target) {
      const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), target);
      if (ec != std::errc() || ptr != value.data() + value.size())
        throw config_error("synthetic: bad value for " + key + ": '" + value + "'");
    };
    if (key == "n") number(spec.n);
    else if (key == "d") number(spec.d);
    else if (key == "sigma") number(spec.sigma);
    else throw config_error("synthetic: unknown key '" + key + "' (n, d, sigma)");
  }
  if (spec.n < 1) throw config_error("synthetic: n must be >= 1");
  if (spec.d < 1) throw config_error("synthetic: d must be >= 1");
  if (!(spec.sigma >= 0) || !std::isfinite(spec.sigma)) throw config_error("synthetic: sigma must be >= 0");
  return spec;
}

void RunConfig::validate() const {
  problem.validate();
  if (data.empty() == !synthetic) throw config_error("data: give exactly one of --data and --synthetic");
  if (synthetic) {
    if (synthetic->n < 1 || synthetic->d < 1) throw config_error("synthetic: n and d must be >= 1");
    if (!(synthetic->sigma >= 0)) throw config_error("synthetic: sigma must be >= 0");
  }
  if (schedule) drsvm::validate(*schedule);
  if (ippa_schedule) drsvm::validate(*ippa_schedule);
  if (batch_size && *batch_size < 1) throw config_error("batch_size: must be >= 1");
  if (epochs < 0) throw config_error("epochs: must be >= 0");
  if (!(stall_tol >= 0) || !std::isfinite(stall_tol)) throw config_error("stall_tol: must be a finite value >= 0");
  if (target && !std::isfinite(*target)) throw config_error("target: must be finite");
  if (switch_epochs < 0) throw config_error("switch_epochs: must be >= 0");
  if (switch_tol && !(*switch_tol > 0)) throw config_error("switch_tol: must be > 0");
}

json to_json(const RunConfig& c) {
  json j;
  if (!c.data.empty()) j["data"] = c.data;
  if (c.synthetic) j["synthetic"] = synthetic_to_string(*c.synthetic);
  if (c.dim) j["dim"] = c.dim;
  j["q"] = to_string(c.problem.q);
  j["c"] = c.problem.c;
  j["kappa"] = c.problem.kappa;
  j["epsilon"] = c.problem.epsilon;
  j["algo"] = to_string(c.algo);
  if (c.schedule) j["schedule"] = to_string(*c.schedule);
  if (c.ippa_schedule) j["ippa_schedule"] = to_string(*c.ippa_schedule);
  if (c.batch_size) j["batch_size"] = *c.batch_size;
  j["epochs"] = c.epochs;
  j["seed"] = c.seed;
  j["stall_tol"] = c.stall_tol;
  j["shuffle"] = c.shuffle;
  if (c.target) j["target"] = *c.target;
  j["switch_epochs"] = c.switch_epochs;
  if (c.switch_tol) j["switch_tol"] = *c.switch_tol;
  else j["switch_tol"] = nullptr;
  j["timing"] = c.timing;
  if (!c.init.empty()) j["init"] = c.init;
  return j;
}

RunConfig config_from_json(const json& j, RunConfig c) {
  if (!j.is_object()) throw config_error("config: expected a JSON object");
  for (const auto& [key, v] : j.items()) {
    try {
      if (key == "data") c.data = v.get<std::string>(), c.synthetic.reset();
      else if (key == "synthetic") c.synthetic = parse_synthetic(v.get<std::string>()), c.data.clear();
      else if (key == "dim") c.dim = v.get<std::size_t>();
      else if (key == "q") c.problem.q = parse_norm(v.is_number() ? v.dump() : v.get<std::string>());
      else if (key == "c") c.problem.c = v.get<double>();
      else if (key == "kappa") c.problem.kappa = v.get<double>();
      else if (key == "epsilon") c.problem.epsilon = v.get<double>();
      else if (key == "algo") c.algo = parse_algorithm(v.get<std::string>());
      else if (key == "schedule") c.schedule = parse_schedule(v.get<std::string>());
      else if (key == "ippa_schedule") c.ippa_schedule = parse_schedule(v.get<std::string>());
      else if (key == "batch_size") c.batch_size = v.get<std::size_t>();
      else if (key == "epochs") c.epochs = v.get<long>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "stall_tol") c.stall_tol = v.get<double>();
      else if (key == "shuffle") c.shuffle = v.get<bool>();
      else if (key == "target") c.target = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
      else if (key == "switch_epochs") c.switch_epochs = v.get<long>();
      else if (key == "switch_tol") c.switch_tol = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
      else if (key == "timing") c.timing = v.get<bool>();
      else if (key == "init") c.init = v.get<std::string>();
      else throw config_error("config: unknown field '" + key + "'");
    } catch (const json::exception&) {
      throw config_error(key + ": wrong JSON type");
    }
  }
  return c;
}

Dataset load_run_data(const RunConfig& config) {
  if (config.synthetic) return gen_synthetic(config.synthetic->n, config.synthetic->d, config.synthetic->sigma, config.seed).data;
  std::string path = config.data;
  if (!std::filesystem::exists(path)) {
    if (const char* dir = std::getenv("DRSVM_DATA_DIR"); dir && *dir) {
      const auto alt = std::filesystem::path(dir) / path;
      if (std::filesystem::exists(alt)) path = alt.string();
    }
  }
  return load_dataset(path, config.dim);
}

RunOutcome execute(const RunConfig& config, const Dataset& data) {
  config.validate();
  const SchedulePreset preset = default_preset(config.problem.q);
  RunOptions opts;
  opts.epochs = config.epochs;
  opts.seed = config.seed;
  opts.shuffle = config.shuffle;
  opts.stall_tol = config.stall_tol;
  opts.target = config.target;
  opts.record_time = config.timing;
  const Iterate init = config.init.empty() ? zero_iterate(data.d()) : load_init(config.init, data.d());
  const std::size_t batch = config.batch_size.value_or(preset.batch_size);

  const auto start = std::chrono::steady_clock::now();
  RunOutcome out;
  switch (config.algo) {
    case Algorithm::isg:
      out.result = run_isg(data, config.problem, config.schedule.value_or(preset.isg), batch, init, opts);
      break;
    case Algorithm::ippa:
      out.result = run_ippa(data, config.problem, config.schedule.value_or(preset.ippa), init, opts);
      break;
    case Algorithm::hybrid: {
      SwitchRule rule;
      rule.max_isg_epochs = config.switch_epochs;
      rule.min_rel_improvement = config.switch_tol;
      out.result = run_hybrid(data, config.problem, config.schedule.value_or(preset.isg),
                              config.ippa_schedule.value_or(preset.ippa), batch, rule, init, opts);
      break;
    }
  }
  out.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

json result_json(const RunConfig& config, const SolveResult& r) {
  json j;
  j["algo"] = to_string(config.algo);
  j["q"] = to_string(config.problem.q);
  j["objective"] = r.trace.records.empty() ? json(nullptr) : json(r.trace.records.back().objective);
  j["lambda"] = r.x.lam;
  j["w"] = std::vector<double>(r.x.w.data(), r.x.w.data() + r.x.w.size());
  j["epochs"] = r.trace.records.size();
  j["status"] = to_string(r.trace.status);
  if (r.trace.switch_epoch) j["switch_epoch"] = *r.trace.switch_epoch;
  return j;
}

namespace {

// Options shared by solve and the JSON config; each is applied only when
// given on the command line so that --config values survive.
struct SolveFlags {
  std::string config, data, synthetic, q, algo, schedule, ippa_schedule, init, out, trace;
  std::size_t dim = 0, batch_size = 0;
  double c = 0, kappa = 0, epsilon = 0, stall_tol = 0, target = 0, switch_tol = 0;
  long epochs = 0, switch_epochs = 0;
  std::uint64_t seed = 0;
  bool shuffle = false, timing = false;
};

void add_solve_options(CLI::App* app, SolveFlags& f) {
  app->add_option("--config", f.config, "JSON run configuration; flags override its fields");
  app->add_option("--data", f.data, "LIBSVM data file (also looked up under $DRSVM_DATA_DIR)");
  app->add_option("--synthetic", f.synthetic, "synthetic data, e.g. n=1000,d=100,sigma=0.5");
  app->add_option("--dim", f.dim, "declared feature dimension");
  app->add_option("--q", f.q, "norm: 1, 2 or inf");
  app->add_option("--c", f.c, "ridge weight c >= 0");
  app->add_option("--kappa", f.kappa, "kappa >= 0");
  app->add_option("--epsilon", f.epsilon, "Wasserstein radius >= 0");
  app->add_option("--algo", f.algo, "isg, ippa or hybrid");
  app->add_option("--schedule", f.schedule, "step schedule (ISG for isg/hybrid, IPPA for ippa)");
  app->add_option("--ippa-schedule", f.ippa_schedule, "IPPA schedule for hybrid");
  app->add_option("--batch-size", f.batch_size, "ISG mini-batch size");
  app->add_option("--epochs", f.epochs, "epoch budget");
  app->add_option("--seed", f.seed, "seed for data generation and shuffling (DRSVM_SEED overrides)");
  app->add_option("--stall-tol", f.stall_tol, "relative objective change counted as a stall");
  app->add_flag("--shuffle", f.shuffle, "reshuffle the cyclic order every epoch");
  app->add_option("--target", f.target, "stop once the objective is at most this");
  app->add_option("--switch-epochs", f.switch_epochs, "hybrid: maximum ISG epochs");
  app->add_option("--switch-tol", f.switch_tol, "hybrid: relative improvement over 5 epochs that triggers the switch");
  app->add_flag("--timing", f.timing, "record wall time in the trace (breaks byte-identical traces)");
  app->add_option("--init", f.init, "warm start JSON with w and lambda");
  app->add_option("--out", f.out, "result JSON path (default stdout)");
  app->add_option("--trace", f.trace, "trace CSV path");
}

RunConfig build_config(CLI::App* app, const SolveFlags& f) {
  RunConfig c;
  if (!f.config.empty()) c = config_from_json(parse_json(read_file(f.config, "config file"), "config"), c);
  auto given = [&](const char* name) { return app->count(name) > 0; };
  if (given("--data")) c.data = f.data, c.synthetic.reset();
  if (given("--synthetic")) c.synthetic = parse_synthetic(f.synthetic), c.data.clear();
  if (given("--dim")) c.dim = f.dim;
  if (given("--q")) c.problem.q = parse_norm(f.q);
  if (given("--c")) c.problem.c = f.c;
  if (given("--kappa")) c.problem.kappa = f.kappa;
  if (given("--epsilon")) c.problem.epsilon = f.epsilon;
  if (given("--algo")) c.algo = parse_algorithm(f.algo);
  if (given("--schedule")) c.schedule = parse_schedule(f.schedule);
  if (given("--ippa-schedule")) c.ippa_schedule = parse_schedule(f.ippa_schedule);
  if (given("--batch-size")) c.batch_size = f.batch_size;
  if (given("--epochs")) c.epochs = f.epochs;
  if (given("--seed")) c.seed = f.seed;
  if (given("--stall-tol")) c.stall_tol = f.stall_tol;
  if (given("--shuffle")) c.shuffle = f.shuffle;
  if (given("--target")) c.target = f.target;
  if (given("--switch-epochs")) c.switch_epochs = f.switch_epochs;
  if (given("--switch-tol")) c.switch_tol = f.switch_tol;
  if (given("--timing")) c.timing = f.timing;
  if (given("--init")) c.init = f.init;
  c.out = f.out;
  c.trace = f.trace;
  if (auto s = env_seed()) c.seed = *s;
  c.validate();
  return c;
}

int cmd_solve(CLI::App* app, const SolveFlags& flags, std::ostream& out) {
  const RunConfig config = build_config(app, flags);
  const Dataset data = load_run_data(config);
  const RunOutcome run = execute(config, data);
  const std::string text = result_json(config, run.result).dump(2) + "\n";
  if (config.out.empty()) {
    out << text;
  } else {
    auto f = open_out(config.out);
    f << text;
    finish_out(f, config.out);
  }
  if (!config.trace.empty()) {
    auto f = open_out(config.trace);
    write_trace_csv(f, run.result.trace);
    finish_out(f, config.trace);
  }
  return ok;
}

struct GenFlags {
  std::size_t n = 1000, d = 100;
  double sigma = 0.5;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_gen(const GenFlags& f, std::ostream& out) {
  std::uint64_t seed = env_seed().value_or(f.seed);
  if (f.n < 1 || f.d < 1) throw config_error("gen: n and d must be >= 1");
  if (!(f.sigma >= 0) || !std::isfinite(f.sigma)) throw config_error("sigma: must be >= 0");
  const SyntheticData syn = gen_synthetic(f.n, f.d, f.sigma, seed);
  {
    auto file = open_out(f.out);
    write_libsvm(file, syn.samples);
    finish_out(file, f.out);
  }
  const std::string sidecar = f.out + ".json";
  json j{{"n", f.n},
         {"d", f.d},
         {"sigma", f.sigma},
         {"seed", seed},
         {"w_star", std::vector<double>(syn.w_star.data(), syn.w_star.data() + syn.w_star.size())}};
  auto file = open_out(sidecar);
  file << j.dump(2) << '\n';
  finish_out(file, sidecar);
  out << json{{"data", f.out}, {"sidecar", sidecar}}.dump() << '\n';
  return ok;
}

struct BenchFlags {
  std::string grid, out, best;
  unsigned jobs = 1;
};

struct BenchRow {
  std::size_t cell = 0;
  RunConfig config;
  double objective = std::numeric_limits<double>::infinity();
  double wall_ms = 0;
  long epochs = 0;
  std::string status;
};

std::vector<RunConfig> expand_grid(const json& spec) {
  if (!spec.is_object()) throw config_error("grid spec: expected a JSON object");
  RunConfig base;
  if (spec.contains("base")) base = config_from_json(spec.at("base"), base);
  if (!spec.contains("grid") || !spec.at("grid").is_object() || spec.at("grid").empty())
    throw config_error("grid spec: 'grid' must be a non-empty object of lists");
  for (const auto& [key, _] : spec.items())
    if (key != "base" && key != "grid") throw config_error("grid spec: unknown field '" + key + "'");
  std::vector<json> cells{json::object()};
  for (const auto& [key, values] : spec.at("grid").items()) {
    if (!values.is_array() || values.empty()) throw config_error("grid spec: '" + key + "' must be a non-empty list");
    std::vector<json> next;
    for (const json& cell : cells)
      for (const json& v : values) {
        json c = cell;
        c[key] = v;
        next.push_back(std::move(c));
      }
    cells = std::move(next);
  }
  std::vector<RunConfig> out;
  for (const json& cell : cells) {
    RunConfig c = config_from_json(cell, base);
    if (auto s = env_seed()) c.seed = *s;
    c.validate();
    out.push_back(std::move(c));
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + '"';
}

int cmd_bench(const BenchFlags& f, std::ostream& out, std::ostream& err) {
  if (f.jobs < 1) throw config_error("jobs: must be >= 1");
  const std::vector<RunConfig> configs = expand_grid(parse_json(read_file(f.grid, "grid spec"), "grid spec"));

  std::map<std::string, Dataset> datasets;
  auto data_key = [](const RunConfig& c) {
    return c.synthetic ? "syn:" + synthetic_to_string(*c.synthetic) + ":" + std::to_string(c.seed)
                       : "file:" + c.data + ":" + std::to_string(c.dim);
  };
  for (const RunConfig& c : configs)
    if (!datasets.count(data_key(c))) datasets.emplace(data_key(c), load_run_data(c));

  std::vector<BenchRow> rows(configs.size());
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  auto worker = [&] {
    for (std::size_t i; (i = next++) < configs.size();) {
      BenchRow& row = rows[i];
      row.cell = i;
      row.config = configs[i];
      try {
        const RunOutcome run = execute(configs[i], datasets.at(data_key(configs[i])));
        row.wall_ms = run.wall_ms;
        row.epochs = static_cast<long>(run.result.trace.records.size());
        row.status = to_string(run.result.trace.status);
        if (!run.result.trace.records.empty()) row.objective = run.result.trace.records.back().objective;
      } catch (const error& e) {
        row.status = "error";
        std::lock_guard lock(err_mu);
        err << "cell " << i << ": " << e.what() << '\n';
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned jobs = std::min<unsigned>(f.jobs, static_cast<unsigned>(configs.size()));
  for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::stable_sort(rows.begin(), rows.end(), [](const BenchRow& a, const BenchRow& b) { return a.objective < b.objective; });
  if (rows.front().status == "error") return numerical_failure;

  std::ostringstream csv;
  csv << "rank,cell,algo,q,schedule,ippa_schedule,batch_size,objective,wall_ms,epochs,epochs_to_stall,status\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const BenchRow& row = rows[r];
    const SchedulePreset preset = default_preset(row.config.problem.q);
    const Algorithm algo = row.config.algo;
    const StepSchedule first = row.config.schedule.value_or(algo == Algorithm::ippa ? preset.ippa : preset.isg);
    csv << r + 1 << ',' << row.cell << ',' << to_string(algo) << ',' << to_string(row.config.problem.q) << ','
        << csv_field(to_string(first)) << ','
        << (algo == Algorithm::hybrid ? csv_field(to_string(row.config.ippa_schedule.value_or(preset.ippa))) : "") << ','
        << (algo == Algorithm::ippa ? std::string() : std::to_string(row.config.batch_size.value_or(preset.batch_size)))
        << ',' << format_double(row.objective) << ',' << format_double(row.wall_ms) << ',' << row.epochs << ','
        << (row.status == "objective-stall" ? std::to_string(row.epochs) : "") << ',' << row.status << '\n';
  }
  const std::string best = to_json(rows.front().config).dump(2) + "\n";
  if (f.out.empty()) {
    out << csv.str();
  } else {
    auto file = open_out(f.out);
    file << csv.str();
    finish_out(file, f.out);
  }
  if (!f.best.empty()) {
    auto file = open_out(f.best);
    file << best;
    finish_out(file, f.best);
  } else if (!f.out.empty()) {
    out << best;
  }
  return ok;
}

std::string trimmed(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t\r\n") - first + 1);
}

struct CheckFlags {
  CheckOptions opts;
  std::string replay;
};

int cmd_check(CheckFlags f, std::ostream& out) {
  if (auto s = env_seed()) f.opts.seed = *s;
  for (long v : {f.opts.projection_inputs, f.opts.grid_inputs, f.opts.prox_instances, f.opts.totality_instances,
                 f.opts.secant_instances, f.opts.d1_instances})
    if (v < 0) throw config_error("check: instance counts must be >= 0");
  if (f.opts.oracle_iters < 1) throw config_error("oracle-iters: must be >= 1");
  const std::vector<PropertyResult> results =
      f.replay.empty() ? run_all_checks(f.opts) : replay_instance(trimmed(read_file(f.replay, "replay file")), f.opts);
  bool all = true;
  for (const PropertyResult& r : results) {
    all = all && r.passed;
    out << (r.passed ? "PASS " : "FAIL ") << r.name << " checked=" << r.checked << " failed=" << r.failed
        << " worst=" << format_double(r.worst);
    if (!r.passed && !r.detail.empty()) out << " detail=\"" << r.detail << '"';
    out << '\n';
    if (!r.passed && !r.failing_instance.empty()) out << "  instance " << r.failing_instance << '\n';
  }
  out << (all ? "all properties passed" : "property failures") << '\n';
  return all ? ok : check_failed;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Wasserstein distributionally robust SVM solvers"};
  app.require_subcommand(1);

  SolveFlags solve_flags;
  CLI::App* solve = app.add_subcommand("solve", "train with ISG, IPPA or the hybrid scheme");
  add_solve_options(solve, solve_flags);

  GenFlags gen_flags;
  CLI::App* gen = app.add_subcommand("gen", "write a synthetic LIBSVM data set plus <out>.json with w*");
  gen->add_option("--n", gen_flags.n, "samples");
  gen->add_option("--d", gen_flags.d, "features");
  gen->add_option("--sigma", gen_flags.sigma, "label noise standard deviation");
  gen->add_option("--seed", gen_flags.seed, "seed (DRSVM_SEED overrides)");
  gen->add_option("--out", gen_flags.out, "output path")->required();

  BenchFlags bench_flags;
  CLI::App* bench = app.add_subcommand("bench", "run a grid of configurations and rank them");
  bench->add_option("--grid", bench_flags.grid, "JSON grid spec: {\"base\": {...}, \"grid\": {field: [values]}}")
      ->required();
  bench->add_option("--out", bench_flags.out, "leaderboard CSV path (default stdout)");
  bench->add_option("--best", bench_flags.best, "best configuration JSON path (default stdout when --out is set)");
  bench->add_option("--jobs", bench_flags.jobs, "concurrent cells");

  CheckFlags check_flags;
  CLI::App* check = app.add_subcommand("check", "randomized oracle and invariant suites");
  check->add_option("--seed", check_flags.opts.seed, "seed (DRSVM_SEED overrides)");
  check->add_option("--projection-inputs", check_flags.opts.projection_inputs, "projection inputs per norm");
  check->add_option("--grid-inputs", check_flags.opts.grid_inputs, "grid-certified projections per norm");
  check->add_option("--prox-instances", check_flags.opts.prox_instances, "oracle instances per (q, c)");
  check->add_option("--oracle-iters", check_flags.opts.oracle_iters, "subgradient oracle iterations");
  check->add_option("--totality-instances", check_flags.opts.totality_instances, "cascade instances per norm");
  check->add_option("--secant-instances", check_flags.opts.secant_instances, "secant instances");
  check->add_option("--d1-instances", check_flags.opts.d1_instances, "d = 1 agreement instances");
  check->add_flag("--fault-case5", check_flags.opts.fault_all_active_lambda,
                  "inject a wrong lambda in the all-pieces-active case");
  check->add_option("--replay", check_flags.replay, "re-check one serialized failing instance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    CLI::App* shown = &app;
    for (CLI::App* sub : {solve, gen, bench, check})
      if (sub->parsed()) shown = sub;
    out << shown->help();
    return ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return ok;
  } catch (const CLI::ParseError& e) {
    err << "error (config): " << e.what() << '\n';
    return bad_config;
  }

  return guarded(err, [&] {
    if (solve->parsed()) return cmd_solve(solve, solve_flags, out);
    if (gen->parsed()) return cmd_gen(gen_flags, out);
    if (bench->parsed()) return cmd_bench(bench_flags, out, err);
    return cmd_check(check_flags, out);
  });
}

}  // namespace drsvm::cli
