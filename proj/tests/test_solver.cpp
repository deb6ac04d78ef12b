#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "drsvm/solver.hpp"

using namespace drsvm;
using Vec = Eigen::VectorXd;

namespace {

// optimum of the n=200, d=20, sigma=0.5, seed=1 synthetic problem (q=1,
// kappa=1, eps=0.1) computed offline as a linear program
constexpr double kSharpOptimum = 0.6609427963666671;

Dataset one_sample(double z) {
  Dataset d;
  d.z.resize(1, 1);
  d.z(0, 0) = z;
  return d;
}

ProblemConfig config(Norm q, double kappa, double eps, double c = 0) {
  ProblemConfig cfg;
  cfg.q = q;
  cfg.kappa = kappa;
  cfg.epsilon = eps;
  cfg.c = c;
  return cfg;
}

RunOptions quiet(long epochs) {
  RunOptions o;
  o.epochs = epochs;
  o.record_time = false;
  o.stall_window = 0;
  return o;
}

Iterate point(std::initializer_list<double> w, double lam) {
  Iterate x{Vec(static_cast<Eigen::Index>(w.size())), lam};
  Eigen::Index i = 0;
  for (double v : w) x.w[i++] = v;
  return x;
}

double gap_factor(const SolveTrace& trace, long window) {
  const auto& r = trace.records;
  const double g0 = r[r.size() - 1 - window].objective - kSharpOptimum;
  const double g1 = r.back().objective - kSharpOptimum;
  return std::pow(g0 / g1, 1.0 / double(window));
}

}  // namespace

TEST_CASE("objective examples") {
  const auto syn = gen_synthetic(50, 4, 0.3, 2);
  CHECK(objective(syn.data, config(Norm::l2, 1, 0.1), zero_iterate(4)) == doctest::Approx(1.0));
  const Dataset one = one_sample(1.0);
  CHECK(objective(one, config(Norm::l2, 2, 0.1), point({1}, 1)) == doctest::Approx(0.1));
  const double base = objective(syn.data, config(Norm::l2, 1, 0.1), point({0.6, 0.8, 0, 0}, 1));
  CHECK(objective(syn.data, config(Norm::l2, 1, 0.1, 2.0), point({0.6, 0.8, 0, 0}, 1)) == doctest::Approx(base + 1.0));
  CHECK_THROWS_AS(objective(one, config(Norm::l2, 1, 0.1), zero_iterate(3)), dimension_error);
}

TEST_CASE("subgradient examples") {
  const Dataset one = one_sample(1.0);
  const std::size_t idx[] = {0};
  auto g = subgradient_minibatch(one, idx, config(Norm::l2, 1, 0.1), zero_iterate(1));
  CHECK(g.w[0] == doctest::Approx(-1.0));
  CHECK(g.lam == doctest::Approx(0.1));

  // 1 < w'z = 2 < lam kappa - 1 = 4: only the zero piece is active
  g = subgradient_minibatch(one, idx, config(Norm::l2, 1, 0.1, 0.5), point({2}, 5));
  CHECK(g.w[0] == doctest::Approx(1.0));
  CHECK(g.lam == doctest::Approx(0.1));

  Dataset pair;
  pair.z.resize(2, 2);
  pair.z << 0.3, -0.1, -0.3, 0.1;
  const std::size_t both[] = {0, 1};
  g = subgradient_minibatch(pair, both, config(Norm::l1, 1, 0.2), point({0, 0}, 3));
  CHECK(g.w.norm() == doctest::Approx(0.0));
  CHECK(g.lam == doctest::Approx(0.2));
}

TEST_CASE("step sizes") {
  CHECK(step_size(Geometric{1, 0.9}, 2, 5) == doctest::Approx(0.81));
  CHECK(step_size(PolyHarmonic{2}, 4, 10) == doctest::Approx(0.05));
  CHECK(step_size(PolySqrt{1}, 4, 1) == doctest::Approx(0.5));
  CHECK(step_size(Constant{0.3}, 17, 100) == 0.3);
  CHECK_THROWS_AS(validate(StepSchedule{Geometric{1, 1.0}}), config_error);
  CHECK_THROWS_AS(validate(StepSchedule{PolySqrt{-1}}), config_error);
}

TEST_CASE("schedule strings round-trip") {
  for (const char* text : {"geometric:alpha0=0.5,rho=0.8", "harmonic:gamma=2", "sqrt:gamma=3", "constant:alpha=0.01"}) {
    const auto s = parse_schedule(text);
    CHECK(to_string(s) == text);
    CHECK(to_string(parse_schedule(to_string(s))) == to_string(s));
  }
  const auto g = std::get<Geometric>(parse_schedule("geometric:rho=0.5"));
  CHECK(g.alpha0 == 1.0);
  CHECK(g.rho == 0.5);
  CHECK_THROWS_AS(parse_schedule("cosine:alpha=1"), config_error);
  CHECK_THROWS_AS(parse_schedule("geometric:beta=1"), config_error);
  CHECK_THROWS_AS(parse_schedule("geometric:rho=abc"), config_error);
}

TEST_CASE("problem config validation names the field") {
  auto bad = config(Norm::l2, -1, 0.1);
  try {
    bad.validate();
    FAIL("expected config_error");
  } catch (const config_error& e) {
    CHECK(std::string(e.what()).find("kappa") != std::string::npos);
  }
  CHECK_THROWS_AS(config(Norm::l2, 1, -0.1).validate(), config_error);
  CHECK_THROWS_AS(config(Norm::l2, 1, 0.1, -2).validate(), config_error);
}

TEST_CASE("zero epochs leave the initial point untouched") {
  const auto syn = gen_synthetic(30, 3, 0.2, 4);
  const Iterate init = point({0.1, 0.2, -0.3}, 1);
  const auto a = run_isg(syn.data, config(Norm::l2, 1, 0.1), Geometric{}, 4, init, quiet(0));
  CHECK(a.x.w == init.w);
  CHECK(a.x.lam == init.lam);
  CHECK(a.trace.records.empty());
  const auto b = run_ippa(syn.data, config(Norm::l1, 1, 0.1), Geometric{}, init, quiet(0));
  CHECK(b.x.w == init.w);
  CHECK(b.trace.records.empty());
}

TEST_CASE("one-sample problem: both algorithms reach the hand optimum") {
  const Dataset one = one_sample(1.0);
  for (Norm q : {Norm::l1, Norm::l2, Norm::linf}) {
    CAPTURE(to_string(q));
    const auto cfg = config(q, 2, 0.1);
    const auto isg = run_isg(one, cfg, Geometric{0.5, 0.97}, 1, zero_iterate(1), quiet(600));
    CHECK(isg.trace.records.back().objective == doctest::Approx(0.1).epsilon(1e-6));
    const auto ippa = run_ippa(one, cfg, Geometric{1.0, 0.9}, zero_iterate(1), quiet(300));
    CHECK(std::abs(ippa.trace.records.back().objective - 0.1) <= 1e-6);
    CHECK(ippa.x.w[0] == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(ippa.x.lam == doctest::Approx(1.0).epsilon(1e-5));
  }
}

TEST_CASE("a huge prox step jumps to the single-sample minimizer") {
  const Dataset one = one_sample(1.0);
  const auto r = run_ippa(one, config(Norm::l2, 2, 0.1), Constant{1e8}, zero_iterate(1), quiet(1));
  CHECK(std::abs(objective(one, config(Norm::l2, 2, 0.1), r.x) - 0.1) <= 1e-6);
}

TEST_CASE("hybrid with degenerate switch budgets") {
  const auto syn = gen_synthetic(60, 5, 0.4, 5);
  const auto cfg = config(Norm::l1, 1, 0.1);
  const StepSchedule isg = Geometric{0.05, 0.9}, ippa = Geometric{0.02, 0.9};
  SwitchRule rule;
  rule.min_rel_improvement.reset();

  rule.max_isg_epochs = 0;
  const auto h0 = run_hybrid(syn.data, cfg, isg, ippa, 4, rule, zero_iterate(5), quiet(20));
  const auto pure_ippa = run_ippa(syn.data, cfg, ippa, zero_iterate(5), quiet(20));
  CHECK(h0.x.w == pure_ippa.x.w);
  CHECK(h0.x.lam == pure_ippa.x.lam);
  CHECK(h0.trace.switch_epoch == 0);

  rule.max_isg_epochs = 20;
  const auto h1 = run_hybrid(syn.data, cfg, isg, ippa, 4, rule, zero_iterate(5), quiet(20));
  const auto pure_isg = run_isg(syn.data, cfg, isg, 4, zero_iterate(5), quiet(20));
  CHECK(h1.x.w == pure_isg.x.w);
  CHECK(h1.x.lam == pure_isg.x.lam);
  CHECK(!h1.trace.switch_epoch.has_value());

  rule.max_isg_epochs = 7;
  const auto h2 = run_hybrid(syn.data, cfg, isg, ippa, 4, rule, zero_iterate(5), quiet(20));
  CHECK(h2.trace.switch_epoch == 7);
  REQUIRE(h2.trace.records.size() == 20);
  for (std::size_t i = 0; i < h2.trace.records.size(); ++i) CHECK(h2.trace.records[i].epoch == long(i + 1));
}

TEST_CASE("every recorded iterate is cone feasible and runs are deterministic") {
  const auto syn = gen_synthetic(80, 6, 0.5, 6);
  for (Norm q : {Norm::l1, Norm::l2, Norm::linf}) {
    for (double c : {0.0, 0.5}) {
      const auto cfg = config(q, 1, 0.1, c);
      RunOptions o = quiet(15);
      o.shuffle = true;
      o.seed = 9;
      const auto a = run_hybrid(syn.data, cfg, Geometric{0.05, 0.9}, Geometric{0.02, 0.9}, 8, SwitchRule{5}, zero_iterate(6), o);
      const auto b = run_hybrid(syn.data, cfg, Geometric{0.05, 0.9}, Geometric{0.02, 0.9}, 8, SwitchRule{5}, zero_iterate(6), o);
      CHECK(lp_norm<double>(a.x.w, q) <= a.x.lam + 1e-9);
      REQUIRE(a.trace.records.size() == b.trace.records.size());
      for (std::size_t i = 0; i < a.trace.records.size(); ++i) {
        CHECK(a.trace.records[i].objective == b.trace.records[i].objective);
        CHECK(a.trace.records[i].movement_sq == b.trace.records[i].movement_sq);
      }
      CHECK(a.x.w == b.x.w);
    }
  }
}

TEST_CASE("trace CSV layout") {
  SolveTrace t;
  t.records.push_back({1, 0.5, 2.0, 0.1, 0.25, 0});
  t.records.push_back({2, 0.4, 2.5, 0.09, 0.125, 0});
  t.status = SolveStatus::objective_stall;
  std::ostringstream out;
  write_trace_csv(out, t);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "epoch,objective,lambda,step_size,movement_sq,elapsed_ms");
  std::getline(in, line);
  CHECK(line.rfind("1,0.5,2,0.1,0.25,0", 0) == 0);
  std::getline(in, line);
  std::getline(in, line);
  CHECK(line == "# status=objective-stall");
}

TEST_CASE("stalled c = 0 runs keep lambda below 1/eps") {
  const auto syn = gen_synthetic(100, 8, 0.5, 10);
  for (Norm q : {Norm::l1, Norm::l2, Norm::linf}) {
    for (double eps : {0.1, 0.5}) {
      RunOptions o;
      o.epochs = 2000;
      o.record_time = false;
      const auto r = run_ippa(syn.data, config(q, 1, eps), Geometric{0.05, 0.95}, zero_iterate(8), o);
      CHECK(r.trace.status == SolveStatus::objective_stall);
      CHECK(r.x.lam <= 1.0 / eps + 1e-6);
    }
  }
}

TEST_CASE("one epoch of ISG satisfies the basic subgradient inequality") {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    const auto syn = gen_synthetic(10, 3, 0.5, 100 + t);
    const Norm q = t % 3 == 0 ? Norm::l1 : t % 3 == 1 ? Norm::l2 : Norm::linf;
    const auto cfg = config(q, 1.5, 0.2);
    const double alpha = 1e-3;
    Iterate x{Vec(3), 0}, y{Vec(3), 0};
    for (auto& v : x.w) v = normal(rng);
    for (auto& v : y.w) v = normal(rng);
    x.lam = lp_norm<double>(x.w, q) + std::abs(normal(rng));
    y.lam = lp_norm<double>(y.w, q) + std::abs(normal(rng));

    // replay the epoch sample by sample to observe the subgradient norms
    Iterate cur = x;
    double lhat = 0;
    for (std::size_t i = 0; i < syn.data.n(); ++i) {
      const std::size_t idx[] = {i};
      const auto g = subgradient_minibatch(syn.data, idx, cfg, cur);
      lhat = std::max(lhat, std::hypot(g.w.norm(), g.lam));
      cur = proj_cone<double>(q, Vec(cur.w - alpha * g.w), cur.lam - alpha * g.lam);
    }
    const auto r = run_isg(syn.data, cfg, Constant{alpha}, 1, x, quiet(1));
    CHECK((r.x.w - cur.w).norm() <= 1e-14);

    const double n = double(syn.data.n());
    auto dist2 = [&](const Iterate& a) { return (a.w - y.w).squaredNorm() + (a.lam - y.lam) * (a.lam - y.lam); };
    const double fx = objective(syn.data, cfg, x), fy = objective(syn.data, cfg, y);
    CHECK(dist2(r.x) <= dist2(x) - 2 * alpha * n * (fx - fy) + 2 * alpha * alpha * n * n * lhat * lhat + 1e-12);
  }
}

TEST_CASE("sharp instance: geometric steps give a geometric gap decrease") {
  const auto syn = gen_synthetic(200, 20, 0.5, 1);
  const auto cfg = config(Norm::l1, 1, 0.1);
  const auto r = run_ippa(syn.data, cfg, Geometric{0.1, 0.95}, zero_iterate(20), quiet(100));
  CHECK(r.trace.records.back().objective >= kSharpOptimum - 1e-9);
  CHECK(gap_factor(r.trace, 50) >= 1.05);

  const auto slow = run_ippa(syn.data, cfg, PolySqrt{0.1 * 200}, zero_iterate(20), quiet(100));
  CHECK(slow.trace.records.back().objective - kSharpOptimum > r.trace.records.back().objective - kSharpOptimum);
}

TEST_CASE("IPPA still converges with a hundredfold initial step") {
  const auto syn = gen_synthetic(200, 20, 0.5, 1);
  const auto cfg = config(Norm::l1, 1, 0.1);
  const auto base = run_ippa(syn.data, cfg, Geometric{0.1, 0.95}, zero_iterate(20), quiet(150));
  const auto big = run_ippa(syn.data, cfg, Geometric{10.0, 0.95}, zero_iterate(20), quiet(150));
  const double gap_base = base.trace.records.back().objective - kSharpOptimum;
  const double gap_big = big.trace.records.back().objective - kSharpOptimum;
  CHECK(std::isfinite(gap_big));
  CHECK(gap_big <= 1e-2);
  CHECK(gap_big <= 100 * std::max(gap_base, 1e-6));
}

TEST_CASE("presets and algorithm names") {
  for (Norm q : {Norm::l1, Norm::l2, Norm::linf}) {
    const auto p = default_preset(q);
    CHECK(p.batch_size >= 1);
    CHECK_NOTHROW(validate(p.isg));
    CHECK_NOTHROW(validate(p.ippa));
  }
  CHECK(parse_algorithm("ippa") == Algorithm::ippa);
  CHECK(std::string(to_string(Algorithm::hybrid)) == "hybrid");
  CHECK_THROWS_AS(parse_algorithm("sgd"), config_error);
}
