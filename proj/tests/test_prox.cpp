#include <doctest.h>

#include <random>

#include "drsvm/check.hpp"
#include "drsvm/oracles.hpp"
#include "drsvm/prox.hpp"

using namespace drsvm;
using Vec = Eigen::VectorXd;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

ProxInstance<double> instance(Norm q, Vec z, Vec w_bar, double lam_bar, double alpha, double kappa) {
  ProxInstance<double> inst;
  inst.q = q;
  inst.z = std::move(z);
  inst.w_bar = std::move(w_bar);
  inst.lam_bar = lam_bar;
  inst.alpha = alpha;
  inst.kappa = kappa;
  return inst;
}

void all_properties_pass(const std::vector<PropertyResult>& results) {
  REQUIRE(!results.empty());
  for (const auto& r : results) {
    CAPTURE(r.name);
    CAPTURE(r.detail);
    CAPTURE(r.failing_instance);
    CHECK(r.passed);
    CHECK(r.checked > 0);
  }
}

}  // namespace

TEST_CASE("hinge pieces") {
  const Vec z = vec({1.0, 0.0});
  auto h = eval_hinge_pieces<double>(vec({0, 0}), 0.0, z, 1.0);
  CHECK(h == std::array<double, 3>{1, 1, 0});
  h = eval_hinge_pieces<double>(vec({1, 0}), 2.0, z, 1.0);
  CHECK(h == std::array<double, 3>{0, 0, 0});
  h = eval_hinge_pieces<double>(vec({2, 0}), 0.0, z, 1.0);
  CHECK(h == std::array<double, 3>{-1, 3, 0});
  CHECK(hinge_value<double>(vec({2, 0}), 0.0, z, 1.0) == 3.0);
}

TEST_CASE("two-piece l2 subproblem with an inactive cone") {
  const auto r = ppa_l2<double>(vec({0.5}), 1.0, vec({1.0}), 0.0, 0.0);
  REQUIRE(r.has_value());
  CHECK(r->point.w[0] == doctest::Approx(0.0));
  CHECK(r->point.lam == doctest::Approx(1.0));
  CHECK(r->kkt.mu1 == doctest::Approx(0.5));
  CHECK(r->kkt.mu2 == 0.0);
}

TEST_CASE("two-piece l2 subproblem: returned roots satisfy the KKT system") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> normal(0.0, 1.0);
  long active = 0;
  for (int t = 0; t < 500; ++t) {
    Vec w_bar(3), z(3);
    for (auto& v : w_bar) v = 2 * normal(rng);
    for (auto& v : z) v = normal(rng);
    const double lam_bar = normal(rng), a = std::abs(normal(rng)), b = normal(rng);
    const auto r = ppa_l2<double>(w_bar, lam_bar, z, a, b);
    if (!r) continue;
    const auto& p = r->point;
    CHECK(r->kkt.mu2 >= 0.0);
    CHECK(p.w.norm() <= p.lam + 1e-9);
    CHECK(std::abs(p.w.dot(z) - a * p.lam - b) <= 1e-8 * (1 + std::abs(b) + a * p.lam));
    if (r->kkt.mu2 > 0) {
      ++active;
      CHECK(std::abs(p.w.norm() - p.lam) <= 1e-8 * (1 + p.lam));
    }
    const Vec gw = (p.w - w_bar) + r->kkt.mu1 * z + 2 * r->kkt.mu2 * p.w;
    const double gl = (p.lam - lam_bar) - a * r->kkt.mu1 - 2 * r->kkt.mu2 * p.lam;
    const double scale = 1 + w_bar.norm() + std::abs(lam_bar) + std::abs(r->kkt.mu1) * z.norm();
    CHECK(std::hypot(gw.norm(), gl) <= 1e-7 * scale);
  }
  CHECK(active > 0);
}

TEST_CASE("ball-hyperplane projection") {
  const Vec z = vec({1, 0});
  const Vec a = ball_hyperplane_l2<double>(1.0, 2.0, vec({0, 0}), z);
  CHECK((a - vec({1, 0})).norm() <= 1e-12);
  const Vec b = ball_hyperplane_l2<double>(1.0, 2.0, vec({0, 3}), z);
  CHECK((b - vec({1, std::sqrt(3.0)})).norm() <= 1e-10);
  CHECK(b.norm() == doctest::Approx(2.0));
  CHECK_THROWS_AS(ball_hyperplane_l2<double>(1.0, 0.5, vec({0, 0}), z), infeasible_error);
  CHECK_THROWS_AS(ball_hyperplane_l2<double>(1.0, 1.0, vec({0, 0}), vec({0, 0})), config_error);
}

TEST_CASE("ball-hyperplane outputs are feasible on random inputs") {
  std::mt19937_64 rng(22);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int t = 0; t < 1000; ++t) {
    Vec w_bar(4), z(4);
    for (auto& v : w_bar) v = 3 * normal(rng);
    for (auto& v : z) v = normal(rng);
    const double radius = std::abs(normal(rng)) + 0.1;
    const double b = 0.9 * radius * z.norm() * std::tanh(normal(rng));
    const Vec w = ball_hyperplane_l2<double>(b, radius, w_bar, z);
    CHECK(std::abs(w.dot(z) - b) <= 1e-10 * (1 + z.norm() * radius));
    CHECK(w.norm() <= radius * (1 + 1e-10));
  }
}

TEST_CASE("l2 prox: deep piece-3 instance returns the center") {
  const auto inst = instance(Norm::l2, vec({1}), vec({2}), 5.0, 1.0, 1.0);
  const auto r = prox_point_l2_detail(inst);
  CHECK(r.point.w[0] == doctest::Approx(2.0));
  CHECK(r.point.lam == doctest::Approx(5.0));
  CHECK(r.pattern == ActivePattern::piece3);
}

TEST_CASE("p(sigma) at zero with a feasible center") {
  SecantProblem<double> pb;
  pb.w_bar = vec({0.5, -0.25});
  pb.lam_bar = 2.0;
  pb.z = vec({1.0, 2.0});
  pb.a = 0.3;
  pb.b = -0.7;
  const auto e = p_sigma(0.0, pb);
  CHECK(e.residual == doctest::Approx(pb.w_bar.dot(pb.z) - pb.a * pb.lam_bar - pb.b));
  CHECK(e.point.w == pb.w_bar);
}

TEST_CASE("p(sigma) is non-increasing and Lipschitz") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Norm q : {Norm::l1, Norm::linf}) {
    for (int t = 0; t < 200; ++t) {
      SecantProblem<double> pb;
      pb.q = q;
      pb.w_bar = Vec(4);
      pb.z = Vec(4);
      for (auto& v : pb.w_bar) v = 2 * normal(rng);
      for (auto& v : pb.z) v = normal(rng);
      pb.lam_bar = normal(rng);
      pb.a = std::abs(normal(rng));
      pb.b = normal(rng);
      pb.tau_w = pb.tau_l = std::exp(normal(rng));
      double prev = p_sigma(0.0, pb).residual;
      for (int k = 1; k <= 9; ++k) {
        const double cur = p_sigma(k / 9.0, pb).residual;
        CHECK(cur <= prev + 1e-10);
        prev = cur;
      }
      const double lip = pb.tau_w * (pb.z.squaredNorm() + pb.a * pb.a);
      const double s = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      CHECK(std::abs(p_sigma(s + 1e-6, pb).residual - p_sigma(s, pb).residual) <= lip * 1e-6 * (1 + 1e-9) + 1e-15);
    }
  }
}

TEST_CASE("secant returns immediately when the constraint is inactive") {
  SecantProblem<double> pb;
  pb.w_bar = vec({0.1, 0.1});
  pb.lam_bar = 1.0;
  pb.z = vec({1, 1});
  pb.a = 1.0;
  pb.b = 0.0;
  std::vector<SecantState<double>> trace;
  const auto r = msa_secant(pb, 1e-10, 200, {}, &trace);
  CHECK(r.valid);
  CHECK(r.sigma == 0.0);
  CHECK(trace.empty());
}

TEST_CASE("secant brackets are nested and keep the sign invariant") {
  std::mt19937_64 rng(24);
  std::normal_distribution<double> normal(0.0, 1.0);
  long loops = 0;
  for (int t = 0; t < 500; ++t) {
    SecantProblem<double> pb;
    pb.q = t % 2 ? Norm::l1 : Norm::linf;
    pb.w_bar = Vec(5);
    pb.z = Vec(5);
    for (auto& v : pb.w_bar) v = 2 * normal(rng);
    for (auto& v : pb.z) v = normal(rng);
    pb.lam_bar = normal(rng);
    pb.a = std::abs(normal(rng));
    pb.b = normal(rng);
    pb.tau_w = pb.tau_l = std::exp(normal(rng));
    std::vector<SecantState<double>> trace;
    const auto r = msa_secant(pb, 1e-10, 200, {}, &trace);
    if (!r.valid) continue;
    CHECK(r.sigma >= 0.0);
    CHECK(r.sigma <= 1.0);
    if (trace.empty()) continue;
    ++loops;
    for (std::size_t i = 0; i < trace.size(); ++i) {
      const auto& s = trace[i];
      CHECK(s.sigma_l < s.sigma_u);
      CHECK(s.r_l < 0);
      CHECK(s.r_u > 0);
      CHECK(s.sigma >= s.sigma_l);
      CHECK(s.sigma <= s.sigma_u);
      if (i > 0) {
        CHECK(s.sigma_l >= trace[i - 1].sigma_l);
        CHECK(s.sigma_u <= trace[i - 1].sigma_u);
      }
    }
    CHECK(std::abs(p_sigma(r.sigma, pb).residual) <= 1e-10);
  }
  CHECK(loops > 50);
}

TEST_CASE("equality-constrained ball projection") {
  const Vec w = equality_ball_projection<double>(vec({0, 0}), vec({1, 0}), 1.0, 2.0, Norm::l1);
  CHECK((w - vec({1, 0})).norm() <= 1e-9);
  CHECK_THROWS_AS(equality_ball_projection<double>(vec({0, 0}), vec({1, 1}), 3.0, 1.0, Norm::linf), infeasible_error);
  const Vec v = equality_ball_projection<double>(vec({3, 0}), vec({1, 1}), 1.0, 1.0, Norm::l1);
  CHECK(v.lpNorm<1>() <= 1.0 + 1e-10);
  CHECK(v.dot(vec({1, 1})) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("l1 prox: deep piece-2 instance is accepted by the first case") {
  const auto inst = instance(Norm::l1, vec({1, 0}), vec({5, 0}), 5.0, 0.1, 0.1);
  const auto r = prox_point_l1_detail(inst);
  CHECK(r.cascade_step == 1);
  CHECK(r.pattern == ActivePattern::piece2);
  const auto expect = proj_cone_l1<double>(Vec(inst.w_bar - inst.alpha * inst.z), inst.lam_bar + inst.alpha * inst.kappa);
  CHECK((r.point.w - expect.w).norm() <= 1e-12);
  CHECK(r.point.lam == doctest::Approx(expect.lam));
}

TEST_CASE("prox never increases its objective over the projected center") {
  std::mt19937_64 rng(25);
  for (Norm q : {Norm::l1, Norm::l2, Norm::linf}) {
    for (int t = 0; t < 300; ++t) {
      const auto inst = random_prox_instance(rng, q, 1 + t % 6, t % 3 == 0);
      const auto x = solve_prox(inst).point;
      const auto center = proj_cone<double>(q, inst.w_bar, inst.lam_bar);
      CHECK(prox_objective(inst, x) <= prox_objective(inst, center) + 1e-9 * (1 + prox_objective(inst, center)));
      CHECK(lp_norm<double>(x.w, q) <= x.lam + 1e-12 * (1 + x.lam));
    }
  }
}

TEST_CASE("rescale_for_c") {
  const auto inst = instance(Norm::l2, vec({1, 2}), vec({4, -8}), 6.0, 1.0, 1.5);
  const auto same = rescale_for_c(inst, 0.0);
  CHECK(same.w_bar == inst.w_bar);
  CHECK(same.kappa == inst.kappa);
  CHECK(same.weight_w == 1.0);
  const auto r = rescale_for_c(inst, 3.0);
  CHECK(r.kappa == doctest::Approx(3.0));
  CHECK((r.w_bar - vec({1, -2})).norm() <= 1e-15);
  CHECK(r.lam_bar == doctest::Approx(3.0));
  CHECK(r.weight_w == doctest::Approx(4.0));
  CHECK(r.weight_lam == doctest::Approx(4.0));
  CHECK(r.cone_scale == doctest::Approx(2.0));
  CHECK_THROWS_AS(rescale_for_c(inst, -1.0), config_error);
}

TEST_CASE("prox values agree with an independent conic solver") {
  struct Frozen {
    Norm q;
    double c;
    Vec z, w_bar;
    double lam_bar, alpha, kappa, optimum;
  };
  // optima computed offline with a second-order cone / LP interior point solver
  const Frozen cases[] = {
      {Norm::l1, 0.0, vec({-1.375395, 1.036659, 0.002883}), vec({-3.830882, -2.431082, -0.231626}), -1.618951, 0.342563, 0.42203, 32.223980311957},
      {Norm::l1, 0.0, vec({-1.314969, -0.936344, 2.201682}), vec({0.331248, -0.722094, -1.835696}), -2.961205, 0.055864, 0.732693, 115.292387215214},
      {Norm::l1, 1.0, vec({-0.533714, 2.19004, 0.033214}), vec({-1.962801, -1.742416, 3.848254}), -1.234433, 0.88833, 0.726569, 12.690424197756},
      {Norm::l1, 1.0, vec({0.503408, -0.31294, 0.747584}), vec({-2.156318, 1.856877, 0.627176}), 0.403496, 0.269386, 0.622946, 11.010058264472},
      {Norm::l2, 0.0, vec({-0.284008, -1.190215, 0.327387}), vec({1.292319, -0.339328, 1.770137}), -2.423995, 3.233579, 1.477863, 2.357778726924},
      {Norm::l2, 0.0, vec({-1.241575, -1.904112, -1.40432}), vec({0.096253, 4.112899, 2.307194}), 0.661302, 4.748264, 0.76789, 2.533992874185},
      {Norm::l2, 1.0, vec({-0.042769, -0.260405, 0.21791}), vec({0.038979, 0.280542, 0.992055}), 1.846022, 8.240765, 3.249685, 0.990059527803},
      {Norm::linf, 0.0, vec({0.857628, -0.949213, -1.223933}), vec({4.018243, 1.324478, -0.009322}), -0.871335, 2.899388, 1.903048, 2.111546450656},
      {Norm::linf, 0.0, vec({0.253183, -0.662462, -0.338442}), vec({-1.287203, 0.959551, -3.195725}), 1.013083, 1.445481, 0.50679, 1.668379489511},
      {Norm::linf, 1.0, vec({-0.301181, 0.04074, 0.630533}), vec({0.70797, 1.808963, 2.300556}), -0.963911, 1.811304, 1.001629, 3.031404249402},
      {Norm::linf, 1.0, vec({-0.302445, -0.791668, -0.437886}), vec({-1.594717, -0.320234, 0.097038}), 0.401381, 4.476187, 0.49404, 1.036381104759},
  };
  for (const auto& f : cases) {
    CAPTURE(to_string(f.q));
    CAPTURE(f.c);
    const auto inst = instance(f.q, f.z, f.w_bar, f.lam_bar, f.alpha, f.kappa);
    const auto x = solve_prox_with_c(inst, f.c);
    CHECK(lp_norm<double>(x.w, f.q) <= x.lam + 1e-12);
    CHECK(prox_objective_c(inst, x, f.c) == doctest::Approx(f.optimum).epsilon(1e-6));
  }
}

TEST_CASE("prox matches the subgradient oracle on random instances") {
  CheckOptions opts;
  opts.seed = 3;
  opts.prox_instances = 5;
  opts.oracle_iters = 100000;
  all_properties_pass(check_prox_oracle(opts));
}

TEST_CASE("cascade structure: totality, accepted patterns and KKT residuals") {
  CheckOptions opts;
  opts.seed = 4;
  opts.totality_instances = 500;
  all_properties_pass(check_prox_structure(opts));
}

TEST_CASE("d = 1: the three norms give the same prox") {
  CheckOptions opts;
  opts.seed = 5;
  opts.d1_instances = 200;
  all_properties_pass(check_d1_agreement(opts));
}

TEST_CASE("kappa = 0 never reaches the degenerate case") {
  std::mt19937_64 rng(26);
  for (Norm q : {Norm::l1, Norm::l2, Norm::linf}) {
    for (int t = 0; t < 500; ++t) {
      auto inst = random_prox_instance(rng, q, 1 + t % 5, t % 2 == 0);
      inst.kappa = 0.0;
      ProxResult<double> r;
      CHECK_NOTHROW(r = solve_prox(inst));
      CHECK(r.pattern != ActivePattern::all_three);
    }
  }
}

TEST_CASE("fault injection is caught by the oracle comparison") {
  CheckOptions opts;
  opts.seed = 6;
  opts.prox_instances = 10;
  opts.oracle_iters = 20000;
  opts.totality_instances = 200;
  opts.fault_all_active_lambda = true;
  bool any_failed = false;
  for (const auto& r : check_prox_oracle(opts)) any_failed = any_failed || !r.passed;
  for (const auto& r : check_prox_structure(opts)) any_failed = any_failed || !r.passed;
  CHECK(any_failed);
}
