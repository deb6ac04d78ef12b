#include "drsvm/check.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "drsvm/data_io.hpp"
#include "drsvm/epigraph.hpp"
#include "drsvm/oracles.hpp"
#include "drsvm/prox.hpp"
#include "drsvm/quartic.hpp"

namespace drsvm {

namespace {

using Vec = Eigen::VectorXd;
using json = nlohmann::json;

Vec random_vector(std::mt19937_64& rng, int d, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  Vec v(d);
  for (auto& x : v) x = normal(rng);
  return v;
}

double lognormal(std::mt19937_64& rng) { return std::exp(std::normal_distribution<double>(0.0, 1.0)(rng)); }

std::string suffix(Norm q) { return std::string("[q=") + to_string(q) + "]"; }

// Accumulates pass/fail counts for one named property.
class Tally {
 public:
  explicit Tally(std::string name) { r_.name = std::move(name); }

  void check(bool ok, double violation, const std::function<std::string()>& describe = {}) {
    ++r_.checked;
    r_.worst = std::max(r_.worst, violation);
    if (ok) return;
    ++r_.failed;
    r_.passed = false;
    if (r_.failing_instance.empty() && describe) r_.failing_instance = describe();
  }

  void fail_with(const std::string& what, const std::function<std::string()>& describe = {}) {
    if (r_.detail.empty()) r_.detail = what;
    check(false, 0.0, describe);
  }

  PropertyResult done(std::string detail = {}) {
    if (r_.detail.empty()) r_.detail = std::move(detail);
    return r_;
  }

 private:
  PropertyResult r_;
};

json vec_json(const Vec& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Vec vec_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::string point_json(const char* kind, Norm q, const Vec& x, double s) {
  return json{{"kind", kind}, {"q", to_string(q)}, {"x", vec_json(x)}, {"s", s}}.dump();
}

// Rescaled instance plus the factor mapping its lam back.
struct Scaled {
  ProxInstance<double> inst;
  double lam_factor;
};

Scaled scaled_for_c(const ProxInstance<double>& inst, double c) {
  ProxInstance<double> s = rescale_for_c(inst, c);
  const double f = s.cone_scale / inst.cone_scale;
  return {std::move(s), f};
}

// Squared distance found by the zoomed grid minus the exact one, d <= 3.
double grid_projection_gap(Norm q, const Vec& x, double s, bool& ok) {
  const auto d = x.size();
  const auto p = proj_cone<double>(q, x, s);
  const double r = std::sqrt(x.squaredNorm() + s * s) + 0.1;
  Vec lo = Vec::Constant(d + 1, -r), hi = Vec::Constant(d + 1, r);
  lo[d] = 0;
  auto dist = [&](const ConePoint<double>& y) { return (y.w - x).squaredNorm() + (y.lam - s) * (y.lam - s); };
  const auto g = oracle_grid_min<double>(dist, lo, hi, 11, q, 40);
  const double exact = dist(p);
  // the exact projection may not lose to the grid, and the grid must land close
  ok = exact <= g.objective + 1e-12 && g.objective - exact <= 1e-3;
  return g.objective - exact;
}

// Both ends of the band {sigma : |p(sigma)| <= xi} located by bisection; p
// can vanish on a whole interval, so any point of the band is a root.
struct RootBand {
  bool valid = true;
  double left = 0, right = 0;
};

RootBand bisection_band(const SecantProblem<double>& pb, double xi) {
  const double p0 = p_sigma(0.0, pb).residual, p1 = p_sigma(1.0, pb).residual;
  auto bisect = [&](auto&& right_of) {
    double lo = 0, hi = 1;
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
      const double mid = 0.5 * (lo + hi);
      (right_of(p_sigma(mid, pb).residual) ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
  };
  RootBand band;
  if (p0 <= xi) return band;
  if (p1 > xi) {
    band.valid = false;
    return band;
  }
  band.left = bisect([&](double p) { return p <= xi; });
  band.right = p1 >= -xi ? 1.0 : bisect([&](double p) { return p < -xi; });
  return band;
}

// Distance of the secant multiplier from the bisection band; > 1e-8 or a
// validity disagreement fails.
bool secant_matches_bisection(const SecantProblem<double>& pb, const MsaResult<double>& m, double& miss) {
  const RootBand band = bisection_band(pb, 1e-10);
  miss = m.valid && band.valid ? std::max({0.0, band.left - m.sigma, m.sigma - band.right}) : 0.0;
  const bool agree = m.valid == band.valid && miss <= 1e-8;
  if (!agree) miss = std::max(miss, 1.0);
  return agree;
}

}  // namespace

ProxInstance<double> random_prox_instance(std::mt19937_64& rng, Norm q, int d, bool extreme) {
  static constexpr double kappas[] = {0.01, 1.0, 100.0};
  static constexpr double alphas[] = {1e-4, 1.0, 1e4};
  std::uniform_int_distribution<int> pick(0, 2);
  ProxInstance<double> inst;
  inst.q = q;
  inst.z = random_vector(rng, d, 1.0);
  inst.w_bar = random_vector(rng, d, 2.0);
  inst.lam_bar = std::normal_distribution<double>(0.0, 2.0)(rng);
  if (extreme) {
    inst.kappa = kappas[pick(rng)];
    inst.alpha = alphas[pick(rng)];
  } else {
    inst.kappa = lognormal(rng);
    inst.alpha = lognormal(rng);
  }
  return inst;
}

std::string instance_to_json(const ProxInstance<double>& inst, double c) {
  return json{{"kind", "prox"},
              {"q", to_string(inst.q)},
              {"z", vec_json(inst.z)},
              {"w_bar", vec_json(inst.w_bar)},
              {"lam_bar", inst.lam_bar},
              {"alpha", inst.alpha},
              {"kappa", inst.kappa},
              {"weight_w", inst.weight_w},
              {"weight_lam", inst.weight_lam},
              {"cone_scale", inst.cone_scale},
              {"c", c}}
      .dump();
}

ProxInstance<double> instance_from_json(const std::string& text, double& c) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw config_error(std::string("instance: ") + e.what());
  }
  try {
    ProxInstance<double> inst;
    inst.q = parse_norm(j.at("q").get<std::string>());
    inst.z = vec_from(j.at("z"));
    inst.w_bar = vec_from(j.at("w_bar"));
    inst.lam_bar = j.at("lam_bar").get<double>();
    inst.alpha = j.at("alpha").get<double>();
    inst.kappa = j.at("kappa").get<double>();
    inst.weight_w = j.value("weight_w", 1.0);
    inst.weight_lam = j.value("weight_lam", 1.0);
    inst.cone_scale = j.value("cone_scale", 1.0);
    c = j.value("c", 0.0);
    return inst;
  } catch (const json::exception& e) {
    throw config_error(std::string("instance: ") + e.what());
  }
}

ConePoint<double> solve_prox_with_c(const ProxInstance<double>& inst, double c, const ProxOptions<double>& opts) {
  const Scaled s = scaled_for_c(inst, c);
  ConePoint<double> p = solve_prox(s.inst, opts).point;
  p.lam *= s.lam_factor;
  return p;
}

// ---------------------------------------------------------------------------

std::vector<PropertyResult> check_projections(const CheckOptions& opts) {
  std::vector<PropertyResult> out;
  for (Norm q : {Norm::l1, Norm::l2, Norm::linf}) {
    std::mt19937_64 rng(opts.seed * 1000003ULL + 11 + static_cast<unsigned>(q));
    std::uniform_int_distribution<int> dim(1, 20);
    std::uniform_real_distribution<double> scale_pick(0.1, 10.0);
    Tally feas("projection.feasibility" + suffix(q)), idem("projection.idempotence" + suffix(q)),
        nonexp("projection.nonexpansive" + suffix(q)), sorted("projection.quickselect_matches_sort" + suffix(q));
    for (long t = 0; t < opts.projection_inputs; ++t) {
      const int d = dim(rng);
      const double sc = scale_pick(rng);
      const Vec a = random_vector(rng, d, sc), b = random_vector(rng, d, sc);
      const double sa = std::normal_distribution<double>(0.0, sc)(rng), sb = std::normal_distribution<double>(0.0, sc)(rng);
      const auto pa = proj_cone<double>(q, a, sa), pb = proj_cone<double>(q, b, sb);
      auto desc = [&] { return point_json("projection", q, a, sa); };

      const double defect = lp_norm<double>(pa.w, q) - pa.lam;
      feas.check(defect <= 1e-12, std::max(defect, 0.0), desc);

      const auto ppa = proj_cone<double>(q, pa);
      const double drift = std::max((ppa.w - pa.w).lpNorm<Eigen::Infinity>(), std::abs(ppa.lam - pa.lam));
      idem.check(drift <= 1e-12, drift, desc);

      const double lhs = std::sqrt((pa.w - pb.w).squaredNorm() + (pa.lam - pb.lam) * (pa.lam - pb.lam));
      const double rhs = std::sqrt((a - b).squaredNorm() + (sa - sb) * (sa - sb));
      nonexp.check(lhs <= rhs * (1 + 1e-12) + 1e-12, std::max(lhs - rhs, 0.0), desc);

      if (q != Norm::l2) {
        L1Options sort_opts;
        sort_opts.method = L1Method::sort;
        const auto ps = proj_cone<double>(q, a, sa, 1.0, sort_opts);
        const double diff = std::max((ps.w - pa.w).lpNorm<Eigen::Infinity>(), std::abs(ps.lam - pa.lam));
        sorted.check(diff <= 1e-12 * std::max(1.0, sc), diff, desc);
      }
    }
    out.push_back(feas.done("||w||_q - lam <= 1e-12"));
    out.push_back(idem.done("P(P(x)) = P(x) to 1e-12"));
    out.push_back(nonexp.done("||P(a) - P(b)|| <= ||a - b||"));
    if (q != Norm::l2) out.push_back(sorted.done("quickselect and sort thresholds agree"));

    if (q == Norm::linf) {
      Tally moreau("projection.moreau_decomposition");
      for (long t = 0; t < opts.projection_inputs; ++t) {
        const int d = dim(rng);
        const Vec x = random_vector(rng, d, 3.0);
        const double s = std::normal_distribution<double>(0.0, 3.0)(rng);
        const auto p = proj_cone_linf<double>(x, s);
        const auto polar = proj_cone_l1<double>(-x, -s);  // polar part is its negation
        const double recon =
            std::max((p.w - polar.w - x).lpNorm<Eigen::Infinity>(), std::abs(p.lam - polar.lam - s));
        const double ortho = std::abs(p.w.dot(-polar.w) + p.lam * -polar.lam);
        const double scale = 1.0 + x.squaredNorm() + s * s;
        const bool ok = recon <= 1e-12 * std::sqrt(scale) && ortho <= 1e-12 * scale;
        moreau.check(ok, std::max(recon, ortho / scale), [&] { return point_json("projection", q, x, s); });
      }
      out.push_back(moreau.done("x = P_K(x) + P_polar(x), parts orthogonal"));
    }

    Tally grid("projection.grid_optimality" + suffix(q));
    std::uniform_int_distribution<int> small_dim(1, 3);
    for (long t = 0; t < opts.grid_inputs; ++t) {
      const int d = small_dim(rng);
      const Vec x = random_vector(rng, d, 2.0);
      const double s = std::normal_distribution<double>(0.0, 2.0)(rng);
      bool ok = false;
      const double gap = grid_projection_gap(q, x, s, ok);
      grid.check(ok, gap, [&] { return point_json("projection", q, x, s); });
    }
    out.push_back(grid.done("d <= 3 zoomed grid search within 1e-3 in squared distance"));
  }

  Tally work("projection.l1_linear_work");
  {
    std::mt19937_64 rng(opts.seed * 7919ULL + 3);
    double worst_ratio = 0;
    for (int d : {1000, 4000, 16000}) {
      ProjectionStats stats;
      L1Options lopts;
      lopts.stats = &stats;
      const int reps = 20;
      for (int r = 0; r < reps; ++r) {
        lopts.seed = rng();
        proj_cone_l1<double>(random_vector(rng, d, 1.0), 0.0, lopts);
      }
      worst_ratio = std::max(worst_ratio, double(stats.element_visits) / (double(d) * reps));
    }
    work.check(worst_ratio <= 8.0, worst_ratio);
  }
  out.push_back(work.done("mean partition visits per element stays bounded as d grows"));
  return out;
}

// ---------------------------------------------------------------------------

std::vector<PropertyResult> check_secant(const CheckOptions& opts) {
  std::mt19937_64 rng(opts.seed * 2654435761ULL + 5);
  std::uniform_int_distribution<int> dim(1, 20);
  std::uniform_int_distribution<int> form(0, 3);
  Tally mono("secant.p_monotone"), cont("secant.p_continuity"), range("secant.sigma_in_unit_interval"),
      bis("secant.matches_bisection"), bracket("secant.bracket_invariants");
  for (long t = 0; t < opts.secant_instances; ++t) {
    const Norm q = t % 2 ? Norm::linf : Norm::l1;
    const int d = dim(rng);
    SecantProblem<double> pb;
    pb.q = q;
    pb.w_bar = random_vector(rng, d, 2.0);
    pb.lam_bar = std::normal_distribution<double>(0.0, 2.0)(rng);
    pb.z = random_vector(rng, d, 1.0);
    const double kappa = lognormal(rng);
    switch (form(rng)) {
      case 0: pb.a = kappa; pb.b = -1; break;
      case 1: pb.a = 0; pb.b = -1; pb.z = -pb.z; break;
      case 2: pb.a = kappa; pb.b = 0; pb.w_bar += pb.z; pb.z *= 2; break;
      default: pb.a = std::normal_distribution<double>()(rng); pb.b = std::normal_distribution<double>()(rng); break;
    }
    pb.tau_w = lognormal(rng);
    pb.tau_l = t % 3 == 0 ? lognormal(rng) : pb.tau_w;
    auto desc = [&] {
      return json{{"kind", "secant"}, {"q", to_string(q)}, {"w_bar", vec_json(pb.w_bar)}, {"lam_bar", pb.lam_bar},
                  {"z", vec_json(pb.z)}, {"a", pb.a}, {"b", pb.b}, {"tau_w", pb.tau_w}, {"tau_l", pb.tau_l}}
          .dump();
    };

    double prev = p_sigma(0.0, pb).residual, worst_rise = 0;
    for (int k = 1; k <= 9; ++k) {
      const double cur = p_sigma(k / 9.0, pb).residual;
      worst_rise = std::max(worst_rise, (cur - prev) / (1 + std::abs(prev)));
      prev = cur;
    }
    mono.check(worst_rise <= 1e-10, worst_rise, desc);

    const double sig = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const double lip = pb.tau_w * pb.z.squaredNorm() + pb.tau_l * pb.a * pb.a;
    const double jump = std::abs(p_sigma(sig + 1e-6, pb).residual - p_sigma(sig, pb).residual);
    cont.check(jump <= lip * 1e-6 * (1 + 1e-9) + 1e-14, jump / (lip * 1e-6), desc);

    std::vector<SecantState<double>> trace;
    MsaResult<double> m;
    try {
      m = msa_secant<double>(pb, 1e-10, 200, {}, &trace);
    } catch (const std::exception& e) {
      range.fail_with(e.what(), desc);
      continue;
    }
    if (m.valid) range.check(m.sigma >= 0 && m.sigma <= 1, std::max(-m.sigma, m.sigma - 1), desc);

    double miss = 0;
    const bool agree = secant_matches_bisection(pb, m, miss);
    bis.check(agree, miss, desc);

    bool nested = true;
    for (std::size_t k = 0; k < trace.size(); ++k) {
      const auto& st = trace[k];
      nested = nested && st.sigma_l < st.sigma_u && st.sigma_l >= 0 && st.sigma_u <= 1 && st.r_l < 0 && st.r_u > 0 &&
               st.sigma >= st.sigma_l && st.sigma <= st.sigma_u;
      if (k > 0) nested = nested && st.sigma_l >= trace[k - 1].sigma_l && st.sigma_u <= trace[k - 1].sigma_u;
    }
    bracket.check(nested, nested ? 0.0 : 1.0, desc);
  }
  return {mono.done("p(sigma) non-increasing on a 10-point grid"),
          cont.done("|p(s + 1e-6) - p(s)| within the projection Lipschitz bound"),
          range.done("returned multiplier lies in [0, 1]"), bis.done("sigma within 1e-8 of the bisection root band"),
          bracket.done("brackets nested, root bracketed, trials inside")};
}

// ---------------------------------------------------------------------------

std::vector<PropertyResult> check_prox_oracle(const CheckOptions& opts) {
  std::vector<PropertyResult> out;
  ProxOptions<double> popts;
  popts.fault_all_active_lambda = opts.fault_all_active_lambda;
  static constexpr int dims[] = {2, 5, 20};
  for (Norm q : {Norm::l1, Norm::l2, Norm::linf}) {
    for (double c : {0.0, 1.0}) {
      std::mt19937_64 rng(opts.seed * 40503ULL + 17 * static_cast<unsigned>(q) + static_cast<unsigned>(c));
      const std::string tag = std::string("[q=") + to_string(q) + ",c=" + format_double(c) + "]";
      Tally eq("prox.oracle_equivalence" + tag), dual("prox.dual_certificate" + tag);
      for (long t = 0; t < opts.prox_instances; ++t) {
        const auto inst = random_prox_instance(rng, q, dims[t % 3], false);
        auto desc = [&] { return instance_to_json(inst, c); };
        ConePoint<double> p;
        try {
          p = solve_prox_with_c(inst, c, popts);
        } catch (const std::exception& e) {
          eq.fail_with(std::string("prox threw: ") + e.what(), desc);
          continue;
        }
        const double f = prox_objective_c(inst, p, c);
        const auto o = oracle_prox_subgradient(inst, opts.oracle_iters, c);
        const double infeas = std::max(0.0, lp_norm<double>(p.w, q) - p.lam);
        eq.check(f <= o.objective + 1e-6 && infeas <= 1e-9, f - o.objective, desc);
        const auto cert = oracle_prox_dual(inst, c);
        dual.check(f >= cert.lower_bound - 1e-6, cert.lower_bound - f, desc);
      }
      out.push_back(eq.done("prox objective <= projected-subgradient oracle + 1e-6"));
      out.push_back(dual.done("prox objective >= dual lower bound - 1e-6"));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

bool pattern_holds(const std::array<double, 3>& h, ActivePattern p, double tol) {
  const double mx = std::max({h[0], h[1], h[2]});
  auto top = [&](int k) { return h[k] >= mx - tol; };
  switch (p) {
    case ActivePattern::piece1: return top(0);
    case ActivePattern::piece2: return top(1);
    case ActivePattern::piece3: return top(2);
    case ActivePattern::pair12: return top(0) && top(1);
    case ActivePattern::pair13: return top(0) && top(2);
    case ActivePattern::pair23: return top(1) && top(2);
    case ActivePattern::apex: return top(0) && top(1);
    case ActivePattern::all_three: return top(0) && top(1) && top(2);
  }
  return false;
}

}  // namespace

std::vector<PropertyResult> check_prox_structure(const CheckOptions& opts) {
  std::vector<PropertyResult> out;
  ProxOptions<double> popts;
  popts.fault_all_active_lambda = opts.fault_all_active_lambda;
  static constexpr int dims[] = {1, 2, 5, 20};
  for (Norm q : {Norm::l1, Norm::l2, Norm::linf}) {
    std::mt19937_64 rng(opts.seed * 69069ULL + 29 + static_cast<unsigned>(q));
    Tally total("prox.cascade_totality" + suffix(q)), feas("prox.feasibility" + suffix(q)),
        pattern("prox.pattern_consistency" + suffix(q)), decrease("prox.objective_decrease" + suffix(q));
    Tally kkt("prox.kkt_residual[q=2]");
    for (long t = 0; t < opts.totality_instances; ++t) {
      const auto inst = random_prox_instance(rng, q, dims[t % 4], true);
      auto desc = [&] { return instance_to_json(inst, 0.0); };
      ProxResult<double> r;
      try {
        r = solve_prox(inst, popts);
        total.check(true, 0.0);
      } catch (const std::exception& e) {
        total.fail_with(e.what(), desc);
        continue;
      }
      const double lam_scale = std::max(1.0, std::abs(r.point.lam));
      const double defect = lp_norm<double>(r.point.w, q) - r.point.lam;
      feas.check(defect <= 1e-12 * lam_scale, std::max(defect, 0.0), desc);

      const auto h = eval_hinge_pieces(r.point.w, r.point.lam, inst.z, inst.kappa);
      const double tol = 1e-9 * (1 + std::abs(r.point.w.dot(inst.z)) + std::abs(r.point.lam * inst.kappa));
      pattern.check(pattern_holds(h, r.pattern, tol), 0.0, desc);

      const auto centre = proj_cone<double>(q, inst.w_bar, inst.lam_bar);
      const double f = prox_objective(inst, r.point), f0 = prox_objective(inst, centre);
      decrease.check(f <= f0 + 1e-12 * std::max(1.0, std::abs(f0)), f - f0, desc);

      if (q == Norm::l2 && r.kkt) {
        const auto res = kkt_residual(inst, r.point, *r.kkt, r.pattern);
        kkt.check(res.max() <= 1e-8 * res.scale && r.kkt->mu2 >= 0, res.max() / res.scale, desc);
      }
    }
    out.push_back(total.done("some case accepts on every instance"));
    out.push_back(feas.done("||w||_q <= lam after the prox step"));
    out.push_back(pattern.done("active pieces at the output match the accepted case within 1e-9"));
    out.push_back(decrease.done("prox objective at the output <= at the projected center"));
    if (q == Norm::l2) out.push_back(kkt.done("two-piece KKT residuals <= 1e-8 * scale"));
  }

  std::mt19937_64 rng(opts.seed * 97ULL + 1);
  Tally bh("prox.ball_hyperplane_residual");
  for (long t = 0; t < opts.totality_instances; ++t) {
    const int d = 1 + static_cast<int>(t % 6);
    const Vec z = random_vector(rng, d, 1.0), wb = random_vector(rng, d, 3.0);
    const double radius = lognormal(rng);
    const double b = std::uniform_real_distribution<double>(-1.0, 1.0)(rng) * radius * z.norm();
    const Vec w = ball_hyperplane_l2<double>(b, radius, wb, z);
    const double err = std::max(std::abs(w.dot(z) - b), w.norm() - radius);
    bh.check(err <= 1e-10 * std::max(1.0, radius * z.norm()), err);
  }
  out.push_back(bh.done("w'z = b and ||w|| <= radius to 1e-10"));

  Tally quart("quartic.root_residual");
  for (long t = 0; t < opts.totality_instances; ++t) {
    std::array<double, 4> r;
    for (auto& v : r) v = std::normal_distribution<double>(0.0, 3.0)(rng);
    // expand (x - r0)(x - r1)(x - r2)(x - r3)
    std::array<double, 5> c{1, 0, 0, 0, 0};
    for (int k = 0; k < 4; ++k)
      for (int j = k + 1; j >= 1; --j) c[j] -= r[k] * c[j - 1];
    const auto roots = solve_quartic_real_roots(c[0], c[1], c[2], c[3], c[4]);
    double worst = 0;
    for (double x : roots) {
      const double v = std::abs(detail::poly_eval(c, x));
      worst = std::max(worst, v / std::max(1.0, detail::poly_scale(c, x)));
    }
    bool found = true;
    for (double x : r) {
      bool hit = false;
      for (double y : roots) hit = hit || std::abs(x - y) <= 1e-5 * std::max(1.0, std::abs(x));
      found = found && hit;
    }
    quart.check(worst <= 1e-8 && found, worst);
  }
  out.push_back(quart.done("all planted roots found, residual <= 1e-8 * scale"));
  return out;
}

// ---------------------------------------------------------------------------

std::vector<PropertyResult> check_d1_agreement(const CheckOptions& opts) {
  std::mt19937_64 rng(opts.seed * 31337ULL + 7);
  ProxOptions<double> popts;
  popts.fault_all_active_lambda = opts.fault_all_active_lambda;
  Tally agree("prox.d1_cross_norm_agreement");
  for (long t = 0; t < opts.d1_instances; ++t) {
    const auto inst = random_prox_instance(rng, Norm::l1, 1, t % 2 == 1);
    const double c = t % 3 == 0 ? 1.0 : 0.0;
    auto desc = [&] { return instance_to_json(inst, c); };
    try {
      ProxInstance<double> i1 = inst, i2 = inst, i3 = inst;
      i2.q = Norm::l2;
      i3.q = Norm::linf;
      const auto p1 = solve_prox_with_c(i1, c, popts), p2 = solve_prox_with_c(i2, c, popts),
                 p3 = solve_prox_with_c(i3, c, popts);
      const double scale = std::max({1.0, std::abs(p1.lam), std::abs(p1.w[0])});
      const double diff = std::max({std::abs(p1.w[0] - p2.w[0]), std::abs(p1.w[0] - p3.w[0]),
                                    std::abs(p1.lam - p2.lam), std::abs(p1.lam - p3.lam)}) / scale;
      agree.check(diff <= 1e-10, diff, desc);
    } catch (const std::exception& e) {
      agree.fail_with(e.what(), desc);
    }
  }
  return {agree.done("l1, l2 and l-inf prox coincide for d = 1 (relative 1e-10)")};
}

std::vector<PropertyResult> run_all_checks(const CheckOptions& opts) {
  std::vector<PropertyResult> all;
  for (auto&& part : {check_projections(opts), check_secant(opts), check_prox_structure(opts), check_prox_oracle(opts),
                      check_d1_agreement(opts)})
    all.insert(all.end(), part.begin(), part.end());
  return all;
}

std::vector<PropertyResult> replay_instance(const std::string& text, const CheckOptions& opts) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw config_error(std::string("replay: ") + e.what());
  }
  const std::string kind = j.value("kind", "");
  ProxOptions<double> popts;
  popts.fault_all_active_lambda = opts.fault_all_active_lambda;
  try {
    if (kind == "projection") {
      const Norm q = parse_norm(j.at("q").get<std::string>());
      const Vec x = vec_from(j.at("x"));
      const double s = j.at("s").get<double>();
      auto desc = [&] { return text; };
      Tally feas("projection.feasibility" + suffix(q)), idem("projection.idempotence" + suffix(q));
      const auto p = proj_cone<double>(q, x, s);
      const double defect = lp_norm<double>(p.w, q) - p.lam;
      feas.check(defect <= 1e-12, std::max(defect, 0.0), desc);
      const auto pp = proj_cone<double>(q, p);
      const double drift = std::max((pp.w - p.w).lpNorm<Eigen::Infinity>(), std::abs(pp.lam - p.lam));
      idem.check(drift <= 1e-12, drift, desc);
      std::vector<PropertyResult> out{feas.done(), idem.done()};
      if (x.size() <= 3) {
        Tally grid("projection.grid_optimality" + suffix(q));
        bool ok = false;
        const double gap = grid_projection_gap(q, x, s, ok);
        grid.check(ok, gap, desc);
        out.push_back(grid.done());
      }
      return out;
    }
    if (kind == "secant") {
      SecantProblem<double> pb;
      pb.q = parse_norm(j.at("q").get<std::string>());
      pb.w_bar = vec_from(j.at("w_bar"));
      pb.lam_bar = j.at("lam_bar").get<double>();
      pb.z = vec_from(j.at("z"));
      pb.a = j.at("a").get<double>();
      pb.b = j.at("b").get<double>();
      pb.tau_w = j.at("tau_w").get<double>();
      pb.tau_l = j.at("tau_l").get<double>();
      auto desc = [&] { return text; };
      Tally range("secant.sigma_in_unit_interval"), bis("secant.matches_bisection");
      try {
        const auto m = msa_secant<double>(pb);
        if (m.valid) range.check(m.sigma >= 0 && m.sigma <= 1, std::max(-m.sigma, m.sigma - 1), desc);
        double miss = 0;
        const bool agree = secant_matches_bisection(pb, m, miss);
        bis.check(agree, miss, desc);
      } catch (const numerical_error& e) {
        range.fail_with(e.what(), desc);
      }
      return {range.done(), bis.done()};
    }
    if (kind == "prox") {
      double c = 0;
      const ProxInstance<double> inst = instance_from_json(text, c);
      if (inst.z.size() != inst.w_bar.size()) throw config_error("replay: z and w_bar differ in length");
      const std::string tag = std::string("[q=") + to_string(inst.q) + ",c=" + format_double(c) + "]";
      auto desc = [&] { return text; };
      Tally total("prox.cascade_totality" + tag), feas("prox.feasibility" + tag), eq("prox.oracle_equivalence" + tag),
          dual("prox.dual_certificate" + tag);
      ConePoint<double> p;
      try {
        p = solve_prox_with_c(inst, c, popts);
        total.check(true, 0.0);
      } catch (const numerical_error& e) {
        total.fail_with(e.what(), desc);
        return {total.done()};
      }
      const double defect = lp_norm<double>(p.w, inst.q) - p.lam;
      feas.check(defect <= 1e-12 * std::max(1.0, std::abs(p.lam)), std::max(defect, 0.0), desc);
      const double f = prox_objective_c(inst, p, c);
      const auto o = oracle_prox_subgradient(inst, opts.oracle_iters, c);
      eq.check(f <= o.objective + 1e-6, f - o.objective, desc);
      const auto cert = oracle_prox_dual(inst, c);
      dual.check(f >= cert.lower_bound - 1e-6, cert.lower_bound - f, desc);
      return {total.done(), feas.done(), eq.done(), dual.done()};
    }
  } catch (const json::exception& e) {
    throw config_error(std::string("replay: ") + e.what());
  }
  throw config_error("replay: unknown instance kind '" + kind + "' (projection, secant, prox)");
}

}  // namespace drsvm
