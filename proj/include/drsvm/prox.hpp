#ifndef DRSVM_PROX_HPP
#define DRSVM_PROX_HPP

// Exact single-sample proximal point updates
//
//   min_{w, lam}  max{1 - w'z, 1 + w'z - lam*kappa, 0}
//                 + (1 / 2 alpha) (ww ||w - w_bar||^2 + wl (lam - lam_bar)^2)
//   s.t.          ||w||_q <= cone_scale * lam
//
// for q in {1, 2, inf}.  The hinge is split into its three affine pieces and
// the active-piece patterns are enumerated in a fixed order; each pattern is a
// smaller problem with an exact solver:
//   q = 2      closed-form cone projections, a quartic in the cone multiplier,
//              and a ball/hyperplane projection;
//   q = 1, inf a dual search over the multiplier of one linear inequality
//              (modified secant), each trial being one cone projection.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "drsvm/core.hpp"
#include "drsvm/epigraph.hpp"
#include "drsvm/quartic.hpp"

namespace drsvm {

template <typename Scalar>
struct ProxInstance {
  Vector<Scalar> z;
  Vector<Scalar> w_bar;
  Scalar lam_bar = 0;
  Scalar alpha = 1;
  Scalar kappa = 1;
  Norm q = Norm::l2;
  Scalar weight_w = 1;
  Scalar weight_lam = 1;
  Scalar cone_scale = 1;  ///< feasible set is ||w||_q <= cone_scale * lam
};

/// Multipliers of  w'z = a lam + b  (mu1) and  ||w||^2 <= lam^2  (mu2).
template <typename Scalar>
struct KktPair {
  Scalar mu1 = 0;
  Scalar mu2 = 0;
};

/// Bookkeeping of the modified secant search; one record per trial point.
template <typename Scalar>
struct SecantState {
  Scalar sigma_l = 0, sigma_u = 1;
  Scalar r_l = 0, r_u = 0;
  Scalar sigma = 0, r = 0;
  Scalar s = 0;
  bool auxiliary = false;  ///< trial came from the safeguarded auxiliary step
};

/// Which affine pieces of the hinge are active at the returned point.
enum class ActivePattern { piece1, piece2, piece3, pair12, pair13, pair23, apex, all_three };

inline const char* to_string(ActivePattern p) {
  switch (p) {
    case ActivePattern::piece1: return "piece1";
    case ActivePattern::piece2: return "piece2";
    case ActivePattern::piece3: return "piece3";
    case ActivePattern::pair12: return "pair12";
    case ActivePattern::pair13: return "pair13";
    case ActivePattern::pair23: return "pair23";
    case ActivePattern::apex: return "apex";
    case ActivePattern::all_three: return "all_three";
  }
  return "?";
}

template <typename Scalar>
struct ProxOptions {
  Scalar secant_tol = Scalar(1e-10);
  int secant_max_iter = 200;
  /// slack on the active-pattern and multiplier-range acceptance tests
  Scalar accept_tol = Scalar(1e-9);
  L1Options l1{};
  std::vector<SecantState<Scalar>>* secant_trace = nullptr;
  /// fault injection for the self-check harness: use kappa/2 instead of 2/kappa
  bool fault_all_active_lambda = false;
};

template <typename Scalar>
struct ProxResult {
  ConePoint<Scalar> point;
  ActivePattern pattern = ActivePattern::piece3;
  int cascade_step = 0;  ///< 1-based position in the case order that accepted
  std::optional<KktPair<Scalar>> kkt;
  Scalar sigma = 0;  ///< multiplier found by the secant search, when one ran
};

// ---------------------------------------------------------------------------
// Small pieces

/// (1 - w'z, 1 + w'z - lam*kappa, 0)
template <typename Scalar>
std::array<Scalar, 3> eval_hinge_pieces(const Vector<Scalar>& w, Scalar lam, const Vector<Scalar>& z, Scalar kappa) {
  const Scalar m = w.dot(z);
  return {Scalar(1) - m, Scalar(1) + m - lam * kappa, Scalar(0)};
}

template <typename Scalar>
Scalar hinge_value(const Vector<Scalar>& w, Scalar lam, const Vector<Scalar>& z, Scalar kappa) {
  const auto h = eval_hinge_pieces(w, lam, z, kappa);
  return std::max({h[0], h[1], h[2]});
}

/// Value of the instance's objective at `x` (feasibility is not checked).
template <typename Scalar>
Scalar prox_objective(const ProxInstance<Scalar>& inst, const ConePoint<Scalar>& x) {
  return hinge_value(x.w, x.lam, inst.z, inst.kappa) +
         (inst.weight_w * (x.w - inst.w_bar).squaredNorm() + inst.weight_lam * (x.lam - inst.lam_bar) * (x.lam - inst.lam_bar)) /
             (Scalar(2) * inst.alpha);
}

/// Rewrites the c > 0 step  (c/2)||w||^2 + prox  as an instance without the
/// regularizer: the w-block absorbs c, and lam is rescaled by
/// s = sqrt(1 + alpha c / weight_w) so both blocks keep a common weight.
/// Solutions map back through  lam = s * mu  with
/// s = result.cone_scale / inst.cone_scale.
template <typename Scalar>
ProxInstance<Scalar> rescale_for_c(const ProxInstance<Scalar>& inst, Scalar c) {
  if (c < 0) throw config_error("rescale_for_c: c must be >= 0");
  if (!(inst.alpha > 0)) throw config_error("rescale_for_c: alpha must be > 0");
  if (c == 0) return inst;
  const Scalar ww = inst.weight_w + inst.alpha * c;
  const Scalar factor = ww / inst.weight_w;
  const Scalar scale = std::sqrt(factor);
  ProxInstance<Scalar> out = inst;
  out.w_bar = inst.w_bar * (inst.weight_w / ww);
  out.weight_w = ww;
  out.weight_lam = inst.weight_lam * factor;
  out.kappa = inst.kappa * scale;
  out.lam_bar = inst.lam_bar / scale;
  out.cone_scale = inst.cone_scale * scale;
  return out;
}

// ---------------------------------------------------------------------------
// Two-piece subproblem for q = 2:
//   min  (ww/2)||w - w_bar||^2 + (wl/2)(lam - lam_bar)^2
//   s.t. w'z = a lam + b,  ||w||_2 <= lam

template <typename Scalar>
struct PpaResult {
  ConePoint<Scalar> point;
  KktPair<Scalar> kkt;
};

namespace detail {

// Tiny dense polynomial helpers, coefficients lowest degree first.
template <typename Scalar>
using Poly = std::vector<Scalar>;

template <typename Scalar>
Poly<Scalar> poly_mul(const Poly<Scalar>& a, const Poly<Scalar>& b) {
  Poly<Scalar> r(a.size() + b.size() - 1, Scalar(0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  return r;
}

template <typename Scalar>
Poly<Scalar> poly_axpy(Scalar alpha, const Poly<Scalar>& x, const Poly<Scalar>& y) {
  Poly<Scalar> r(std::max(x.size(), y.size()), Scalar(0));
  for (std::size_t i = 0; i < x.size(); ++i) r[i] += alpha * x[i];
  for (std::size_t i = 0; i < y.size(); ++i) r[i] += y[i];
  return r;
}

template <typename Scalar>
Scalar poly_at(const Poly<Scalar>& p, Scalar x) {
  Scalar v = 0;
  for (std::size_t i = p.size(); i-- > 0;) v = v * x + p[i];
  return v;
}

}  // namespace detail

/// Coefficients (highest degree first) of the quartic whose positive roots are
/// the candidate cone multipliers of the two-piece subproblem, written in the
/// scaled variables u = sqrt(ww) w, v = sqrt(wl) lam where the cone reads
/// ||u|| <= k v with k = sqrt(ww / wl).  With unit weights, the same
/// polynomial written in t = 2*mu2 has the coefficients p1..p5 checked in
/// the quartic tests.
template <typename Scalar>
std::array<Scalar, 5> ppa_quartic_coefficients(Scalar A, Scalar B, Scalar C, Scalar v_bar, Scalar a, Scalar b, Scalar k) {
  using detail::Poly;
  const Poly<Scalar> P{Scalar(1), Scalar(2)};
  const Poly<Scalar> Q{Scalar(1), -Scalar(2) * k * k};
  const Poly<Scalar> D = detail::poly_axpy(B, Q, detail::poly_axpy(a * a, P, Poly<Scalar>{}));
  const Poly<Scalar> PQ = detail::poly_mul(P, Q);
  Poly<Scalar> N = detail::poly_axpy(C, Q, detail::poly_axpy(-a * v_bar, P, Poly<Scalar>{}));
  N = detail::poly_axpy(-b, PQ, N);
  const Poly<Scalar> T = detail::poly_axpy(-a * b, P, Poly<Scalar>{v_bar * B + a * C});
  Poly<Scalar> E = detail::poly_axpy(A, detail::poly_mul(D, D), Poly<Scalar>{});
  E = detail::poly_axpy(-Scalar(2) * C, detail::poly_mul(N, D), E);
  E = detail::poly_axpy(B, detail::poly_mul(N, N), E);
  const Poly<Scalar> PT = detail::poly_mul(P, T);
  E = detail::poly_axpy(-k * k, detail::poly_mul(PT, PT), E);
  E.resize(5, Scalar(0));
  return {E[4], E[3], E[2], E[1], E[0]};
}

/// Returns std::nullopt when no KKT point exists (the caller moves on to the
/// next active pattern).  Among admissible quartic roots the one with the
/// smallest objective wins, ties going to the smaller multiplier.
template <typename Scalar>
std::optional<PpaResult<Scalar>> ppa_l2(const Vector<Scalar>& w_bar, Scalar lam_bar, const Vector<Scalar>& z, Scalar a,
                                        Scalar b, Scalar weight_w = 1, Scalar weight_lam = 1) {
  if (!(weight_w > 0) || !(weight_lam > 0)) throw config_error("ppa_l2: weights must be > 0");
  const Scalar sw = std::sqrt(weight_w), sl = std::sqrt(weight_lam);
  const Vector<Scalar> u_bar = sw * w_bar;
  const Scalar v_bar = sl * lam_bar;
  const Vector<Scalar> zs = z / sw;
  const Scalar as = a / sl;
  const Scalar k = sw / sl;
  const Scalar A = u_bar.squaredNorm(), B = zs.squaredNorm(), C = u_bar.dot(zs);
  const Scalar scale = std::max({Scalar(1), std::sqrt(A), std::abs(v_bar), std::abs(b)});
  const Scalar tol = detail::feasibility_tolerance(scale) * Scalar(16);

  auto finish = [&](const Vector<Scalar>& u, Scalar v, Scalar mu1, Scalar mu2) {
    PpaResult<Scalar> out{{u / sw, v / sl}, {mu1, mu2 * weight_w}};
    repair_feasibility(out.point, Norm::l2);
    return out;
  };

  // mu2 = 0: plain projection onto the hyperplane
  const Scalar denom = as * as + B;
  if (denom == 0) {
    if (std::abs(b) > tol) return std::nullopt;
    if (u_bar.norm() <= k * v_bar + tol) return finish(u_bar, std::max(v_bar, u_bar.norm() / k), Scalar(0), Scalar(0));
  } else {
    const Scalar mu1 = (C - as * v_bar - b) / denom;
    const Vector<Scalar> u = u_bar - mu1 * zs;
    const Scalar v = v_bar + as * mu1;
    if (u.norm() <= k * v + tol) return finish(u, v, mu1, Scalar(0));
  }

  // mu2 > 0: cone constraint active
  const auto c = ppa_quartic_coefficients(A, B, C, v_bar, as, b, k);
  if (std::all_of(c.begin(), c.end(), [](Scalar x) { return x == 0; })) return std::nullopt;
  const auto roots = solve_quartic_real_roots(c[0], c[1], c[2], c[3], c[4]);

  std::optional<PpaResult<Scalar>> best;
  Scalar best_obj = std::numeric_limits<Scalar>::infinity();
  for (Scalar m : roots) {
    if (!(m > 0)) continue;
    const Scalar P = Scalar(1) + Scalar(2) * m;
    const Scalar Q = Scalar(1) - Scalar(2) * k * k * m;
    const Scalar D = Q * B + P * as * as;
    if (std::abs(Q) <= std::numeric_limits<Scalar>::epsilon() || std::abs(D) <= std::numeric_limits<Scalar>::epsilon() * (B + as * as))
      continue;
    const Scalar mu1 = (Q * C - P * as * v_bar - b * P * Q) / D;
    const Vector<Scalar> u = (u_bar - mu1 * zs) / P;
    const Scalar v = (v_bar + as * mu1) / Q;
    if (v < -tol) continue;
    const Scalar un = u.norm();
    // squaring the cone equality admits spurious roots; keep genuine ones
    if (std::abs(un - k * std::max(v, Scalar(0))) > Scalar(1e-6) * std::max(Scalar(1), un)) continue;
    if (std::abs(u.dot(zs) - as * v - b) > Scalar(1e-6) * std::max(Scalar(1), scale)) continue;
    const Scalar obj = (u - u_bar).squaredNorm() + (v - v_bar) * (v - v_bar);
    if (obj < best_obj) {
      best_obj = obj;
      best = finish(u, std::max(v, un / k), mu1, m);
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Ball / hyperplane projection for q = 2:
//   min ||w - w_bar||^2  s.t.  w'z = b,  ||w||_2 <= radius

template <typename Scalar>
Vector<Scalar> ball_hyperplane_l2(Scalar b, Scalar radius, const Vector<Scalar>& w_bar, const Vector<Scalar>& z) {
  if (radius < 0) throw config_error("ball_hyperplane_l2: radius must be >= 0");
  const Scalar B = z.squaredNorm();
  if (B == 0) throw config_error("ball_hyperplane_l2: z must be nonzero");
  const Scalar closest = std::abs(b) / std::sqrt(B);
  if (closest > radius * (Scalar(1) + Scalar(1e-12)) + std::numeric_limits<Scalar>::min())
    throw infeasible_error("ball_hyperplane_l2: hyperplane misses the ball");
  const Vector<Scalar> A = w_bar - ((w_bar.dot(z) - b) / B) * z;
  const Scalar A2 = A.squaredNorm();
  const Scalar R2 = radius * radius;
  if (A2 <= R2) return A;
  // (4R^2 - ||Bv||^2) beta^2 + (4R^2 - 2 A'Bv) beta + (R^2 - ||A||^2) = 0 with
  // Bv = 2 b z / ||z||^2; on the hyperplane both leading coefficients equal
  // 4 (R^2 - b^2 / ||z||^2).
  const Scalar lead = Scalar(4) * (R2 - b * b / B);
  if (lead <= 0) return (b / B) * z;  // tangent: a single feasible point
  const Scalar beta = (-Scalar(1) + std::sqrt(Scalar(1) + Scalar(4) * (A2 - R2) / lead)) / Scalar(2);
  return (A + (Scalar(2) * b * beta / B) * z) / (Scalar(2) * beta + Scalar(1));
}

// ---------------------------------------------------------------------------
// Dual search for q in {1, inf}:
//   min (1/2 tw)||w - w_bar||^2 + (1/2 tl)(lam - lam_bar)^2
//   s.t. w'z <= a lam + b   (multiplier sigma),   ||w||_q <= lam

template <typename Scalar>
struct SecantProblem {
  Vector<Scalar> w_bar;
  Scalar lam_bar = 0;
  Vector<Scalar> z;
  Scalar a = 0, b = 0;
  Scalar tau_w = 1, tau_l = 1;  ///< per-block step sizes (alpha / weight)
  Norm q = Norm::l1;
};

template <typename Scalar>
struct SigmaEval {
  Scalar residual;  ///< p(sigma) = w(sigma)'z - a lam(sigma) - b
  ConePoint<Scalar> point;
};

/// p(sigma) together with the minimizer of the Lagrangian at sigma, which is
/// the cone projection of (w_bar - sigma tw z, lam_bar + sigma tl a).
template <typename Scalar>
SigmaEval<Scalar> p_sigma(Scalar sigma, const SecantProblem<Scalar>& pb, const L1Options& l1 = {}) {
  ConePoint<Scalar> x =
      proj_cone<Scalar>(pb.q, Vector<Scalar>(pb.w_bar - (sigma * pb.tau_w) * pb.z), pb.lam_bar + sigma * pb.tau_l * pb.a,
                        pb.tau_l / pb.tau_w, l1);
  const Scalar r = x.w.dot(pb.z) - pb.a * x.lam - pb.b;
  return {r, std::move(x)};
}

/// Instance form: center, step and z taken from a unit-weight instance.
template <typename Scalar>
SigmaEval<Scalar> p_sigma(Scalar sigma, const ProxInstance<Scalar>& inst, Scalar a, Scalar b, const L1Options& l1 = {}) {
  if (inst.q == Norm::l2) throw config_error("p_sigma: q must be 1 or inf");
  const SecantProblem<Scalar> pb{inst.w_bar, inst.lam_bar, inst.z, a, b, inst.alpha / inst.weight_w,
                                 inst.alpha / inst.weight_lam, inst.q};
  return p_sigma(sigma, pb, l1);
}

namespace detail {

/// Safeguarded secant on a non-decreasing residual r(.) with r(lo) < 0 < r(hi).
/// Follows the Dai-Fletcher update with the 0.6/0.4 auxiliary step.
template <typename Scalar, typename Residual>
Scalar modified_secant(Residual&& residual, Scalar sl, Scalar rl, Scalar su, Scalar ru, Scalar xi, int max_iter,
                       std::vector<SecantState<Scalar>>* trace) {
  Scalar s = Scalar(1) - rl / ru;
  Scalar sigma = su - (su - sl) / s;
  Scalar r = residual(sigma);
  bool aux = false;
  if (trace) trace->push_back({sl, su, rl, ru, sigma, r, s, aux});
  int iter = 0;
  while (std::abs(r) > xi) {
    if (++iter > max_iter)
      throw convergence_error("modified secant: iteration cap reached", double(sl), double(su));
    aux = false;
    if (r > 0) {
      if (s <= 2) {
        su = sigma;
        ru = r;
        s = Scalar(1) - rl / ru;
        sigma = su - (su - sl) / s;
      } else {
        s = std::max(ru / r - Scalar(1), Scalar(0.1));
        const Scalar step = (su - sigma) / s;
        su = sigma;
        ru = r;
        sigma = std::max(su - step, Scalar(0.6) * sl + Scalar(0.4) * su);
        s = (su - sl) / (su - sigma);
        aux = true;
      }
    } else {
      if (s >= 2) {
        sl = sigma;
        rl = r;
        s = Scalar(1) - rl / ru;
        sigma = su - (su - sl) / s;
      } else {
        s = std::max(rl / r - Scalar(1), Scalar(0.1));
        const Scalar step = (sigma - sl) / s;
        sl = sigma;
        rl = r;
        sigma = std::min(sl + step, Scalar(0.6) * su + Scalar(0.4) * sl);
        s = (su - sl) / (su - sigma);
        aux = true;
      }
    }
    if (!(sigma > sl && sigma < su) || !std::isfinite(s)) {
      sigma = Scalar(0.5) * (sl + su);
      s = Scalar(2);
    }
    if (su - sl <= Scalar(4) * std::numeric_limits<Scalar>::epsilon() * std::max(Scalar(1), std::abs(su))) {
      // bracket exhausted at machine precision; p is continuous so the root is here
      r = residual(sigma);
      if (trace) trace->push_back({sl, su, rl, ru, sigma, r, s, aux});
      break;
    }
    r = residual(sigma);
    if (trace) trace->push_back({sl, su, rl, ru, sigma, r, s, aux});
  }
  return sigma;
}

}  // namespace detail

template <typename Scalar>
struct MsaResult {
  bool valid = false;  ///< false when p(1) > 0: the multiplier would exceed 1
  Scalar sigma = -1;
  ConePoint<Scalar> point;
};

/// Modified secant search for the multiplier sigma* in [0, 1].
template <typename Scalar>
MsaResult<Scalar> msa_secant(const SecantProblem<Scalar>& pb, Scalar xi = Scalar(1e-10), int max_iter = 200,
                             const L1Options& l1 = {}, std::vector<SecantState<Scalar>>* trace = nullptr) {
  if (!(xi > 0)) throw config_error("msa_secant: tolerance must be > 0");
  SigmaEval<Scalar> at0 = p_sigma(Scalar(0), pb, l1);
  if (at0.residual <= xi) return {true, Scalar(0), std::move(at0.point)};
  SigmaEval<Scalar> at1 = p_sigma(Scalar(1), pb, l1);
  if (at1.residual > xi) return {false, Scalar(-1), {}};
  if (at1.residual >= -xi) return {true, Scalar(1), std::move(at1.point)};

  ConePoint<Scalar> last;
  auto residual = [&](Scalar sigma) {
    SigmaEval<Scalar> e = p_sigma(sigma, pb, l1);
    last = std::move(e.point);
    return -e.residual;
  };
  const Scalar sigma = detail::modified_secant<Scalar>(residual, Scalar(0), -at0.residual, Scalar(1), -at1.residual, xi,
                                                       max_iter, trace);
  return {true, sigma, std::move(last)};
}

/// min ||w - w_bar||^2  s.t.  w'z = rhs,  ||w||_q <= radius.  The hyperplane
/// multiplier theta is found by the same secant search; each trial is a
/// projection of w_bar - theta z onto the q-ball.
template <typename Scalar>
Vector<Scalar> equality_ball_projection(const Vector<Scalar>& w_bar, const Vector<Scalar>& z, Scalar rhs, Scalar radius,
                                        Norm q, Scalar xi = Scalar(1e-10), int max_iter = 200, const L1Options& l1 = {}) {
  if (radius < 0) throw config_error("equality_ball_projection: radius must be >= 0");
  const Scalar B = z.squaredNorm();
  if (B == 0) throw config_error("equality_ball_projection: z must be nonzero");
  const Scalar support = radius * lp_norm<Scalar>(z, dual_norm(q));
  const Scalar slack = Scalar(1e-12) * std::max(Scalar(1), support);
  if (std::abs(rhs) > support + slack) throw infeasible_error("equality_ball_projection: hyperplane misses the ball");

  auto at = [&](Scalar theta) { return proj_ball<Scalar>(q, Vector<Scalar>(w_bar - theta * z), radius, l1); };
  auto g = [&](Scalar theta) { return at(theta).dot(z) - rhs; };
  const Scalar tol = xi * std::max(Scalar(1), std::abs(rhs));

  const Scalar g0 = g(Scalar(0));
  if (std::abs(g0) <= tol) return at(Scalar(0));
  // g is non-increasing; march away from 0 until the sign flips
  const Scalar dir = g0 > 0 ? Scalar(1) : Scalar(-1);
  Scalar theta = std::abs(g0) / B;
  Scalar g_far = g(dir * theta);
  int doublings = 0;
  while (g_far * dir > tol) {
    if (++doublings > 80) return at(dir * theta);  // tangent hyperplane: limit point
    theta *= 2;
    g_far = g(dir * theta);
  }
  if (std::abs(g_far) <= tol) return at(dir * theta);
  // residual r(t) = -g(t) is non-decreasing in t
  Scalar lo = 0, hi = dir * theta, r_lo = -g0, r_hi = -g_far;
  if (lo > hi) {
    std::swap(lo, hi);
    std::swap(r_lo, r_hi);
  }
  const Scalar root =
      detail::modified_secant<Scalar>([&](Scalar t) { return -g(t); }, lo, r_lo, hi, r_hi, tol, max_iter, nullptr);
  return at(root);
}

// ---------------------------------------------------------------------------
// Full single-sample updates

namespace detail {

// Instance rewritten on the standard cone ||w|| <= lam with per-block steps.
template <typename Scalar>
struct NormalizedProx {
  const Vector<Scalar>& z;
  Vector<Scalar> w_bar;
  Scalar lam_bar;
  Scalar kappa;
  Scalar tau_w, tau_l;
  Scalar cone_scale;

  Scalar ratio() const { return tau_l / tau_w; }
};

template <typename Scalar>
NormalizedProx<Scalar> normalize(const ProxInstance<Scalar>& inst) {
  if (!(inst.alpha > 0)) throw config_error("prox: alpha must be > 0");
  if (!(inst.weight_w > 0) || !(inst.weight_lam > 0)) throw config_error("prox: weights must be > 0");
  if (!(inst.cone_scale > 0)) throw config_error("prox: cone_scale must be > 0");
  if (inst.kappa < 0) throw config_error("prox: kappa must be >= 0");
  if (inst.z.size() != inst.w_bar.size()) throw dimension_error("prox: z and w_bar differ in length");
  const Scalar s = inst.cone_scale;
  return {inst.z, inst.w_bar, s * inst.lam_bar, inst.kappa / s, inst.alpha / inst.weight_w,
          inst.alpha * s * s / inst.weight_lam, s};
}

template <typename Scalar>
ProxResult<Scalar> denormalize(ProxResult<Scalar> r, const NormalizedProx<Scalar>& np) {
  r.point.lam /= np.cone_scale;
  return r;
}

template <typename Scalar>
Scalar piece_tol(const std::array<Scalar, 3>& h, Scalar accept_tol) {
  return accept_tol * (Scalar(1) + std::abs(h[0]) + std::abs(h[1]));
}

/// Piece j attains the max (up to tolerance).
template <typename Scalar>
bool dominates(const std::array<Scalar, 3>& h, int j, Scalar tol) {
  for (int k = 0; k < 3; ++k)
    if (h[k] > h[j] + tol) return false;
  return true;
}

template <typename Scalar>
bool in_unit_interval(Scalar t, Scalar tol) {
  return t >= -tol && t <= Scalar(1) + tol;
}

/// The apex is optimal iff some t in [0, 1] puts
/// (w_bar/tw - (2t - 1) z, lam_bar/tl + t kappa) in the polar cone.
template <typename Scalar>
bool apex_optimal(const NormalizedProx<Scalar>& np, Norm q, Scalar accept_tol) {
  const Vector<Scalar> base = np.w_bar / np.tau_w;
  const Norm dq = dual_norm(q);
  auto phi = [&](Scalar t) {
    return lp_norm<Scalar>(Vector<Scalar>(base - (Scalar(2) * t - Scalar(1)) * np.z), dq) + np.lam_bar / np.tau_l +
           t * np.kappa;
  };
  Scalar lo = 0, hi = 1;
  const Scalar g = (std::sqrt(Scalar(5)) - Scalar(1)) / Scalar(2);
  Scalar x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  Scalar f1 = phi(x1), f2 = phi(x2);
  for (int it = 0; it < 90; ++it) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = phi(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = phi(x2);
    }
  }
  const Scalar best = std::min({f1, f2, phi(Scalar(0)), phi(Scalar(1))});
  const Scalar scale =
      Scalar(1) + base.norm() + std::abs(np.lam_bar / np.tau_l) + np.z.norm() + np.kappa;
  return best <= accept_tol * scale;
}

template <typename Scalar>
ProxResult<Scalar> cascade_l2(const NormalizedProx<Scalar>& np, const ProxOptions<Scalar>& opts) {
  const Vector<Scalar>& z = np.z;
  const Scalar r = np.ratio();
  const Scalar kappa = np.kappa;
  auto pieces = [&](const ConePoint<Scalar>& x) { return eval_hinge_pieces(x.w, x.lam, z, kappa); };
  auto accept = [](ConePoint<Scalar> x, ActivePattern p, int step) {
    ProxResult<Scalar> out;
    out.point = std::move(x);
    out.pattern = p;
    out.cascade_step = step;
    return out;
  };

  // one active piece: each is a plain cone projection of a shifted center
  {
    ConePoint<Scalar> x = proj_cone_l2_weighted<Scalar>(Vector<Scalar>(np.w_bar + np.tau_w * z), np.lam_bar, r);
    const auto h = pieces(x);
    if (dominates(h, 0, piece_tol(h, opts.accept_tol))) return accept(std::move(x), ActivePattern::piece1, 1);
  }
  {
    ConePoint<Scalar> x =
        proj_cone_l2_weighted<Scalar>(Vector<Scalar>(np.w_bar - np.tau_w * z), np.lam_bar + np.tau_l * kappa, r);
    const auto h = pieces(x);
    if (dominates(h, 1, piece_tol(h, opts.accept_tol))) return accept(std::move(x), ActivePattern::piece2, 2);
  }
  {
    ConePoint<Scalar> x = proj_cone_l2_weighted<Scalar>(np.w_bar, np.lam_bar, r);
    const auto h = pieces(x);
    if (dominates(h, 2, piece_tol(h, opts.accept_tol))) return accept(std::move(x), ActivePattern::piece3, 3);
  }

  // two active pieces; the multiplier of the tie constraint gives the convex
  // weights of the pieces, which must lie in [0, 1]
  const Scalar ww = Scalar(1) / np.tau_w, wl = Scalar(1) / np.tau_l;
  const Scalar mtol = opts.accept_tol;
  if (auto c = ppa_l2<Scalar>(Vector<Scalar>(np.w_bar + np.tau_w * z), np.lam_bar, z, kappa / Scalar(2), Scalar(0), ww, wl)) {
    const auto h = pieces(c->point);
    if (h[2] <= h[0] + piece_tol(h, opts.accept_tol) && in_unit_interval(c->kkt.mu1 / Scalar(2), mtol)) {
      auto out = accept(c->point, ActivePattern::pair12, 4);
      out.kkt = c->kkt;
      return out;
    }
  }
  // pieces 1 and 2 tie at the apex, where the squared cone constraint has no
  // gradient and the quartic cannot certify it
  if (apex_optimal(np, Norm::l2, opts.accept_tol))
    return accept(ConePoint<Scalar>{Vector<Scalar>::Zero(z.size()), Scalar(0)}, ActivePattern::apex, 4);
  if (auto c = ppa_l2<Scalar>(np.w_bar, np.lam_bar, z, Scalar(0), Scalar(1), ww, wl)) {
    const auto h = pieces(c->point);
    if (h[1] <= piece_tol(h, opts.accept_tol) && in_unit_interval(-c->kkt.mu1, mtol)) {
      auto out = accept(c->point, ActivePattern::pair13, 5);
      out.kkt = c->kkt;
      return out;
    }
  }
  if (auto c = ppa_l2<Scalar>(np.w_bar, np.lam_bar, z, kappa, Scalar(-1), ww, wl)) {
    const auto h = pieces(c->point);
    if (h[0] <= piece_tol(h, opts.accept_tol) && in_unit_interval(c->kkt.mu1, mtol)) {
      auto out = accept(c->point, ActivePattern::pair23, 6);
      out.kkt = c->kkt;
      return out;
    }
  }

  // all three active: lam = 2/kappa and w on the hyperplane w'z = 1
  if (kappa == 0) throw degenerate_kappa_error("prox (q=2): all pieces active requires kappa > 0");
  const Scalar lam = opts.fault_all_active_lambda ? kappa / Scalar(2) : Scalar(2) / kappa;
  Vector<Scalar> w = ball_hyperplane_l2<Scalar>(Scalar(1), lam, np.w_bar, z);
  return accept(ConePoint<Scalar>{std::move(w), lam}, ActivePattern::all_three, 7);
}

template <typename Scalar>
ProxResult<Scalar> cascade_polyhedral(const NormalizedProx<Scalar>& np, Norm q, const ProxOptions<Scalar>& opts) {
  const Vector<Scalar>& z = np.z;
  const Scalar r = np.ratio();
  const Scalar kappa = np.kappa;
  auto pieces = [&](const ConePoint<Scalar>& x) { return eval_hinge_pieces(x.w, x.lam, z, kappa); };
  auto accept = [](ConePoint<Scalar> x, ActivePattern p, int step, Scalar sigma) {
    ProxResult<Scalar> out;
    out.point = std::move(x);
    out.pattern = p;
    out.cascade_step = step;
    out.sigma = sigma;
    return out;
  };
  auto secant = [&](const Vector<Scalar>& center_w, Scalar center_l, Vector<Scalar> zz, Scalar a, Scalar b) {
    const SecantProblem<Scalar> pb{center_w, center_l, std::move(zz), a, b, np.tau_w, np.tau_l, q};
    return msa_secant<Scalar>(pb, opts.secant_tol, opts.secant_max_iter, opts.l1, opts.secant_trace);
  };

  // Case 1: only piece 2 active
  {
    ConePoint<Scalar> x = proj_cone<Scalar>(q, Vector<Scalar>(np.w_bar - np.tau_w * z), np.lam_bar + np.tau_l * kappa, r, opts.l1);
    const auto h = pieces(x);
    if (dominates(h, 1, piece_tol(h, opts.accept_tol))) return accept(std::move(x), ActivePattern::piece2, 1, Scalar(0));
  }
  // Case 2: piece 1 active, piece 3 inactive, h2 <= h1 written as
  // 2 w'z <= kappa lam so that sigma is the weight of piece 2
  {
    auto m = secant(Vector<Scalar>(np.w_bar + np.tau_w * z), np.lam_bar, Vector<Scalar>(Scalar(2) * z), kappa, Scalar(0));
    if (m.valid) {
      const auto h = pieces(m.point);
      if (h[0] >= h[2] - piece_tol(h, opts.accept_tol))
        return accept(std::move(m.point), m.sigma > 0 ? ActivePattern::pair12 : ActivePattern::piece1, 2, m.sigma);
    }
  }
  // Case 3: piece 3 active, piece 1 inactive, h2 <= h3
  {
    auto m = secant(np.w_bar, np.lam_bar, z, kappa, Scalar(-1));
    if (m.valid) {
      const auto h = pieces(m.point);
      if (h[0] <= h[2] + piece_tol(h, opts.accept_tol))
        return accept(std::move(m.point), m.sigma > 0 ? ActivePattern::pair23 : ActivePattern::piece3, 3, m.sigma);
    }
  }
  // Case 4: piece 3 active, piece 2 inactive, h1 <= h3
  {
    auto m = secant(np.w_bar, np.lam_bar, Vector<Scalar>(-z), Scalar(0), Scalar(-1));
    if (m.valid) {
      const auto h = pieces(m.point);
      if (h[1] <= h[2] + piece_tol(h, opts.accept_tol))
        return accept(std::move(m.point), m.sigma > 0 ? ActivePattern::pair13 : ActivePattern::piece3, 4, m.sigma);
    }
  }
  // Case 5: all three active
  if (kappa == 0) throw degenerate_kappa_error("prox: all pieces active requires kappa > 0");
  const Scalar lam = opts.fault_all_active_lambda ? kappa / Scalar(2) : Scalar(2) / kappa;
  Vector<Scalar> w = equality_ball_projection<Scalar>(np.w_bar, z, Scalar(1), lam, q, opts.secant_tol,
                                                      opts.secant_max_iter, opts.l1);
  return accept(ConePoint<Scalar>{std::move(w), lam}, ActivePattern::all_three, 5, Scalar(0));
}

}  // namespace detail

/// Exact prox step with the l2 cone (inst.q is ignored).
template <typename Scalar>
ProxResult<Scalar> prox_point_l2_detail(const ProxInstance<Scalar>& inst, const ProxOptions<Scalar>& opts = {}) {
  const auto np = detail::normalize(inst);
  return detail::denormalize(detail::cascade_l2(np, opts), np);
}

/// Exact prox step with the l1 cone (inst.q is ignored).
template <typename Scalar>
ProxResult<Scalar> prox_point_l1_detail(const ProxInstance<Scalar>& inst, const ProxOptions<Scalar>& opts = {}) {
  const auto np = detail::normalize(inst);
  return detail::denormalize(detail::cascade_polyhedral(np, Norm::l1, opts), np);
}

/// Exact prox step with the l-inf cone (inst.q is ignored).
template <typename Scalar>
ProxResult<Scalar> prox_point_linf_detail(const ProxInstance<Scalar>& inst, const ProxOptions<Scalar>& opts = {}) {
  const auto np = detail::normalize(inst);
  return detail::denormalize(detail::cascade_polyhedral(np, Norm::linf, opts), np);
}

template <typename Scalar>
ConePoint<Scalar> prox_point_l2(const ProxInstance<Scalar>& inst, const ProxOptions<Scalar>& opts = {}) {
  return prox_point_l2_detail(inst, opts).point;
}

template <typename Scalar>
ConePoint<Scalar> prox_point_l1(const ProxInstance<Scalar>& inst, const ProxOptions<Scalar>& opts = {}) {
  return prox_point_l1_detail(inst, opts).point;
}

template <typename Scalar>
ConePoint<Scalar> prox_point_linf(const ProxInstance<Scalar>& inst, const ProxOptions<Scalar>& opts = {}) {
  return prox_point_linf_detail(inst, opts).point;
}

/// Dispatches on inst.q.
template <typename Scalar>
ProxResult<Scalar> solve_prox(const ProxInstance<Scalar>& inst, const ProxOptions<Scalar>& opts = {}) {
  switch (inst.q) {
    case Norm::l1: return prox_point_l1_detail(inst, opts);
    case Norm::l2: return prox_point_l2_detail(inst, opts);
    case Norm::linf: return prox_point_linf_detail(inst, opts);
  }
  throw config_error("unknown norm");
}

}  // namespace drsvm

#endif  // DRSVM_PROX_HPP
