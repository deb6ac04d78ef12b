#ifndef DRSVM_ORACLES_HPP
#define DRSVM_ORACLES_HPP

// Brute-force reference solvers.  They share only the cone projections with
// the exact prox layer, never its case analysis, so they can certify it.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>

#include "drsvm/core.hpp"
#include "drsvm/epigraph.hpp"
#include "drsvm/prox.hpp"

namespace drsvm {

template <typename Scalar>
struct OracleReport {
  Scalar oracle_objective = 0;
  Scalar candidate_objective = 0;
  Scalar gap = 0;  ///< candidate - oracle
  long iterations = 0;
};

template <typename Scalar>
struct OracleSolution {
  ConePoint<Scalar> point;
  Scalar objective = 0;
  long iterations = 0;
};

/// Prox objective with an optional (c/2)||w||^2 term, on the instance's own
/// coordinates (cone ||w||_q <= cone_scale * lam).
template <typename Scalar>
Scalar prox_objective_c(const ProxInstance<Scalar>& inst, const ConePoint<Scalar>& x, Scalar c) {
  return prox_objective(inst, x) + Scalar(0.5) * c * x.w.squaredNorm();
}

namespace detail {

template <typename Scalar>
ConePoint<Scalar> project_instance_cone(const ProxInstance<Scalar>& inst, const Vector<Scalar>& w, Scalar lam,
                                        Scalar ratio) {
  // cone ||w|| <= s lam  <=>  ||w|| <= mu with mu = s lam
  const Scalar s = inst.cone_scale;
  ConePoint<Scalar> p = proj_cone<Scalar>(inst.q, w, s * lam, ratio);
  p.lam /= s;
  return p;
}

}  // namespace detail

/// Projected subgradient on the prox objective (plus (c/2)||w||^2) from the
/// projected center.  Steps are beta0 / sqrt(t), beta0 the inverse of a
/// Lipschitz estimate, capped by 1 / (m (t + 1)) with m the strong convexity
/// modulus.  Returns the best iterate seen.
template <typename Scalar>
OracleSolution<Scalar> oracle_prox_subgradient(const ProxInstance<Scalar>& inst, long iters, Scalar c = 0) {
  if (iters < 1) throw config_error("oracle_prox_subgradient: iters must be >= 1");
  if (!(inst.alpha > 0)) throw config_error("oracle_prox_subgradient: alpha must be > 0");
  const Scalar hw = inst.weight_w / inst.alpha, hl = inst.weight_lam / inst.alpha;
  const Scalar s = inst.cone_scale;
  // the Euclidean metric in (w, lam) becomes weighted once lam is rescaled
  const Scalar ratio = s * s;

  ConePoint<Scalar> x = detail::project_instance_cone(inst, inst.w_bar, inst.lam_bar, ratio);
  OracleSolution<Scalar> best{x, prox_objective_c(inst, x, c), 1};
  const Scalar lip = inst.z.norm() + inst.kappa + (hw + c) * (inst.w_bar.norm() + Scalar(1)) +
                     hl * (std::abs(inst.lam_bar) + Scalar(1));
  const Scalar beta0 = Scalar(1) / std::max(lip, Scalar(1e-12));
  const Scalar modulus = std::min(hw + c, hl);

  for (long t = 1; t < iters; ++t) {
    const auto h = eval_hinge_pieces(x.w, x.lam, inst.z, inst.kappa);
    int piece = 0;
    for (int k = 1; k < 3; ++k)
      if (h[k] > h[piece]) piece = k;
    Vector<Scalar> gw = hw * (x.w - inst.w_bar) + c * x.w;
    Scalar gl = hl * (x.lam - inst.lam_bar);
    if (piece == 0) {
      gw -= inst.z;
    } else if (piece == 1) {
      gw += inst.z;
      gl -= inst.kappa;
    }
    const Scalar step = std::min(beta0 / std::sqrt(Scalar(t)), Scalar(1) / (modulus * Scalar(t + 1)));
    x = detail::project_instance_cone(inst, Vector<Scalar>(x.w - step * gw), x.lam - step * gl, ratio);
    const Scalar f = prox_objective_c(inst, x, c);
    if (f < best.objective) best = {x, f, t + 1};
  }
  best.iterations = iters;
  return best;
}

template <typename Scalar>
struct DualCertificate {
  Scalar lower_bound = 0;   ///< dual value: no feasible point does better
  ConePoint<Scalar> point;  ///< primal point recovered from the best dual weights
  Scalar upper_bound = 0;   ///< objective at `point`
  std::array<Scalar, 3> weights{};
};

/// Lagrangian dual of the prox step over the weights t of the three hinge
/// pieces: for fixed t the inner problem is a single cone projection, and the
/// concave dual is maximized over the simplex by nested golden-section search.
template <typename Scalar>
DualCertificate<Scalar> oracle_prox_dual(const ProxInstance<Scalar>& inst, Scalar c = 0, int golden_iters = 80) {
  const Scalar hw = inst.weight_w / inst.alpha + c, hl = inst.weight_lam / inst.alpha;
  const Scalar s = inst.cone_scale;
  const Vector<Scalar> cw = (inst.weight_w / inst.alpha) * inst.w_bar / hw;
  const Scalar ratio = hw * s * s / hl;

  auto inner = [&](Scalar t1, Scalar t2) {
    // sum_k t_k piece_k = (t2 - t1) w'z - t2 kappa lam + (t1 + t2)
    const Vector<Scalar> gw = (t2 - t1) * inst.z;
    const Scalar gl = -t2 * inst.kappa;
    ConePoint<Scalar> x = detail::project_instance_cone(inst, Vector<Scalar>(cw - gw / hw), inst.lam_bar - gl / hl, ratio);
    const Scalar value = (t2 - t1) * x.w.dot(inst.z) - t2 * inst.kappa * x.lam + (t1 + t2) +
                         Scalar(0.5) * (inst.weight_w / inst.alpha) * (x.w - inst.w_bar).squaredNorm() +
                         Scalar(0.5) * c * x.w.squaredNorm() + Scalar(0.5) * hl * (x.lam - inst.lam_bar) * (x.lam - inst.lam_bar);
    return std::pair<Scalar, ConePoint<Scalar>>{value, std::move(x)};
  };

  const Scalar g = (std::sqrt(Scalar(5)) - Scalar(1)) / Scalar(2);
  auto golden_max = [&](auto&& f, Scalar lo, Scalar hi, Scalar& arg) {
    Scalar x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    Scalar f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < golden_iters; ++it) {
      if (f1 >= f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - g * (hi - lo);
        f1 = f(x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + g * (hi - lo);
        f2 = f(x2);
      }
    }
    arg = f1 >= f2 ? x1 : x2;
    Scalar best = std::max(f1, f2);
    // the maximum may sit on an end of the interval
    for (Scalar e : {lo, hi}) {
      const Scalar fe = f(e);
      if (fe > best) {
        best = fe;
        arg = e;
      }
    }
    return best;
  };

  auto over_t2 = [&](Scalar t1, Scalar& t2_arg) {
    return golden_max([&](Scalar t2) { return inner(t1, t2).first; }, Scalar(0), Scalar(1) - t1, t2_arg);
  };
  Scalar t1 = 0, t2 = 0;
  golden_max(
      [&](Scalar a) {
        Scalar dummy;
        return over_t2(a, dummy);
      },
      Scalar(0), Scalar(1), t1);
  over_t2(t1, t2);
  auto [value, point] = inner(t1, t2);
  DualCertificate<Scalar> out;
  out.lower_bound = value;
  out.upper_bound = prox_objective_c(inst, point, c);
  out.point = std::move(point);
  out.weights = {t1, t2, std::max(Scalar(0), Scalar(1) - t1 - t2)};
  return out;
}

/// Exhaustive search over a uniform grid in w; for each grid point the convex
/// slice in lam is minimized over [max(||w||_q, lam_lo), lam_hi] by
/// golden-section search, so every evaluated point is cone feasible.  With
/// levels > 1 the grid is rebuilt `levels - 1` times on a window centred on
/// the incumbent (an odd point count keeps it on the grid); the spacing
/// shrinks by 0.6 only when the incumbent did not move.  box_lo and box_hi
/// have length d + 1 (lam last); the w part bounds the first level only.
template <typename Scalar>
OracleSolution<Scalar> oracle_grid_min(const std::function<Scalar(const ConePoint<Scalar>&)>& objective,
                                       const Vector<Scalar>& box_lo, const Vector<Scalar>& box_hi, int resolution, Norm q,
                                       int levels = 1) {
  const Eigen::Index dim = box_lo.size();
  if (dim != box_hi.size() || dim < 2) throw dimension_error("oracle_grid_min: box must have length d + 1 with d >= 1");
  const Eigen::Index d = dim - 1;
  if (d > 3) throw dimension_error("oracle_grid_min: supports d <= 3 only");
  if (resolution < 10) throw config_error("oracle_grid_min: resolution must be >= 10");
  if (levels < 1) throw config_error("oracle_grid_min: levels must be >= 1");
  const Scalar lam_lo = box_lo[d], lam_hi = box_hi[d];
  const Scalar g = (std::sqrt(Scalar(5)) - Scalar(1)) / Scalar(2);

  OracleSolution<Scalar> best;
  best.objective = std::numeric_limits<Scalar>::infinity();
  bool found = false;
  ConePoint<Scalar> x{Vector<Scalar>(d), Scalar(0)};

  auto slice = [&]() {
    Scalar a = std::max(lp_norm<Scalar>(x.w, q), lam_lo), b = lam_hi;
    if (a > b) return;
    auto f = [&](Scalar lam) {
      x.lam = lam;
      ++best.iterations;
      return objective(x);
    };
    Scalar x1 = b - g * (b - a), x2 = a + g * (b - a);
    Scalar f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 60 && b - a > std::numeric_limits<Scalar>::epsilon() * (Scalar(1) + std::abs(b)); ++it) {
      if (f1 <= f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - g * (b - a);
        f1 = f(x1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + g * (b - a);
        f2 = f(x2);
      }
    }
    Scalar lam_best = f1 <= f2 ? x1 : x2, f_best = std::min(f1, f2);
    for (Scalar e : {a, b}) {
      const Scalar fe = f(e);
      if (fe < f_best) {
        f_best = fe;
        lam_best = e;
      }
    }
    if (f_best < best.objective) {
      best.objective = f_best;
      best.point = ConePoint<Scalar>{x.w, lam_best};
      found = true;
    }
  };

  Vector<Scalar> lo = box_lo.head(d), hi = box_hi.head(d);
  std::vector<int> idx(static_cast<std::size_t>(d));
  int res = resolution;
  Scalar previous = best.objective;
  for (int level = 0; level < levels; ++level) {
    std::fill(idx.begin(), idx.end(), 0);
    const Vector<Scalar> h = (hi - lo) / Scalar(res - 1);
    while (true) {
      for (Eigen::Index j = 0; j < d; ++j) x.w[j] = lo[j] + h[j] * Scalar(idx[static_cast<std::size_t>(j)]);
      slice();
      Eigen::Index j = 0;
      while (j < d && ++idx[static_cast<std::size_t>(j)] == res) idx[static_cast<std::size_t>(j++)] = 0;
      if (j == d) break;
    }
    if (!found) throw infeasible_error("oracle_grid_min: no cone-feasible grid point in the box");
    const bool moved = level == 0 || best.objective < previous;
    previous = best.objective;
    res = resolution | 1;
    const Scalar half = Scalar(res - 1) / Scalar(2) * (moved ? Scalar(1) : Scalar(0.6));
    for (Eigen::Index j = 0; j < d; ++j) {
      const Scalar step = level == 0 ? h[j] * Scalar(6) / Scalar(res - 1) : h[j];
      lo[j] = best.point.w[j] - half * step;
      hi[j] = best.point.w[j] + half * step;
    }
  }
  return best;
}

/// Residuals of the KKT system of a two-piece subproblem of the q = 2 cascade,
/// expressed on the instance normalized to the cone ||w|| <= lam.  The
/// multipliers are those reported in ProxResult::kkt: mu1 on the tie
/// w'z = a lam + b, mu2 on ||w||^2 - lam^2 <= 0.
template <typename Scalar>
struct KktResiduals {
  Scalar stationarity = 0;
  Scalar primal = 0;
  Scalar complementarity = 0;
  Scalar dual = 0;  ///< max(0, -mu2)
  Scalar scale = 1;

  Scalar max() const { return std::max({stationarity, primal, complementarity, dual}); }
};

template <typename Scalar>
KktResiduals<Scalar> kkt_residual(const ProxInstance<Scalar>& inst, const ConePoint<Scalar>& candidate,
                                  const KktPair<Scalar>& m, ActivePattern pattern) {
  const Scalar s = inst.cone_scale;
  const Scalar tw = inst.alpha / inst.weight_w, tl = inst.alpha * s * s / inst.weight_lam;
  const Scalar kappa = inst.kappa / s;
  Vector<Scalar> cw = inst.w_bar;
  const Scalar cl = s * inst.lam_bar;
  Scalar a = 0, b = 0;
  switch (pattern) {
    case ActivePattern::pair12:
      cw += tw * inst.z;
      a = kappa / Scalar(2);
      break;
    case ActivePattern::pair13:
      b = 1;
      break;
    case ActivePattern::pair23:
      a = kappa;
      b = -1;
      break;
    default:
      throw config_error("kkt_residual: pattern must be a two-piece pattern");
  }
  const Vector<Scalar>& w = candidate.w;
  const Scalar lam = s * candidate.lam;
  KktResiduals<Scalar> r;
  r.stationarity = std::hypot(((w - cw) / tw + m.mu1 * inst.z + Scalar(2) * m.mu2 * w).norm(),
                              (lam - cl) / tl - a * m.mu1 - Scalar(2) * m.mu2 * lam);
  r.primal = std::abs(w.dot(inst.z) - a * lam - b) + std::max(Scalar(0), w.norm() - lam);
  r.complementarity = std::abs(m.mu2 * (w.squaredNorm() - lam * lam));
  r.dual = std::max(Scalar(0), -m.mu2);
  r.scale = Scalar(1) + cw.norm() / tw + std::abs(cl) / tl + inst.z.norm() + std::abs(m.mu1) * inst.z.norm() + std::abs(b);
  return r;
}

}  // namespace drsvm

#endif  // DRSVM_ORACLES_HPP
