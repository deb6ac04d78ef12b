#ifndef DRSVM_EPIGRAPH_HPP
#define DRSVM_EPIGRAPH_HPP

// Euclidean projections onto the norm cones {(w, lam) : ||w||_q <= lam} for
// q in {1, 2, inf}, plus the matching norm-ball projections.
//
// Every cone projection also comes in a "weighted" flavour that projects in
// the metric  ww * ||w - x||^2 + wl * (lam - s)^2.  Only the ratio
// r = ww / wl matters; r = 1 is the plain Euclidean projection.  The prox
// solvers need this when the two blocks carry different step sizes.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

#include "drsvm/core.hpp"

namespace drsvm {

/// Work counters for the l1 threshold search.
struct ProjectionStats {
  std::size_t element_visits = 0;  ///< elements touched by partition passes
  std::size_t pivot_rounds = 0;
};

enum class L1Method { quickselect, sort };

struct L1Options {
  L1Method method = L1Method::quickselect;
  std::uint64_t seed = 0x243f6a8885a308d3ULL;
  ProjectionStats* stats = nullptr;
};

namespace detail {

// splitmix64; only drives pivot choice, so quality requirements are mild.
struct PivotRng {
  std::uint64_t state;
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(next() % n); }
};

template <typename Scalar>
Scalar feasibility_tolerance(Scalar scale) {
  const Scalar rel = std::max(Scalar(1e-12), Scalar(64) * std::numeric_limits<Scalar>::epsilon());
  return rel * std::max(Scalar(1), scale);
}

template <typename Scalar>
Scalar threshold_sorted(std::vector<Scalar> v, Scalar offset, Scalar slope, ProjectionStats* stats) {
  std::sort(v.begin(), v.end(), std::greater<Scalar>());
  if (stats) stats->element_visits += v.size();
  Scalar cum = 0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    cum += v[k];
    const Scalar tau = (cum - offset) / (Scalar(k + 1) + slope);
    const Scalar next = k + 1 < v.size() ? v[k + 1] : Scalar(0);
    if (tau >= next) return std::max(tau, Scalar(0));
  }
  return std::max((cum - offset) / (Scalar(v.size()) + slope), Scalar(0));
}

template <typename Scalar>
Scalar threshold_quickselect(std::vector<Scalar> u, Scalar offset, Scalar slope,
                             const L1Options& opts) {
  PivotRng rng{opts.seed};
  Scalar active_sum = 0;
  std::size_t active_count = 0;
  std::size_t lo = 0, hi = u.size();
  while (lo < hi) {
    const std::size_t n = hi - lo;
    Scalar pivot;
    if (n < 3) {
      pivot = u[lo + rng.below(n)];
    } else {
      Scalar a = u[lo + rng.below(n)], b = u[lo + rng.below(n)], c = u[lo + rng.below(n)];
      pivot = std::max(std::min(a, b), std::min(std::max(a, b), c));
    }
    // three-way partition: [lo, gt) > pivot, [gt, lt) == pivot, [lt, hi) < pivot
    std::size_t gt = lo, i = lo, lt = hi;
    Scalar sum_gt = 0;
    while (i < lt) {
      if (u[i] > pivot) {
        sum_gt += u[i];
        std::swap(u[i++], u[gt++]);
      } else if (u[i] < pivot) {
        std::swap(u[i], u[--lt]);
      } else {
        ++i;
      }
    }
    if (opts.stats) {
      opts.stats->element_visits += n;
      ++opts.stats->pivot_rounds;
    }
    const std::size_t count_gt = gt - lo;
    const Scalar f = active_sum + sum_gt - Scalar(active_count + count_gt) * pivot - slope * pivot - offset;
    if (f > 0) {
      hi = gt;  // root lies above the pivot: everything <= pivot is inactive
    } else {
      active_sum += sum_gt + pivot * Scalar(lt - gt);
      active_count += lt - lo;
      lo = lt;
    }
  }
  const Scalar denom = Scalar(active_count) + slope;
  return denom > 0 ? std::max((active_sum - offset) / denom, Scalar(0)) : Scalar(0);
}

}  // namespace detail

/// Root tau >= 0 of  sum_i max(v_i - tau, 0) = offset + slope * tau  for
/// v_i >= 0.  Requires sum_i v_i > offset so that the root is positive.
template <typename Scalar>
Scalar l1_threshold(const Vector<Scalar>& v, Scalar offset, Scalar slope, const L1Options& opts = {}) {
  std::vector<Scalar> work(v.data(), v.data() + v.size());
  if (opts.method == L1Method::sort) return detail::threshold_sorted(std::move(work), offset, slope, opts.stats);
  return detail::threshold_quickselect(std::move(work), offset, slope, opts);
}

template <typename Scalar>
Vector<Scalar> soft_threshold(const Vector<Scalar>& x, Scalar tau) {
  return x.unaryExpr([tau](Scalar xi) {
    const Scalar m = std::abs(xi) - tau;
    return m > 0 ? (xi > 0 ? m : -m) : Scalar(0);
  });
}

/// Clamp lam up to ||w||_q when the defect is pure rounding; anything larger
/// is a logic error.
template <typename Scalar>
void repair_feasibility(ConePoint<Scalar>& p, Norm q) {
  const Scalar norm = lp_norm<Scalar>(p.w, q);
  const Scalar defect = norm - p.lam;
  if (defect <= 0) return;
  if (defect > detail::feasibility_tolerance(std::max(norm, std::abs(p.lam))))
    throw invariant_violation("cone projection left a feasibility defect of " + std::to_string(double(defect)));
  p.lam = norm;
}

// ---------------------------------------------------------------------------
// l2

template <typename Scalar>
ConePoint<Scalar> proj_cone_l2_weighted(const Vector<Scalar>& x, Scalar s, Scalar ratio) {
  const Scalar nx = x.norm();
  if (nx <= s) return {x, s};
  if (ratio * nx <= -s) return {Vector<Scalar>::Zero(x.size()), Scalar(0)};
  const Scalar lam = (ratio * nx + s) / (Scalar(1) + ratio);
  ConePoint<Scalar> p{x * (lam / nx), lam};
  repair_feasibility(p, Norm::l2);
  return p;
}

template <typename Scalar>
ConePoint<Scalar> proj_cone_l2(const Vector<Scalar>& x, Scalar s) {
  return proj_cone_l2_weighted(x, s, Scalar(1));
}

// ---------------------------------------------------------------------------
// l1

template <typename Scalar>
ConePoint<Scalar> proj_cone_l1_weighted(const Vector<Scalar>& x, Scalar s, Scalar ratio,
                                        const L1Options& opts = {}) {
  const Vector<Scalar> mag = x.cwiseAbs();
  if (mag.sum() <= s) return {x, s};
  const Scalar tau = l1_threshold<Scalar>(mag, s, ratio, opts);
  ConePoint<Scalar> p{soft_threshold<Scalar>(x, tau), std::max(s + ratio * tau, Scalar(0))};
  repair_feasibility(p, Norm::l1);
  return p;
}

template <typename Scalar>
ConePoint<Scalar> proj_cone_l1(const Vector<Scalar>& x, Scalar s, const L1Options& opts = {}) {
  return proj_cone_l1_weighted(x, s, Scalar(1), opts);
}

// ---------------------------------------------------------------------------
// l-infinity, through the Moreau decomposition against the l1 cone.

template <typename Scalar>
ConePoint<Scalar> proj_cone_linf(const Vector<Scalar>& x, Scalar s, const L1Options& opts = {}) {
  const ConePoint<Scalar> polar = proj_cone_l1<Scalar>(-x, -s, opts);
  ConePoint<Scalar> p{x + polar.w, s + polar.lam};
  repair_feasibility(p, Norm::linf);
  return p;
}

/// In the weighted metric the polar of the l-inf cone is the l1 cone
/// {(y, t) : ||y||_1 <= -t / r}; substituting t' = -t / r turns that into a
/// standard l1 cone projection with ratio 1 / r.
template <typename Scalar>
ConePoint<Scalar> proj_cone_linf_weighted(const Vector<Scalar>& x, Scalar s, Scalar ratio,
                                          const L1Options& opts = {}) {
  if (ratio == Scalar(1)) return proj_cone_linf<Scalar>(x, s, opts);
  const ConePoint<Scalar> polar = proj_cone_l1_weighted<Scalar>(x, -s / ratio, Scalar(1) / ratio, opts);
  ConePoint<Scalar> p{x - polar.w, s + ratio * polar.lam};
  repair_feasibility(p, Norm::linf);
  return p;
}

// ---------------------------------------------------------------------------

template <typename Scalar>
ConePoint<Scalar> proj_cone(Norm q, const Vector<Scalar>& x, Scalar s, Scalar ratio = Scalar(1),
                            const L1Options& opts = {}) {
  switch (q) {
    case Norm::l1: return proj_cone_l1_weighted<Scalar>(x, s, ratio, opts);
    case Norm::l2: return proj_cone_l2_weighted<Scalar>(x, s, ratio);
    case Norm::linf: return proj_cone_linf_weighted<Scalar>(x, s, ratio, opts);
  }
  throw config_error("unknown norm");
}

template <typename Scalar>
ConePoint<Scalar> proj_cone(Norm q, const ConePoint<Scalar>& x, Scalar ratio = Scalar(1),
                            const L1Options& opts = {}) {
  return proj_cone<Scalar>(q, x.w, x.lam, ratio, opts);
}

/// Projection onto {w : ||w||_q <= radius}.
template <typename Scalar>
Vector<Scalar> proj_ball(Norm q, const Vector<Scalar>& x, Scalar radius, const L1Options& opts = {}) {
  switch (q) {
    case Norm::l2: {
      const Scalar nx = x.norm();
      return nx <= radius ? Vector<Scalar>(x) : Vector<Scalar>(x * (radius / nx));
    }
    case Norm::linf:
      return x.cwiseMax(-radius).cwiseMin(radius);
    case Norm::l1: {
      const Vector<Scalar> mag = x.cwiseAbs();
      if (mag.sum() <= radius) return x;
      return soft_threshold<Scalar>(x, l1_threshold<Scalar>(mag, radius, Scalar(0), opts));
    }
  }
  throw config_error("unknown norm");
}

}  // namespace drsvm

#endif  // DRSVM_EPIGRAPH_HPP
