#ifndef DRSVM_QUARTIC_HPP
#define DRSVM_QUARTIC_HPP

// Real roots of polynomials of degree <= 4 by closed forms (quadratic formula,
// trigonometric/Cardano cubic, Ferrari quartic), each root polished with two
// Newton steps on the original coefficients.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "drsvm/core.hpp"

namespace drsvm {

namespace detail {

/// Horner evaluation; coeffs are highest degree first.
template <typename Scalar, std::size_t N>
Scalar poly_eval(const std::array<Scalar, N>& c, Scalar x) {
  Scalar v = 0;
  for (Scalar ci : c) v = v * x + ci;
  return v;
}

template <typename Scalar, std::size_t N>
Scalar poly_deriv(const std::array<Scalar, N>& c, Scalar x) {
  Scalar v = 0;
  const std::size_t deg = N - 1;
  for (std::size_t i = 0; i < deg; ++i) v = v * x + c[i] * Scalar(deg - i);
  return v;
}

/// Scale against which a residual |p(x)| is judged: sum_i |c_i| |x|^deg_i.
template <typename Scalar, std::size_t N>
Scalar poly_scale(const std::array<Scalar, N>& c, Scalar x) {
  Scalar v = 0;
  const Scalar ax = std::abs(x);
  for (Scalar ci : c) v = v * ax + std::abs(ci);
  return v;
}

template <typename Scalar>
void quadratic_roots(Scalar a, Scalar b, Scalar c, std::vector<Scalar>& out, Scalar slack) {
  // a x^2 + b x + c, a != 0
  const Scalar disc = b * b - Scalar(4) * a * c;
  if (disc < 0) {
    // a nearly-double root pushed into the complex plane by rounding
    if (-disc <= slack * (b * b + std::abs(Scalar(4) * a * c))) out.push_back(-b / (Scalar(2) * a));
    return;
  }
  const Scalar sq = std::sqrt(disc);
  const Scalar t = -Scalar(0.5) * (b + (b >= 0 ? sq : -sq));
  if (t != 0) {
    out.push_back(t / a);
    out.push_back(c / t);
  } else {
    out.push_back(Scalar(0));
    out.push_back(Scalar(0));
  }
}

/// Real roots of x^3 + a x^2 + b x + c.
template <typename Scalar>
void monic_cubic_roots(Scalar a, Scalar b, Scalar c, std::vector<Scalar>& out) {
  const Scalar shift = a / Scalar(3);
  const Scalar p = b - a * a / Scalar(3);
  const Scalar q = Scalar(2) * a * a * a / Scalar(27) - a * b / Scalar(3) + c;
  const Scalar half_q = q / Scalar(2), third_p = p / Scalar(3);
  const Scalar disc = half_q * half_q + third_p * third_p * third_p;
  if (disc > 0) {
    const Scalar sq = std::sqrt(disc);
    const Scalar u = std::cbrt(-half_q + (half_q <= 0 ? sq : -sq));
    const Scalar t = u != 0 ? u - third_p / u : Scalar(0);
    out.push_back(t - shift);
  } else if (third_p == 0) {
    out.push_back(-shift);
  } else {
    const Scalar r = std::sqrt(-third_p);
    const Scalar arg = std::clamp(-half_q / (r * r * r), Scalar(-1), Scalar(1));
    const Scalar phi = std::acos(arg);
    const Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
    for (int k = 0; k < 3; ++k) out.push_back(Scalar(2) * r * std::cos((phi + two_pi * Scalar(k)) / Scalar(3)) - shift);
  }
}

/// Real roots of x^4 + a x^3 + b x^2 + c x + d (Ferrari).
template <typename Scalar>
void monic_quartic_roots(Scalar a, Scalar b, Scalar c, Scalar d, std::vector<Scalar>& out, Scalar slack) {
  const Scalar shift = a / Scalar(4);
  const Scalar a2 = a * a;
  const Scalar p = b - Scalar(3) * a2 / Scalar(8);
  const Scalar q = c - a * b / Scalar(2) + a2 * a / Scalar(8);
  const Scalar r = d - a * c / Scalar(4) + a2 * b / Scalar(16) - Scalar(3) * a2 * a2 / Scalar(256);
  std::vector<Scalar> ys;
  const Scalar mag = std::abs(p) + std::abs(q) + std::abs(r);
  if (std::abs(q) <= std::numeric_limits<Scalar>::epsilon() * std::max(mag, Scalar(1)) * Scalar(4)) {
    // biquadratic y^4 + p y^2 + r
    std::vector<Scalar> zs;
    quadratic_roots(Scalar(1), p, r, zs, slack);
    for (Scalar z : zs) {
      if (z > 0) {
        ys.push_back(std::sqrt(z));
        ys.push_back(-std::sqrt(z));
      } else if (z >= -slack * std::max(mag, Scalar(1))) {
        ys.push_back(Scalar(0));
      }
    }
  } else {
    // resolvent: 8 m^3 + 8 p m^2 + (2 p^2 - 8 r) m - q^2 = 0 has a root m > 0
    std::vector<Scalar> ms;
    monic_cubic_roots(p, (p * p / Scalar(4) - r), -q * q / Scalar(8), ms);
    Scalar m = *std::max_element(ms.begin(), ms.end());
    // one Newton step on the resolvent
    {
      const Scalar f = ((m + p) * m + (p * p / Scalar(4) - r)) * m - q * q / Scalar(8);
      const Scalar df = (Scalar(3) * m + Scalar(2) * p) * m + (p * p / Scalar(4) - r);
      if (df != 0) {
        const Scalar m2 = m - f / df;
        if (m2 > 0) m = m2;
      }
    }
    if (m <= 0) m = std::numeric_limits<Scalar>::min();
    const Scalar s = std::sqrt(Scalar(2) * m);
    const Scalar k = q / (Scalar(2) * s);
    quadratic_roots(Scalar(1), -s, p / Scalar(2) + m + k, ys, slack);
    quadratic_roots(Scalar(1), s, p / Scalar(2) + m - k, ys, slack);
  }
  for (Scalar y : ys) out.push_back(y - shift);
}

template <typename Scalar, std::size_t N>
void polish_and_filter(const std::array<Scalar, N>& c, std::vector<Scalar>& roots, Scalar residual_tol) {
  std::vector<Scalar> kept;
  for (Scalar x : roots) {
    if (!std::isfinite(x)) continue;
    for (int it = 0; it < 2; ++it) {
      const Scalar f = poly_eval(c, x);
      const Scalar df = poly_deriv(c, x);
      if (df == 0) break;
      const Scalar x2 = x - f / df;
      if (std::isfinite(x2) && std::abs(poly_eval(c, x2)) <= std::abs(f)) x = x2;
      else break;
    }
    if (std::abs(poly_eval(c, x)) <= residual_tol * std::max(Scalar(1), poly_scale(c, x))) kept.push_back(x);
  }
  std::sort(kept.begin(), kept.end());
  roots.clear();
  for (Scalar x : kept) {
    if (!roots.empty() && std::abs(x - roots.back()) <= Scalar(1e-9) * std::max(Scalar(1), std::abs(x))) continue;
    roots.push_back(x);
  }
}

}  // namespace detail

/// All real roots of p1 x^4 + p2 x^3 + p3 x^2 + p4 x + p5, ascending and
/// de-duplicated.  Leading coefficients that are negligible against the rest
/// drop the degree.  Every returned root has |poly(x)| <= 1e-8 * max(1,
/// sum_i |p_i| |x|^deg_i).  Empty when there are no real roots.
template <typename Scalar>
std::vector<Scalar> solve_quartic_real_roots(Scalar p1, Scalar p2, Scalar p3, Scalar p4, Scalar p5) {
  const std::array<Scalar, 5> c{p1, p2, p3, p4, p5};
  Scalar scale = 0;
  for (Scalar ci : c) scale = std::max(scale, std::abs(ci));
  if (scale == 0) throw config_error("solve_quartic_real_roots: all coefficients are zero");
  const Scalar negligible = Scalar(64) * std::numeric_limits<Scalar>::epsilon() * scale;
  const Scalar slack = std::sqrt(std::numeric_limits<Scalar>::epsilon());
  const Scalar residual_tol = Scalar(1e-8);

  std::size_t lead = 0;
  while (lead < 4 && std::abs(c[lead]) <= negligible) ++lead;
  std::vector<Scalar> roots;
  const Scalar a0 = c[lead];
  switch (4 - lead) {
    case 4:
      detail::monic_quartic_roots(c[1] / a0, c[2] / a0, c[3] / a0, c[4] / a0, roots, slack);
      break;
    case 3:
      detail::monic_cubic_roots(c[2] / a0, c[3] / a0, c[4] / a0, roots);
      break;
    case 2:
      detail::quadratic_roots(c[2], c[3], c[4], roots, slack);
      break;
    case 1:
      roots.push_back(-c[4] / c[3]);
      break;
    default:
      break;  // nonzero constant
  }
  detail::polish_and_filter(c, roots, residual_tol);
  return roots;
}

}  // namespace drsvm

#endif  // DRSVM_QUARTIC_HPP
