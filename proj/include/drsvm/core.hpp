#ifndef DRSVM_CORE_HPP
#define DRSVM_CORE_HPP

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace drsvm {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Norm selector for the epigraph cone {(w, lam) : ||w||_q <= lam}.
enum class Norm { l1, l2, linf };

inline const char* to_string(Norm q) {
  switch (q) {
    case Norm::l1: return "1";
    case Norm::l2: return "2";
    case Norm::linf: return "inf";
  }
  return "?";
}

/// Accepts "1", "2", "inf" (also "infinity", "Inf").
Norm parse_norm(const std::string& text);

/// A point (w, lam) of R^d x R. Iterates of every solver live on the cone.
template <typename Scalar>
struct ConePoint {
  Vector<Scalar> w;
  Scalar lam = Scalar(0);
};

template <typename Scalar, typename Derived>
Scalar lp_norm(const Eigen::MatrixBase<Derived>& w, Norm q) {
  switch (q) {
    case Norm::l1: return w.template lpNorm<1>();
    case Norm::l2: return w.norm();
    case Norm::linf: return w.size() == 0 ? Scalar(0) : w.template lpNorm<Eigen::Infinity>();
  }
  return Scalar(0);
}

/// Dual norm index: 1 <-> inf, 2 <-> 2.
inline Norm dual_norm(Norm q) {
  switch (q) {
    case Norm::l1: return Norm::linf;
    case Norm::l2: return Norm::l2;
    case Norm::linf: return Norm::l1;
  }
  return Norm::l2;
}

template <typename Scalar>
bool cone_feasible(const ConePoint<Scalar>& x, Norm q, Scalar tol = Scalar(0)) {
  return lp_norm<Scalar>(x.w, q) <= x.lam + tol;
}

// Error taxonomy. Everything derives from drsvm::error so callers can catch
// broadly; the CLI maps subclasses to exit codes.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct config_error : error {
  using error::error;
};

struct data_error : error {
  using error::error;
};

struct parse_error : data_error {
  parse_error(std::size_t line, const std::string& what)
      : data_error("line " + std::to_string(line) + ": " + what), line_number(line) {}
  std::size_t line_number;
};

struct dimension_error : data_error {
  using data_error::data_error;
};

struct numerical_error : error {
  using error::error;
};

/// The intersection of a hyperplane and a norm ball is empty.
struct infeasible_error : numerical_error {
  using numerical_error::numerical_error;
};

/// A subproblem needs 2/kappa but kappa == 0.
struct degenerate_kappa_error : numerical_error {
  using numerical_error::numerical_error;
};

/// An iteration cap was hit before the tolerance was met.
struct convergence_error : numerical_error {
  convergence_error(const std::string& what, double lo, double hi)
      : numerical_error(what), bracket_lo(lo), bracket_hi(hi) {}
  double bracket_lo;
  double bracket_hi;
};

/// A branch that the math says is unreachable was reached.
struct invariant_violation : numerical_error {
  using numerical_error::numerical_error;
};

}  // namespace drsvm

#endif  // DRSVM_CORE_HPP
