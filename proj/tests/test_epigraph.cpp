#include <doctest.h>

#include <random>

#include "drsvm/epigraph.hpp"
#include "drsvm/oracles.hpp"

using namespace drsvm;
using Vec = Eigen::VectorXd;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

void check_point(const ConePoint<double>& p, const Vec& w, double lam, double tol = 1e-12) {
  REQUIRE(p.w.size() == w.size());
  CHECK((p.w - w).lpNorm<Eigen::Infinity>() <= tol);
  CHECK(std::abs(p.lam - lam) <= tol);
}

double sqdist(const ConePoint<double>& p, const Vec& x, double s) {
  return (p.w - x).squaredNorm() + (p.lam - s) * (p.lam - s);
}

// zoomed grid over a box around the input; returns the grid optimum
double grid_value(Norm q, const Vec& x, double s) {
  const double r = std::sqrt(x.squaredNorm() + s * s) + 0.1;
  const auto d = x.size();
  Vec lo = Vec::Constant(d + 1, -r), hi = Vec::Constant(d + 1, r);
  lo[d] = 0;
  auto f = [&](const ConePoint<double>& y) { return sqdist(y, x, s); };
  return oracle_grid_min<double>(f, lo, hi, 11, q, 40).objective;
}

}  // namespace

TEST_CASE("l2 cone projection: three branches") {
  check_point(proj_cone_l2<double>(vec({0, 0}), 1.0), vec({0, 0}), 1.0);
  check_point(proj_cone_l2<double>(vec({3, 4}), -6.0), vec({0, 0}), 0.0);
  check_point(proj_cone_l2<double>(vec({3, 4}), 0.0), vec({1.5, 2}), 2.5);
}

TEST_CASE("l1 cone projection examples") {
  check_point(proj_cone_l1<double>(vec({1, 0}), 2.0), vec({1, 0}), 2.0);
  check_point(proj_cone_l1<double>(vec({2, 0}), 0.0), vec({1, 0}), 1.0);
  check_point(proj_cone_l1<double>(vec({1, 1}), -1.0), vec({0, 0}), 0.0);
}

TEST_CASE("l-inf cone projection examples") {
  check_point(proj_cone_linf<double>(vec({0.5, 0.5}), 1.0), vec({0.5, 0.5}), 1.0);
  check_point(proj_cone_linf<double>(vec({2, 0}), 0.0), vec({1, 0}), 1.0);
  check_point(proj_cone_linf<double>(vec({0, 0}), -3.0), vec({0, 0}), 0.0);
}

TEST_CASE("closed-form examples agree with the grid oracle") {
  struct Case {
    Norm q;
    Vec x;
    double s;
  };
  const Case cases[] = {{Norm::l2, vec({3, 4}), 0.0},  {Norm::l2, vec({3, 4}), -6.0}, {Norm::l1, vec({2, 0}), 0.0},
                        {Norm::l1, vec({1, 1}), -1.0}, {Norm::linf, vec({2, 0}), 0.0}, {Norm::linf, vec({0, 0}), -3.0}};
  for (const auto& c : cases) {
    const double exact = sqdist(proj_cone<double>(c.q, c.x, c.s), c.x, c.s);
    const double grid = grid_value(c.q, c.x, c.s);
    CHECK(exact <= grid + 1e-12);
    CHECK(grid - exact <= 1e-3);
  }
}

TEST_CASE("projection properties on random inputs") {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> normal(0.0, 3.0);
  std::uniform_int_distribution<int> dim(1, 12);
  for (Norm q : {Norm::l1, Norm::l2, Norm::linf}) {
    CAPTURE(to_string(q));
    for (int t = 0; t < 500; ++t) {
      const int d = dim(rng);
      Vec a(d), b(d);
      for (auto& v : a) v = normal(rng);
      for (auto& v : b) v = normal(rng);
      const double sa = normal(rng), sb = normal(rng);
      const auto pa = proj_cone<double>(q, a, sa), pb = proj_cone<double>(q, b, sb);
      CHECK(lp_norm<double>(pa.w, q) <= pa.lam + 1e-12);
      const auto ppa = proj_cone<double>(q, pa);
      CHECK((ppa.w - pa.w).lpNorm<Eigen::Infinity>() <= 1e-12);
      CHECK(std::abs(ppa.lam - pa.lam) <= 1e-12);
      const double lhs = (pa.w - pb.w).squaredNorm() + (pa.lam - pb.lam) * (pa.lam - pb.lam);
      const double rhs = (a - b).squaredNorm() + (sa - sb) * (sa - sb);
      CHECK(lhs <= rhs * (1 + 1e-12) + 1e-24);
      // optimality: the residual is in the polar cone, i.e. orthogonal to the
      // projection and non-positive against the cone
      const double ortho = (a - pa.w).dot(pa.w) + (sa - pa.lam) * pa.lam;
      CHECK(std::abs(ortho) <= 1e-9 * (1 + rhs + a.squaredNorm() + sa * sa));
    }
  }
}

TEST_CASE("l-inf projection is the Moreau complement of the l1 projection") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal(0.0, 2.0);
  for (int t = 0; t < 200; ++t) {
    Vec x(5);
    for (auto& v : x) v = normal(rng);
    const double s = normal(rng);
    const auto p = proj_cone_linf<double>(x, s);
    const auto n = proj_cone_l1<double>(-x, -s);
    CHECK((p.w - n.w - x).lpNorm<Eigen::Infinity>() <= 1e-12);
    CHECK(std::abs(p.lam - n.lam - s) <= 1e-12);
  }
}

TEST_CASE("quickselect and sort thresholds agree") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 1.0);
  L1Options sorted;
  sorted.method = L1Method::sort;
  for (int t = 0; t < 200; ++t) {
    Vec x(1 + t % 40);
    for (auto& v : x) v = normal(rng);
    if (t % 5 == 0) x.head(x.size() / 2).setConstant(0.75);  // ties among breakpoints
    const double s = normal(rng);
    L1Options quick;
    quick.seed = static_cast<std::uint64_t>(t);
    const auto a = proj_cone_l1<double>(x, s, quick), b = proj_cone_l1<double>(x, s, sorted);
    CHECK((a.w - b.w).lpNorm<Eigen::Infinity>() <= 1e-12);
    CHECK(std::abs(a.lam - b.lam) <= 1e-12);
  }
}

TEST_CASE("quickselect output is insensitive to the pivot seed") {
  Vec x(200);
  std::mt19937_64 rng(77);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& v : x) v = normal(rng);
  L1Options a, b;
  a.seed = 1;
  b.seed = 123456789;
  const auto pa = proj_cone_l1<double>(x, 0.5, a), pb = proj_cone_l1<double>(x, 0.5, b);
  CHECK((pa.w - pb.w).lpNorm<Eigen::Infinity>() <= 1e-14);
  CHECK(std::abs(pa.lam - pb.lam) <= 1e-14);
}

TEST_CASE("l1 projection work grows linearly in d") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> per_element;
  for (int d : {500, 2000, 8000, 32000}) {
    ProjectionStats stats;
    L1Options opts;
    opts.stats = &stats;
    const int reps = 10;
    for (int r = 0; r < reps; ++r) {
      Vec x(d);
      for (auto& v : x) v = normal(rng);
      opts.seed = static_cast<std::uint64_t>(r);
      proj_cone_l1<double>(x, 0.0, opts);
    }
    per_element.push_back(double(stats.element_visits) / (double(d) * reps));
  }
  for (double v : per_element) CHECK(v <= 8.0);
  CHECK(per_element.back() <= 2.0 * per_element.front() + 1.0);
}

TEST_CASE("ball projections") {
  const Vec x = vec({3, -4});
  CHECK((proj_ball<double>(Norm::l2, x, 1.0) - vec({0.6, -0.8})).norm() <= 1e-15);
  CHECK((proj_ball<double>(Norm::linf, x, 1.0) - vec({1, -1})).norm() <= 1e-15);
  CHECK((proj_ball<double>(Norm::l1, x, 1.0) - vec({0, -1})).norm() <= 1e-15);
  CHECK(proj_ball<double>(Norm::l1, x, 10.0) == x);
}

TEST_CASE("repair_feasibility only clamps rounding-size defects") {
  ConePoint<double> p{vec({1.0, 0.0}), 1.0 - 1e-15};
  repair_feasibility(p, Norm::l2);
  CHECK(p.lam == 1.0);
}

TEST_CASE("projections work in long double") {
  using LVec = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  LVec x(2);
  x << 3, 4;
  const auto p = proj_cone_l2<long double>(x, 0.0L);
  CHECK(std::abs(static_cast<double>(p.lam - 2.5L)) <= 1e-15);
  const auto q = proj_cone_l1<long double>(LVec(LVec::Constant(1, 2.0L)), 0.0L);
  CHECK(static_cast<double>(q.lam) == doctest::Approx(1.0));
}
