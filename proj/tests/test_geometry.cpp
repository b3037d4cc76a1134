#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "qce/alphabet.hpp"
#include "qce/geometry.hpp"
#include "qce/rng.hpp"

using namespace qce;
using Eigen::Vector2d;

namespace {

/* Reference projection onto the alphabet hull: interior test against every
 * edge half-plane, otherwise the nearest point over all edge segments.
 * Quadratic in L, independent of the sector arithmetic under test. */
Vector2d projection_oracle(const Vector2d& p, const QceSet& set,
                           const HullGeometry& hull) {
  const int L = set.levels;
  bool inside = true;
  for (int m = 0; m < L && inside; ++m) {
    Vector2d n(hull.rot_cos[m], hull.rot_sin[m]);
    if (n.dot(p) > hull.apothem) inside = false;
  }
  if (inside && L > 2) return p;
  double best_d2 = std::numeric_limits<double>::infinity();
  Vector2d best = set.vertices.col(0);
  for (int l = 0; l < L; ++l) {
    Vector2d a = set.vertices.col(l);
    Vector2d b = set.vertices.col((l + 1) % L);
    Vector2d ab = b - a;
    double len2 = ab.squaredNorm();
    double s = len2 > 0.0 ? std::clamp(ab.dot(p - a) / len2, 0.0, 1.0) : 0.0;
    Vector2d cand = a + s * ab;
    double d2 = (p - cand).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = cand;
    }
  }
  return best;
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("hull constants for the square alphabet") {
  QceSet set = build_qce_set(4, 1.0, 1);
  HullGeometry h = make_hull(set);
  CHECK(set.eta == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(h.apothem == doctest::Approx(0.70710678118654757).epsilon(1e-15));
  CHECK(h.half_edge == doctest::Approx(0.70710678118654757).epsilon(1e-15));
  CHECK(h.sector == doctest::Approx(M_PI / 2).epsilon(1e-15));
}

TEST_CASE("alphabet vertices sit at odd multiples of pi/L") {
  QceSet set = build_qce_set(4, 1.0, 8);
  CHECK(set.eta == doctest::Approx(0.35355339059327379).epsilon(1e-15));
  for (int l = 0; l < 4; ++l) {
    double phase = (2.0 * l + 1.0) * M_PI / 4;
    CHECK(set.vertices(0, l) ==
          doctest::Approx(set.eta * std::cos(phase)).epsilon(1e-15));
    CHECK(set.vertices(1, l) ==
          doctest::Approx(set.eta * std::sin(phase)).epsilon(1e-15));
  }
  QceSet seg = build_qce_set(2, 4.0, 1);
  CHECK(seg.vertices(0, 0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(seg.vertices(1, 0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(seg.vertices(1, 1) == doctest::Approx(-2.0).epsilon(1e-15));
}

TEST_CASE("projection matches the segment oracle on random points") {
  Rng rng(20240513);
  for (int L : {2, 3, 4, 8, 16}) {
    QceSet set = build_qce_set(L, 1.7, 3);
    HullGeometry hull = make_hull(set);
    double span = 3.0 * set.eta;
    double worst = 0.0;
    for (int i = 0; i < 2000; ++i) {
      Vector2d p(span * (2.0 * rng.uniform() - 1.0),
                 span * (2.0 * rng.uniform() - 1.0));
      Vector2d got = project_conv_qce(p, hull);
      Vector2d want = projection_oracle(p, set, hull);
      worst = std::max(worst, (got - want).norm());
    }
    CHECK(worst <= 1e-9);
  }
}

TEST_CASE("projection fixes known points of the unit square alphabet") {
  QceSet set = build_qce_set(4, 1.0, 1);
  HullGeometry hull = make_hull(set);
  // Outside through the right edge midpoint.
  Vector2d a = project_conv_qce({1.0, 0.0}, hull);
  CHECK(a.x() == doctest::Approx(0.70710678118654757).epsilon(1e-15));
  CHECK(a.y() == doctest::Approx(0.0).epsilon(1e-15));
  // Outside at edge height within the clamp range.
  Vector2d b = project_conv_qce({2.0, 0.3}, hull);
  CHECK(b.x() == doctest::Approx(hull.apothem).epsilon(1e-14));
  CHECK(b.y() == doctest::Approx(0.3).epsilon(1e-14));
  // Beyond the corner: lands on the vertex.
  Vector2d c = project_conv_qce({1.0, 1.0}, hull);
  CHECK(c.x() == doctest::Approx(0.70710678118654757).epsilon(1e-13));
  CHECK(c.y() == doctest::Approx(0.70710678118654757).epsilon(1e-13));
  // Interior points are returned unchanged, bit for bit.
  Vector2d in(0.1, -0.2);
  Vector2d got = project_conv_qce(in, hull);
  CHECK(got.x() == in.x());
  CHECK(got.y() == in.y());
}

TEST_CASE("projection is idempotent and nonexpansive") {
  Rng rng(7);
  for (int L : {2, 3, 5, 8}) {
    QceSet set = build_qce_set(L, 0.9, 2);
    HullGeometry hull = make_hull(set);
    for (int i = 0; i < 400; ++i) {
      Vector2d p(3.0 * rng.normal(), 3.0 * rng.normal());
      Vector2d q(3.0 * rng.normal(), 3.0 * rng.normal());
      Vector2d pp = project_conv_qce(p, hull);
      Vector2d qq = project_conv_qce(q, hull);
      CHECK((project_conv_qce(pp, hull) - pp).norm() <= 1e-12);
      CHECK((pp - qq).norm() <= (p - q).norm() + 1e-12);
      CHECK(pp.norm() <= set.eta + 1e-12);
    }
  }
}

TEST_CASE("cubic root closed form is exact") {
  // 4b^3 + b = 5 at b = 1 gives (rho, xi) = (1, 5); spot values below are
  // solved independently to full precision.
  CHECK(positive_cubic_root(1.0, 5.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(positive_cubic_root(2.0, 5.0) ==
        doctest::Approx(0.92370951891636643).epsilon(1e-14));
  CHECK(positive_cubic_root(0.01, 1e-6) ==
        doctest::Approx(9.9999600004799889e-05).epsilon(1e-14));
  CHECK(positive_cubic_root(1e4, 3.0) ==
        doctest::Approx(0.00029999999998919996).epsilon(1e-14));
  CHECK(positive_cubic_root(3.7, 0.0) == 0.0);
}

TEST_CASE("cubic root satisfies its equation over random inputs") {
  Rng rng(99);
  for (int i = 0; i < 20000; ++i) {
    double rho = std::pow(10.0, -6.0 + 10.0 * rng.uniform());
    double xi = std::pow(10.0, -8.0 + 12.0 * rng.uniform());
    double b = positive_cubic_root(rho, xi);
    CHECK(b >= 0.0);
    double resid = std::abs((4.0 * b * b + rho) * b - xi);
    CHECK(resid <= 1e-10 * std::max(1.0, xi));
  }
}

TEST_CASE("cubic root agrees with bisection") {
  Rng rng(123);
  for (int i = 0; i < 300; ++i) {
    double rho = std::pow(10.0, -4.0 + 8.0 * rng.uniform());
    double xi = std::pow(10.0, -4.0 + 8.0 * rng.uniform());
    double lo = 0.0, hi = std::max(1.0, std::cbrt(xi / 4.0) + xi / rho);
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      ((4.0 * mid * mid + rho) * mid < xi ? lo : hi) = mid;
    }
    CHECK(positive_cubic_root(rho, xi) ==
          doctest::Approx(0.5 * (lo + hi)).epsilon(1e-10));
  }
}

TEST_CASE("snap picks the nearest vertex, ties to the lowest index") {
  // exact axis-aligned vertices so equidistance is exact in floating point
  QceSet set;
  set.levels = 4;
  set.eta = 1.0;
  set.vertices.resize(2, 4);
  set.vertices << 0.0, -1.0, 0.0, 1.0,
                  1.0, 0.0, -1.0, 0.0;
  CHECK(snap_index({1.0, 1.0}, set) == 0);    // tie between 0 and 3
  CHECK(snap_index({-1.0, -1.0}, set) == 1);  // tie between 1 and 2
  CHECK(snap_index({0.0, 0.0}, set) == 0);    // four-way tie
  CHECK(snap_index({0.9, -1.1}, set) == 2);   // unambiguous nearest

  QceSet poly = build_qce_set(8, 2.0, 2);
  for (int l = 0; l < poly.levels; ++l) {
    Vector2d v = poly.vertices.col(l);
    CHECK(snap_index(v, poly) == l);
    Vector2d s = snap_to_qce(v, poly);
    CHECK(s.x() == v.x());
    CHECK(s.y() == v.y());
  }
}

TEST_CASE("snap of an exterior projection stays within half an edge") {
  // exterior points project onto the hull boundary, and no boundary point
  // is farther than half an edge from its nearest vertex
  Rng rng(5150);
  QceSet set = build_qce_set(8, 1.0, 4);
  HullGeometry hull = make_hull(set);
  for (int i = 0; i < 500; ++i) {
    double ang = 2.0 * M_PI * rng.uniform();
    double rad = set.eta * (1.001 + std::abs(rng.normal()));
    Vector2d p(rad * std::cos(ang), rad * std::sin(ang));
    Vector2d f = project_conv_qce(p, hull);
    Vector2d v = snap_to_qce(f, set);
    CHECK((f - v).norm() <= hull.half_edge + 1e-12);
  }
}

TEST_CASE("nonnegative clamp") {
  Eigen::MatrixXd m(2, 2);
  m << -1.0, 2.0, 0.0, -3.5;
  Eigen::MatrixXd r = project_nonneg(m);
  CHECK(r(0, 0) == 0.0);
  CHECK(r(0, 1) == 2.0);
  CHECK(r(1, 0) == 0.0);
  CHECK(r(1, 1) == 0.0);
}

}  // TEST_SUITE
