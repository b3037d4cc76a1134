#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "qce/alphabet.hpp"

namespace qce {

/* Convex hull of the alphabet: a regular L-gon with circumradius eta, or a
 * segment when L == 2.  The closest-point map works in a rotated frame where
 * the nearest edge is the vertical line x = apothem. */
struct HullGeometry {
  int levels = 0;
  double eta = 0.0;
  double sector = 0.0;     // angle between adjacent edge normals, 2*pi/L
  double apothem = 0.0;    // eta * cos(pi/L), edge distance from the origin
  double half_edge = 0.0;  // eta * sin(pi/L), half the edge length
  Eigen::VectorXd rot_cos, rot_sin;  // cos/sin of m*sector, m = 0..L-1
};

inline HullGeometry make_hull(const QceSet& set) {
  HullGeometry h;
  h.levels = set.levels;
  h.eta = set.eta;
  h.sector = 2.0 * M_PI / set.levels;
  h.apothem = set.eta * std::cos(M_PI / set.levels);
  h.half_edge = set.eta * std::sin(M_PI / set.levels);
  h.rot_cos.resize(set.levels);
  h.rot_sin.resize(set.levels);
  for (int m = 0; m < set.levels; ++m) {
    h.rot_cos[m] = std::cos(m * h.sector);
    h.rot_sin[m] = std::sin(m * h.sector);
  }
  return h;
}

/* Exact projection onto the hull.  The sector whose edge normal is closest
 * in angle to p is found by rounding; inside that sector the polygon is
 * described by the single half-plane x <= apothem, so the projection is a
 * clamp against one edge.  Interior points are returned unchanged.  For
 * L == 2 the same formula degenerates to projection onto the segment
 * between the two alphabet points. */
inline Eigen::Vector2d project_conv_qce(const Eigen::Vector2d& p,
                                        const HullGeometry& hull) {
  const int L = hull.levels;
  double phi = std::atan2(p.y(), p.x());
  long m = std::lround(phi / hull.sector);
  int idx = int(((m % L) + L) % L);
  double c = hull.rot_cos[idx];
  double s = hull.rot_sin[idx];
  // rotate by -m*sector
  double qx = c * p.x() + s * p.y();
  double qy = -s * p.x() + c * p.y();
  if (qx <= hull.apothem) return p;
  double fy = std::clamp(qy, -hull.half_edge, hull.half_edge);
  return {c * hull.apothem - s * fy, s * hull.apothem + c * fy};
}

// Componentwise max(v, 0).
template <class Derived>
inline auto project_nonneg(const Eigen::MatrixBase<Derived>& v) {
  return v.cwiseMax(0.0);
}

/* Unique nonnegative root of 4*b^3 + rho*b - xi = 0 (rho > 0, xi >= 0).
 * Cardano with the second cube root eliminated through the product
 * identity t1*t2 = -rho/12, which avoids cancellation for small xi and
 * yields exactly 0 at xi = 0; two Newton steps polish to full precision. */
inline double positive_cubic_root(double rho, double xi) {
  double u = xi / 8.0;
  double k = rho / 12.0;
  double t = std::cbrt(u + std::sqrt(u * u + k * k * k));
  double b = t - k / t;
  for (int it = 0; it < 2; ++it) {
    double g = (4.0 * b * b + rho) * b - xi;
    b -= g / (12.0 * b * b + rho);
  }
  return b < 0.0 ? 0.0 : b;
}

// Nearest alphabet vertex; ties resolved toward the lowest vertex index.
inline int snap_index(const Eigen::Vector2d& p, const QceSet& set) {
  int best = 0;
  double best_d2 = (set.vertices.col(0) - p).squaredNorm();
  for (int l = 1; l < set.levels; ++l) {
    double d2 = (set.vertices.col(l) - p).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = l;
    }
  }
  return best;
}

inline Eigen::Vector2d snap_to_qce(const Eigen::Vector2d& p,
                                   const QceSet& set) {
  return set.vertices.col(snap_index(p, set));
}

}  // namespace qce
