#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "qce/problem.hpp"

namespace qce {

/* Brute-force references, deliberately written from the definitions rather
 * than sharing helpers with the solver, so they can arbitrate. */

// Hull projection by enumerating the polygon edges as segments.
inline Eigen::Vector2d projection_oracle(const Eigen::Vector2d& p,
                                         const QceSet& set) {
  const int L = set.levels;
  if (L >= 3) {
    // Vertices are in CCW order; inside iff left of every directed edge.
    bool inside = true;
    for (int l = 0; l < L && inside; ++l) {
      Eigen::Vector2d a = set.vertices.col(l);
      Eigen::Vector2d b = set.vertices.col((l + 1) % L);
      double cross = (b.x() - a.x()) * (p.y() - a.y()) -
                     (b.y() - a.y()) * (p.x() - a.x());
      inside = cross >= 0.0;
    }
    if (inside) return p;
  }
  double best_d2 = std::numeric_limits<double>::infinity();
  Eigen::Vector2d best = set.vertices.col(0);
  for (int l = 0; l < L; ++l) {
    Eigen::Vector2d a = set.vertices.col(l);
    Eigen::Vector2d b = set.vertices.col((l + 1) % L);
    Eigen::Vector2d ab = b - a;
    double len2 = ab.squaredNorm();
    double s = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
    s = std::clamp(s, 0.0, 1.0);
    Eigen::Vector2d cand = a + s * ab;
    double d2 = (p - cand).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = cand;
    }
  }
  return best;
}

/* Geometric safety margin of received point y for symbol s: distance to the
 * nearest edge of s's PSK decision cone, measured in the symbol frame. */
inline double margin_oracle(Complex y, Complex s, int psk_order) {
  Complex u = y * std::conj(s);
  double r = std::abs(u);
  double psi = std::arg(u);
  double half = M_PI / psk_order;
  return r * std::min(std::sin(half - psi), std::sin(half + psi));
}

struct EnumerationBudget {
  std::uint64_t max_candidates = 1000000;
};

enum class OracleStatus { kOptimal, kInfeasible, kBudgetExceeded };

struct OracleResult {
  OracleStatus status = OracleStatus::kBudgetExceeded;
  double objective = std::numeric_limits<double>::quiet_NaN();
  MatrixXcd X;  // argmin over the alphabet, when status == kOptimal
  std::uint64_t n_candidates = 0;
  std::uint64_t n_feasible = 0;
};

/* Global minimizer of the pattern-matching objective
 *   sum_q B_q^2 - (sum_q c_q B_q)^2,   B_q = sum_t |a_q^H x_t|^2
 * over all alphabet assignments satisfying every CI margin >= b, by full
 * enumeration with incremental single-digit updates. */
inline OracleResult exhaustive_solve(const Instance& inst,
                                     const EnumerationBudget& budget) {
  OracleResult res;
  const int digits = inst.N * inst.T;
  const int L = inst.qce.levels;

  double log_total = digits * std::log2(double(L));
  std::uint64_t total = 0;
  if (log_total <= 62.0) {
    total = 1;
    for (int i = 0; i < digits; ++i) total *= std::uint64_t(L);
  }
  if (total == 0 || total > budget.max_candidates) {
    res.status = OracleStatus::kBudgetExceeded;
    return res;
  }

  MatrixXcd steer_h = inst.steer.adjoint();  // Q x N
  std::vector<int> digit(digits, 0);
  MatrixXcd x = MatrixXcd::Constant(inst.N, inst.T, inst.qce.point(0));
  MatrixXcd y = steer_h * x;   // Q x T
  MatrixXcd yh = inst.H * x;   // K x T

  double best = std::numeric_limits<double>::infinity();
  MatrixXcd best_x;
  std::uint64_t feasible = 0;

  for (std::uint64_t cand = 0;; ++cand) {
    bool ok = true;
    for (int t = 0; t < inst.T && ok; ++t)
      for (int k = 0; k < inst.K && ok; ++k)
        ok = margin_oracle(yh(k, t), inst.S(k, t), inst.cfg.psk_order) >=
             inst.cfg.margin - 1e-12;
    if (ok) {
      ++feasible;
      double lin = 0.0, quad = 0.0;
      for (int q = 0; q < inst.Q; ++q) {
        double bq = y.row(q).squaredNorm();
        quad += bq * bq;
        lin += inst.c[q] * bq;
      }
      double obj = quad - lin * lin;
      if (obj < best) {
        best = obj;
        best_x = x;
      }
    }

    if (cand + 1 == total) break;
    // odometer step; digit i addresses antenna i%N of slot i/N
    for (int i = 0; i < digits; ++i) {
      int n = i % inst.N, t = i / inst.N;
      int next = digit[i] + 1 == L ? 0 : digit[i] + 1;
      Complex delta = inst.qce.point(next) - inst.qce.point(digit[i]);
      x(n, t) = inst.qce.point(next);  // exact, no accumulated drift
      y.col(t) += steer_h.col(n) * delta;
      yh.col(t) += inst.H.col(n) * delta;
      digit[i] = next;
      if (next != 0) break;  // no carry
    }
  }

  res.n_candidates = total;
  res.n_feasible = feasible;
  if (feasible == 0) {
    res.status = OracleStatus::kInfeasible;
  } else {
    res.status = OracleStatus::kOptimal;
    res.objective = best;
    res.X = best_x;
  }
  return res;
}

}  // namespace qce
