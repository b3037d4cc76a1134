#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "qce/inner_solver.hpp"

namespace qce {

struct AlmParams {
  double rho_mu0 = 0.01;
  double rho_nu0 = 0.01 / 3.0;
  double mult_lo = -1e3, mult_hi = 1e3;  // safeguard box for mu and nu
  double tau = 1.01;    // penalty growth factor
  double delta = 0.95;  // required violation reduction ratio
  int max_outer = 500;
  int max_inner = 2000;
  double stop_tol = -1.0;   // < 0: sqrt(T) * 1e-3
  double eps_scale = 1.0;   // inner tolerance eps_m = eps_scale / m
  double gamma_dir0 = -1.0; // gamma at (rho_mu0, rho_nu0); < 0: computed
};

struct OuterRow {
  int m = 0;
  double value = 0.0;   // augmented Lagrangian at the outer iterate
  double viol_c = 0.0;  // |Cx - z - b|
  double viol_a = 0.0;  // |Ax - w|
  double cert_norm = 0.0;
  double rho_mu = 0.0;
  int inner_iters = 0;
  double lambda = 0.0;
  bool certified = false;  // inner solve reached its eps_m tolerance
};

struct AlmResult {
  bool converged = false;
  int outers = 0;
  int uncertified_inner = 0;
  int monotone_violations = 0;
  std::vector<OuterRow> rows;
};

inline void update_multipliers(SolverState& st, const MatrixXd& rc,
                               const MatrixXcd& ra, const AlmParams& p) {
  st.mu = (st.mu + st.rho_mu * rc).cwiseMax(p.mult_lo).cwiseMin(p.mult_hi);
  MatrixXcd raw = st.nu + st.rho_nu * ra;
  st.nu.real() = raw.real().cwiseMax(p.mult_lo).cwiseMin(p.mult_hi);
  st.nu.imag() = raw.imag().cwiseMax(p.mult_lo).cwiseMin(p.mult_hi);
}

/* Grow both penalties by tau unless the sqrt(rho)-scaled stacked violation
 * dropped by at least the factor delta.  Both sides are weighted with the
 * current penalties (the common factor cancels, keeping the ratio test on
 * the per-constraint-family weights a_mu, a_nu).  Exactly one branch fires;
 * rho_nu / rho_mu is invariant. */
inline bool update_penalties(SolverState& st, double viol_c, double viol_a,
                             double prev_c, double prev_a,
                             const AlmParams& p) {
  double cur =
      std::sqrt(st.rho_mu * viol_c * viol_c + st.rho_nu * viol_a * viol_a);
  double prev =
      std::sqrt(st.rho_mu * prev_c * prev_c + st.rho_nu * prev_a * prev_a);
  if (cur >= p.delta * prev) {
    st.rho_mu *= p.tau;
    st.rho_nu *= p.tau;
    return true;
  }
  return false;
}

/* Inexact augmented Lagrangian loop on the state's current lambda: solve the
 * subproblem to eps_m, take a safeguarded multiplier step, apply the ratio
 * penalty test; stop once max(cert, viol_C, viol_A) <= stop_tol. */
inline AlmResult alm_solve(SolverState& st, const Instance& inst,
                           const AlmParams& p) {
  AlmResult res;
  st.rho_mu = p.rho_mu0;
  st.rho_nu = p.rho_nu0;
  double gdir = p.gamma_dir0 > 0.0
                    ? p.gamma_dir0
                    : compute_gamma(p.rho_mu0, p.rho_nu0, inst);
  double stop =
      p.stop_tol >= 0.0 ? p.stop_tol : std::sqrt(double(inst.T)) * 1e-3;

  double prev_c, prev_a;
  {
    prev_c = (apply_ci(inst, st.x) - st.z - inst.b).norm();
    prev_a = (apply_steer(inst, st.x) - st.w).norm();
  }

  BsumWorkspace ws;
  for (int m = 1; m <= p.max_outer; ++m) {
    st.gamma = gdir * (st.rho_mu / p.rho_mu0);
    InnerResult ir = bsum_solve(st, inst, ws, p.eps_scale / m, p.max_inner);
    if (!ir.certified) ++res.uncertified_inner;
    res.monotone_violations += ir.monotone_violations;

    double viol_c = (ws.v - st.z - inst.b).norm();
    double viol_a = (ws.wa - st.w).norm();
    res.rows.push_back({m, ws.value, viol_c, viol_a, ir.cert.norm, st.rho_mu,
                        ir.iters, st.lambda, ir.certified});
    res.outers = m;
    if (std::max({ir.cert.norm, viol_c, viol_a}) <= stop) {
      res.converged = true;
      break;
    }
    update_multipliers(st, ws.v - st.z - inst.b, ws.wa - st.w, p);
    update_penalties(st, viol_c, viol_a, prev_c, prev_a, p);
    prev_c = viol_c;
    prev_a = viol_a;
    ws.valid = false;  // multipliers/penalties changed
  }
  return res;
}

struct HomotopyParams {
  double lambda0 = 1.0;
  double growth = 3.0;
  double vertex_tol = 1e-3;  // fraction of eta
  int max_stages = 12;
  double rho_mu0_scale = 0.01;  // per stage: rho_mu0 = scale * sqrt(lambda)
  double rho_ratio = 3.0;       // rho_nu0 = rho_mu0 / ratio
  /* Fraction of the previous stage's final penalty kept as a floor for the
   * next stage's initial penalty: 0 resets each stage, 1 never shrinks the
   * penalty across stages.  Raising it trades re-exploration for dual
   * maturity on instances whose constraints stay active along the path. */
  double penalty_carry = 0.0;
};

struct StageSummary {
  int stage = 0;
  double lambda = 0.0;
  bool converged = false;
  int outers = 0;
  double max_vertex_dist = 0.0;  // of the stage-final relaxed iterate
};

struct FeasibilityReport {
  double min_slack = 0.0;  // min over (t,k) of margin - b
  int violations = 0;      // CI rows below threshold (tolerance 1e-9)
  double max_violation = 0.0;
};

// Margin slack summary of a waveform against the instance thresholds.
inline FeasibilityReport check_feasibility(const MatrixXcd& x,
                                           const Instance& inst,
                                           double tol = 1e-9) {
  MatrixXd v = apply_ci(inst, x);
  FeasibilityReport rep;
  rep.min_slack = std::numeric_limits<double>::infinity();
  for (int t = 0; t < inst.T; ++t)
    for (int k = 0; k < inst.K; ++k) {
      double m = std::min(v(2 * k, t), v(2 * k + 1, t));
      rep.min_slack = std::min(rep.min_slack, m - inst.b(2 * k, t));
    }
  for (int t = 0; t < inst.T; ++t)
    for (int r = 0; r < 2 * inst.K; ++r) {
      double gap = inst.b(r, t) - v(r, t);
      if (gap > tol) {
        ++rep.violations;
        rep.max_violation = std::max(rep.max_violation, gap);
      }
    }
  return rep;
}

inline double max_vertex_distance(const MatrixXcd& x, const QceSet& set) {
  double worst = 0.0;
  for (int t = 0; t < x.cols(); ++t)
    for (int n = 0; n < x.rows(); ++n) {
      Eigen::Vector2d p(x(n, t).real(), x(n, t).imag());
      worst = std::max(worst, (p - snap_to_qce(p, set)).norm());
    }
  return worst;
}

struct SolveReport {
  RealWaveform waveform;  // snapped, exactly quantized
  RealWaveform relaxed;   // final iterate before snapping
  std::vector<OuterRow> rows;
  std::vector<StageSummary> stages;
  bool vertex_converged = false;
  bool all_stages_converged = true;
  double lambda_final = 0.0;
  FeasibilityReport feasibility;  // of the snapped waveform
};

/* Continuation on the negative-square penalty weight: solve a sequence of
 * subproblems with lambda growing geometrically, warm-starting primal and
 * dual variables and restarting penalties each stage (optionally floored
 * by penalty_carry), until every entry of the relaxed iterate sits within
 * vertex_tol * eta of an alphabet vertex; then snap and re-check
 * feasibility. */
inline SolveReport homotopy_solve(const Instance& inst,
                                  const HomotopyParams& hp,
                                  const AlmParams& base) {
  SolveReport rep;
  SolverState st = SolverState::zeros(inst);
  double lambda = hp.lambda0;
  // Penalty direction is fixed across stages (rho_nu/rho_mu constant), so
  // the majorization norm is computed once and rescaled.
  double gamma_unit = compute_gamma(1.0, 1.0 / hp.rho_ratio, inst);
  double rho_prev = 0.0;

  for (int stage = 1; stage <= hp.max_stages; ++stage) {
    AlmParams ap = base;
    ap.rho_mu0 = std::max(hp.rho_mu0_scale * std::sqrt(lambda),
                          hp.penalty_carry * rho_prev);
    ap.rho_nu0 = ap.rho_mu0 / hp.rho_ratio;
    ap.gamma_dir0 = ap.rho_mu0 * gamma_unit;
    st.lambda = lambda;

    AlmResult ar = alm_solve(st, inst, ap);
    rho_prev = st.rho_mu;
    for (auto& row : ar.rows) rep.rows.push_back(row);
    double vdist = max_vertex_distance(st.x, inst.qce);
    rep.stages.push_back({stage, lambda, ar.converged, ar.outers, vdist});
    rep.all_stages_converged = rep.all_stages_converged && ar.converged;
    rep.lambda_final = lambda;
    if (vdist <= hp.vertex_tol * inst.qce.eta) {
      rep.vertex_converged = true;
      break;
    }
    lambda *= hp.growth;
  }

  rep.relaxed = RealWaveform(st.x);
  MatrixXcd snapped(inst.N, inst.T);
  for (int t = 0; t < inst.T; ++t)
    for (int n = 0; n < inst.N; ++n) {
      Eigen::Vector2d p(st.x(n, t).real(), st.x(n, t).imag());
      Eigen::Vector2d v = snap_to_qce(p, inst.qce);
      snapped(n, t) = Complex(v.x(), v.y());
    }
  rep.waveform = RealWaveform(std::move(snapped));
  rep.feasibility = check_feasibility(rep.waveform.X, inst);
  return rep;
}

}  // namespace qce
