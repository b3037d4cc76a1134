#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "qce/geometry.hpp"
#include "qce/problem.hpp"

namespace qce {

/* Primal/dual state of one penalized subproblem
 *   min s*(f(w) + g(w)) - lambda*|x|^2  s.t.  Cx - z = b, Ax = w,
 * x in hull^NT, z >= 0, with f(w) = sum_q |w_(q)|^4, g(w) =
 * -(sum_{q,t} c_q|w_{t,q}|^2)^2, and s = obj_scale the MSE normalization
 * of the pattern objective.  Complex matrices stand for stacked real
 * pairs; see Instance. */
struct SolverState {
  MatrixXcd x;   // N x T, every entry inside the alphabet hull
  MatrixXcd w;   // Q x T beam-space auxiliaries; w_(q) is row q
  MatrixXd z;    // 2K x T nonnegative slacks
  MatrixXd mu;   // 2K x T multipliers for Cx - z = b
  MatrixXcd nu;  // Q x T multipliers for Ax = w
  double rho_mu = 1.0, rho_nu = 1.0;
  double lambda = 0.0;
  double gamma = 1.0;  // majorization constant of the x-block

  static SolverState zeros(const Instance& inst) {
    SolverState st;
    st.x = MatrixXcd::Zero(inst.N, inst.T);
    st.w = MatrixXcd::Zero(inst.Q, inst.T);
    st.z = MatrixXd::Zero(2 * inst.K, inst.T);
    st.mu = MatrixXd::Zero(2 * inst.K, inst.T);
    st.nu = MatrixXcd::Zero(inst.Q, inst.T);
    return st;
  }
};

// Row values of the CI constraints, all slots at once: entry (2k+r, t) is
// row r of user k applied to the stacked real x_t.
inline MatrixXd apply_ci(const Instance& inst, const MatrixXcd& x) {
  MatrixXcd y = inst.H * x;
  MatrixXd v(2 * inst.K, inst.T);
  for (int t = 0; t < inst.T; ++t)
    for (int k = 0; k < inst.K; ++k) {
      v(2 * k, t) = (inst.crow1(k, t) * y(k, t)).real();
      v(2 * k + 1, t) = (inst.crow2(k, t) * y(k, t)).real();
    }
  return v;
}

// Adjoint of apply_ci (complex representation of sum_rows u_row * c_row).
inline MatrixXcd apply_ci_adj(const Instance& inst, const MatrixXd& u) {
  MatrixXcd phi(inst.K, inst.T);
  for (int t = 0; t < inst.T; ++t)
    for (int k = 0; k < inst.K; ++k)
      phi(k, t) = std::conj(inst.crow1(k, t)) * u(2 * k, t) +
                  std::conj(inst.crow2(k, t)) * u(2 * k + 1, t);
  return inst.H.adjoint() * phi;
}

// Beam-space map w_{t,q} = a_q^H x_t and its adjoint.
inline MatrixXcd apply_steer(const Instance& inst, const MatrixXcd& x) {
  return inst.steer.adjoint() * x;
}
inline MatrixXcd apply_steer_adj(const Instance& inst, const MatrixXcd& w) {
  return inst.steer * w;
}

/* The two pattern terms as functions of the beam-space block, with their
 * stacked-real gradients packaged as complex matrices (entry = d/dRe +
 * j*d/dIm): f(w) = sum_q (sum_t |w_{q,t}|^2)^2, g(w) = -(sum_q c_q
 * sum_t |w_{q,t}|^2)^2. */
inline double eval_f(const MatrixXcd& w, double scale = 1.0) {
  return scale * w.rowwise().squaredNorm().squaredNorm();
}

inline MatrixXcd grad_f(const MatrixXcd& w, double scale = 1.0) {
  VectorXd s = w.rowwise().squaredNorm();
  return (4.0 * scale) * (s.asDiagonal() * w);
}

inline double eval_g(const MatrixXcd& w, const VectorXd& c,
                     double scale = 1.0) {
  double total = c.dot(w.rowwise().squaredNorm().eval());
  return -scale * total * total;
}

inline MatrixXcd grad_g(const MatrixXcd& w, const VectorXd& c,
                        double scale = 1.0) {
  VectorXd s = w.rowwise().squaredNorm();
  double total = c.dot(s);
  return (-4.0 * scale * total) * (c.asDiagonal() * w);
}

inline double eval_augmented_lagrangian(const SolverState& st,
                                        const Instance& inst) {
  MatrixXd rc = apply_ci(inst, st.x) - st.z - inst.b;
  MatrixXcd ra = apply_steer(inst, st.x) - st.w;
  VectorXd s = st.w.rowwise().squaredNorm();
  double sc = inst.c.dot(s);
  double value = inst.obj_scale * (s.squaredNorm() - sc * sc) -
                 st.lambda * st.x.squaredNorm();
  value += (st.mu.array() * rc.array()).sum();
  value += (st.nu.conjugate().cwiseProduct(ra)).sum().real();
  value += 0.5 * st.rho_mu * rc.squaredNorm();
  value += 0.5 * st.rho_nu * ra.squaredNorm();
  return value;
}

inline MatrixXcd grad_x_lagrangian(const SolverState& st,
                                   const Instance& inst) {
  MatrixXd rc = apply_ci(inst, st.x) - st.z - inst.b;
  MatrixXcd ra = apply_steer(inst, st.x) - st.w;
  return -2.0 * st.lambda * st.x +
         apply_ci_adj(inst, st.mu + st.rho_mu * rc) +
         apply_steer_adj(inst, st.nu + st.rho_nu * ra);
}

// Largest eigenvalue of a symmetric PSD matrix by power iteration.
inline double power_iteration_norm(const MatrixXd& m, double tol = 1e-10,
                                   int max_iter = 10000) {
  StreamRng rng(0x9d2c5680u);
  VectorXd v(m.rows());
  for (int i = 0; i < v.size(); ++i) v[i] = rng.normal();
  v.normalize();
  double theta = 0.0;
  VectorXd u(m.rows());
  for (int it = 0; it < max_iter; ++it) {
    u.noalias() = m * v;
    double next = v.dot(u);
    double un = u.norm();
    if (un == 0.0) return 0.0;
    v = u / un;
    if (std::abs(next - theta) <= tol * std::max(1.0, std::abs(next))) {
      return next;
    }
    theta = next;
  }
  return theta;
}

/* Spectral norm of rho_mu*C^T C + rho_nu*A^T A.  Both operators are block
 * diagonal over slots (A identically so), hence the norm is the max over
 * the T dense 2N x 2N slot blocks.  Homogeneous of degree 1 in (rho_mu,
 * rho_nu), so callers growing both penalties by a common factor may rescale
 * instead of recomputing. */
inline double compute_gamma(double rho_mu, double rho_nu,
                            const Instance& inst) {
  const int n2 = 2 * inst.N;
  MatrixXd g = MatrixXd::Zero(n2, n2);
  for (int q = 0; q < inst.Q; ++q) {
    MatrixXd a = steering_block(inst.steer.col(q));
    g.noalias() += a.transpose() * a;
  }
  double best = 0.0;
  MatrixXd m(n2, n2);
  for (int t = 0; t < inst.T; ++t) {
    m = rho_nu * g;
    m.noalias() += rho_mu * inst.C[t].transpose() * inst.C[t];
    best = std::max(best, power_iteration_norm(m));
  }
  return best;
}

// Inexact-stationarity certificate of one block sweep; e_z is identically 0.
struct Certificate {
  MatrixXcd e_x;  // N x T
  MatrixXcd e_w;  // Q x T
  double norm = 0.0;
};

/* Quantities at the current iterate that the next sweep reuses; the x-block
 * gradient computed for the certificate of sweep r is exactly the gradient
 * the x-update of sweep r+1 needs.  All intermediates live in preallocated
 * buffers: sweeps at small problem sizes are allocation-bound otherwise. */
struct BsumWorkspace {
  bool valid = false;
  MatrixXd v;      // CI row values at x
  MatrixXcd wa;    // beam-space image of x
  MatrixXcd gw;    // grad g at w
  MatrixXcd grad;  // x-block gradient of the augmented Lagrangian
  double value = 0.0;
  /* The certificate norm is always computed; assembling the residual
   * vectors costs two heap round-trips per sweep, so solve loops that only
   * test the norm switch this off. */
  bool cert_vectors = true;

  // scratch owned by bsum_step between calls
  MatrixXcd steerH;  // adjoint steering, stored dense for contiguous GEMV
  MatrixXcd xn, wan, xi, wn, ra, gwn, gradn, yh, phi;
  MatrixXd vn, zn, rc;
  VectorXd srow, xin, ucub;

  void ensure(const Instance& inst) {
    if (xn.rows() == inst.N && xn.cols() == inst.T && wan.rows() == inst.Q)
      return;
    xn.resize(inst.N, inst.T);
    gradn.resize(inst.N, inst.T);
    wan.resize(inst.Q, inst.T);
    xi.resize(inst.Q, inst.T);
    wn.resize(inst.Q, inst.T);
    ra.resize(inst.Q, inst.T);
    gwn.resize(inst.Q, inst.T);
    yh.resize(inst.K, inst.T);
    phi.resize(inst.K, inst.T);
    vn.resize(2 * inst.K, inst.T);
    zn.resize(2 * inst.K, inst.T);
    rc.resize(2 * inst.K, inst.T);
    srow.resize(inst.Q);
    xin.resize(inst.Q);
    ucub.resize(inst.Q);
    steerH = inst.steer.adjoint();
  }

  void refresh(const SolverState& st, const Instance& inst) {
    ensure(inst);
    v = apply_ci(inst, st.x);
    wa = apply_steer(inst, st.x);
    gw = grad_g(st.w, inst.c, inst.obj_scale);
    MatrixXd rcur = v - st.z - inst.b;
    MatrixXcd racur = wa - st.w;
    grad = -2.0 * st.lambda * st.x +
           apply_ci_adj(inst, st.mu + st.rho_mu * rcur) +
           apply_steer_adj(inst, st.nu + st.rho_nu * racur);
    VectorXd s = st.w.rowwise().squaredNorm();
    double sc = inst.c.dot(s);
    value = inst.obj_scale * (s.squaredNorm() - sc * sc) -
            st.lambda * st.x.squaredNorm() +
            (st.mu.array() * rcur.array()).sum() +
            (st.nu.conjugate().cwiseProduct(racur)).sum().real() +
            0.5 * st.rho_mu * rcur.squaredNorm() +
            0.5 * st.rho_nu * racur.squaredNorm();
    valid = true;
  }
};

struct StepInfo {
  Certificate cert;
  double value_before = 0.0, value_after = 0.0;
  double dx2 = 0.0, dw2 = 0.0, dz2 = 0.0;  // squared block steps
};

/* One sweep of the three closed-form block updates:
 *   x: projected gradient step with the majorization constant gamma,
 *   w: per-q magnitude shrink through the cubic root (exact minimizer),
 *   z: clamp to the nonnegative orthant (exact minimizer).              */
inline StepInfo bsum_step(SolverState& st, const Instance& inst,
                          BsumWorkspace& ws) {
  if (!ws.valid) ws.refresh(st, inst);
  StepInfo info;
  info.value_before = ws.value;

  const double inv_gamma = 1.0 / st.gamma;
  for (int t = 0; t < inst.T; ++t)
    for (int n = 0; n < inst.N; ++n) {
      Complex p = st.x(n, t) - inv_gamma * ws.grad(n, t);
      Eigen::Vector2d f =
          project_conv_qce({p.real(), p.imag()}, inst.hull);
      ws.xn(n, t) = Complex(f.x(), f.y());
    }
  info.dx2 = (ws.xn - st.x).squaredNorm();

  ws.wan.noalias() = ws.steerH * ws.xn;
  ws.xi = ws.gw - st.nu - st.rho_nu * ws.wan;
  /* Per-q stationarity is 4*s*beta^3 + rho*beta = |xi_q| with s the
   * objective normalization; substituting u = sqrt(s)*beta reduces it to
   * the unit-coefficient cubic 4u^3 + rho*u = sqrt(s)*|xi_q|.  Solved for
   * all q at once (Cardano start, two Newton polishes) so the roots
   * vectorize; cbrt is exp(log/3), whose error the polish removes. */
  const double rs = std::sqrt(inst.obj_scale);
  const double kc = st.rho_nu / 12.0;
  ws.xin = ws.xi.rowwise().norm();
  {
    auto v = (rs / 8.0) * ws.xin.array();
    ws.ucub =
        ((v + (v.square() + kc * kc * kc).sqrt()).log() / 3.0).exp().matrix();
    ws.ucub = (ws.ucub.array() - kc / ws.ucub.array()).matrix();
  }
  for (int it = 0; it < 2; ++it)
    ws.ucub = (ws.ucub.array() -
               ((4.0 * ws.ucub.array().square() + st.rho_nu) *
                    ws.ucub.array() -
                rs * ws.xin.array()) /
                   (12.0 * ws.ucub.array().square() + st.rho_nu))
                  .matrix();
  ws.ucub = (ws.xin.array() > 0.0)
                .select(-ws.ucub.array().max(0.0) / (rs * ws.xin.array()),
                        0.0)
                .matrix();
  ws.wn.noalias() = ws.ucub.asDiagonal() * ws.xi;
  info.dw2 = (ws.wn - st.w).squaredNorm();

  ws.yh.noalias() = inst.H * ws.xn;
  for (int t = 0; t < inst.T; ++t)
    for (int k = 0; k < inst.K; ++k) {
      ws.vn(2 * k, t) = (inst.crow1(k, t) * ws.yh(k, t)).real();
      ws.vn(2 * k + 1, t) = (inst.crow2(k, t) * ws.yh(k, t)).real();
    }
  ws.zn = (ws.vn - inst.b + st.mu / st.rho_mu).cwiseMax(0.0);
  info.dz2 = (ws.zn - st.z).squaredNorm();

  ws.rc = ws.vn - ws.zn - inst.b;
  ws.ra = ws.wan - ws.wn;
  ws.srow = ws.wn.rowwise().squaredNorm();
  double sc = inst.c.dot(ws.srow);
  ws.gwn.noalias() =
      ((-4.0 * inst.obj_scale * sc) * inst.c).asDiagonal() * ws.wn;

  for (int t = 0; t < inst.T; ++t)
    for (int k = 0; k < inst.K; ++k)
      ws.phi(k, t) =
          std::conj(inst.crow1(k, t)) *
              (st.mu(2 * k, t) + st.rho_mu * ws.rc(2 * k, t)) +
          std::conj(inst.crow2(k, t)) *
              (st.mu(2 * k + 1, t) + st.rho_mu * ws.rc(2 * k + 1, t));
  ws.gradn.noalias() = inst.H.adjoint() * ws.phi;
  ws.xi = st.nu;  // reused as the steering-adjoint operand
  ws.xi += st.rho_nu * ws.ra;
  ws.gradn.noalias() += inst.steer * ws.xi;
  ws.gradn += (-2.0 * st.lambda) * ws.xn;

  info.cert.norm = std::sqrt(
      (ws.gradn - ws.grad - st.gamma * (ws.xn - st.x)).squaredNorm() +
      (ws.gwn - ws.gw).squaredNorm());
  if (ws.cert_vectors) {
    info.cert.e_x = ws.gradn - ws.grad - st.gamma * (ws.xn - st.x);
    info.cert.e_w = ws.gwn - ws.gw;
  }

  info.value_after = inst.obj_scale * (ws.srow.squaredNorm() - sc * sc) -
                     st.lambda * ws.xn.squaredNorm() +
                     (st.mu.array() * ws.rc.array()).sum() +
                     (st.nu.conjugate().cwiseProduct(ws.ra)).sum().real() +
                     0.5 * st.rho_mu * ws.rc.squaredNorm() +
                     0.5 * st.rho_nu * ws.ra.squaredNorm();

  st.x.swap(ws.xn);
  st.w.swap(ws.wn);
  st.z.swap(ws.zn);
  ws.v.swap(ws.vn);
  ws.wa.swap(ws.wan);
  ws.gw.swap(ws.gwn);
  ws.grad.swap(ws.gradn);
  ws.value = info.value_after;
  return info;
}

// Definitional form of the certificate, recomputed from two full states
// (prev and next must share multipliers and penalties).
inline Certificate stationarity_certificate(const SolverState& prev,
                                            const SolverState& next,
                                            double gamma,
                                            const Instance& inst) {
  Certificate c;
  c.e_x = grad_x_lagrangian(next, inst) - grad_x_lagrangian(prev, inst) -
          gamma * (next.x - prev.x);
  c.e_w = grad_g(next.w, inst.c, inst.obj_scale) -
          grad_g(prev.w, inst.c, inst.obj_scale);
  c.norm = std::sqrt(c.e_x.squaredNorm() + c.e_w.squaredNorm());
  return c;
}

struct InnerResult {
  Certificate cert;
  int iters = 0;
  bool certified = false;
  int monotone_violations = 0;
};

// Sweeps until the certificate norm reaches eps (or max_iter, flagged).
inline InnerResult bsum_solve(SolverState& st, const Instance& inst,
                              BsumWorkspace& ws, double eps, int max_iter) {
  InnerResult r;
  const bool keep_vectors = ws.cert_vectors;
  ws.cert_vectors = false;
  for (int it = 1; it <= max_iter; ++it) {
    StepInfo info = bsum_step(st, inst, ws);
    r.iters = it;
    r.cert = info.cert;
    if (info.value_after >
        info.value_before + 1e-10 * (1.0 + std::abs(info.value_before)))
      ++r.monotone_violations;
    if (info.cert.norm <= eps) {
      r.certified = true;
      break;
    }
  }
  ws.cert_vectors = keep_vectors;
  return r;
}

inline InnerResult bsum_solve(SolverState& st, const Instance& inst,
                              double eps, int max_iter) {
  BsumWorkspace ws;
  return bsum_solve(st, inst, ws, eps, max_iter);
}

}  // namespace qce
