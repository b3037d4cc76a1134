#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>

#include "qce/inner_solver.hpp"
#include "qce/problem.hpp"

namespace qce {

struct BeampatternResult {
  VectorXd theta_deg;
  VectorXd power;    // P(theta_q), linear
  VectorXd desired;  // d_q samples
  double alpha_star = 0.0;
  double mse = 0.0;
};

// P(theta_q) = (1/T) sum_t |a_q^H x_t|^2.
inline VectorXd beampattern(const MatrixXcd& x, const Instance& inst) {
  MatrixXcd y = apply_steer(inst, x);
  return y.rowwise().squaredNorm() / double(inst.T);
}

// Scale minimizing sum_q (alpha*d_q - P_q)^2.
inline double optimal_alpha(const VectorXd& power, const VectorXd& d) {
  double denom = d.squaredNorm();
  if (denom <= 0.0) throw ConfigError("desired pattern is identically zero");
  return d.dot(power) / denom;
}

inline double beampattern_mse(const VectorXd& power, const VectorXd& d,
                              double alpha) {
  return (alpha * d - power).squaredNorm() / double(power.size());
}

inline BeampatternResult evaluate_beampattern(const RealWaveform& wf,
                                              const Instance& inst) {
  BeampatternResult r;
  r.theta_deg = inst.grid_deg;
  r.power = beampattern(wf.X, inst);
  r.desired = inst.d;
  r.alpha_star = optimal_alpha(r.power, inst.d);
  r.mse = beampattern_mse(r.power, inst.d, r.alpha_star);
  return r;
}

// Per-(k,t) safety margin: min of the two CI row values.
inline MatrixXd safety_margins(const MatrixXcd& x, const Instance& inst) {
  MatrixXd v = apply_ci(inst, x);
  MatrixXd m(inst.K, inst.T);
  for (int t = 0; t < inst.T; ++t)
    for (int k = 0; k < inst.K; ++k)
      m(k, t) = std::min(v(2 * k, t), v(2 * k + 1, t));
  return m;
}

// Gaussian upper tail.
inline double gaussian_q(double x) {
  return 0.5 * std::erfc(x / std::sqrt(2.0));
}

/* Symbol error probability bracket for one decision with safety margin d
 * and complex noise of variance sigma^2 (sigma per real dimension is
 * sigma/sqrt(2)): Q(sqrt(2) d/sigma) <= SEP <= 2 Q(sqrt(2) d/sigma). */
inline std::pair<double, double> sep_bounds(double margin, double sigma) {
  double arg = std::sqrt(2.0) * margin / sigma;
  double q = gaussian_q(arg);
  return {q, std::min(1.0, 2.0 * q)};
}

/* Monte Carlo symbol error rate of a fixed waveform under the instance
 * channel: per (trial, t, k) add complex Gaussian noise to the noise-free
 * received point and detect the nearest constellation phase.  Each decision
 * uses its own counter-derived substream, so the estimate is independent of
 * any batching or threading of the trial loop. */
inline double simulate_ser(const MatrixXcd& x, const Instance& inst,
                           double sigma, int n_trials, std::uint64_t seed) {
  MatrixXcd y = inst.H * x;  // noise-free received points, K x T
  const double s = sigma / std::sqrt(2.0);
  std::uint64_t errors = 0;
  for (int trial = 0; trial < n_trials; ++trial)
    for (int t = 0; t < inst.T; ++t)
      for (int k = 0; k < inst.K; ++k) {
        std::uint64_t key = hash_combine(seed, std::uint64_t(trial));
        key = hash_combine(key, std::uint64_t(t));
        key = hash_combine(key, std::uint64_t(k));
        StreamRng rng(key);
        Complex noisy = y(k, t) + Complex(s * rng.normal(), s * rng.normal());
        if (psk_index(noisy, inst.cfg.psk_order) !=
            psk_index(inst.S(k, t), inst.cfg.psk_order))
          ++errors;
      }
  return double(errors) /
         (double(n_trials) * double(inst.T) * double(inst.K));
}

}  // namespace qce
