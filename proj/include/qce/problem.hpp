#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

#include "qce/alphabet.hpp"
#include "qce/geometry.hpp"
#include "qce/rng.hpp"

namespace qce {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

struct SystemConfig {
  int n_antennas = 64;   // N
  int n_users = 4;       // K
  int block_len = 50;    // T
  int psk_order = 4;     // M, power of two
  int quant_levels = 4;  // L
  double power = 1.0;    // total per-slot transmit power
  double snr_db = 10.0;  // receive SNR, defined as 1/sigma^2
  double margin = 0.6;   // required safety margin b (uniform over t, k)
  std::vector<double> target_deg = {-40.0, 0.0, 40.0};
  double beam_width_deg = 10.0;  // full width of each desired mainlobe
  double grid_lo = -90.0, grid_hi = 90.0, grid_step = 1.0;
  std::uint64_t seed = 1;

  void validate() const {
    if (n_antennas < 1) throw ConfigError("n_antennas must be >= 1");
    if (n_users < 1) throw ConfigError("n_users must be >= 1");
    if (block_len < 1) throw ConfigError("block_len must be >= 1");
    if (psk_order < 2 || (psk_order & (psk_order - 1)) != 0)
      throw ConfigError("psk_order must be a power of two >= 2");
    if (quant_levels < 2) throw ConfigError("quant_levels must be >= 2");
    if (!(power > 0.0)) throw ConfigError("power must be positive");
    if (!(margin >= 0.0)) throw ConfigError("margin must be nonnegative");
    if (!(beam_width_deg > 0.0)) throw ConfigError("beam_width must be > 0");
    if (!(grid_step > 0.0) || grid_hi < grid_lo)
      throw ConfigError("bad beampattern grid");
  }

  VectorXd grid() const {
    int q = int(std::floor((grid_hi - grid_lo) / grid_step + 0.5)) + 1;
    VectorXd g(q);
    for (int i = 0; i < q; ++i) g[i] = grid_lo + i * grid_step;
    return g;
  }
};

// Half-wavelength ULA response; entry n is exp(j*pi*n*sin(theta)).
inline VectorXcd steering_vector(double theta_deg, int n_antennas) {
  VectorXcd a(n_antennas);
  double s = std::sin(theta_deg * M_PI / 180.0);
  for (int n = 0; n < n_antennas; ++n) {
    double ph = M_PI * n * s;
    a[n] = Complex(std::cos(ph), std::sin(ph));
  }
  return a;
}

/* Real 2x2N block of one grid angle: maps the stacked real slot vector to
 * the real/imag pair of a(theta)^H x, so its squared image norm is the
 * beampattern sample |a^H x|^2. */
inline MatrixXd steering_block(const VectorXcd& a) {
  const int n = int(a.size());
  MatrixXd blk(2, 2 * n);
  blk.block(0, 0, 1, n) = a.real().transpose();
  blk.block(0, n, 1, n) = a.imag().transpose();
  blk.block(1, 0, 1, n) = -a.imag().transpose();
  blk.block(1, n, 1, n) = a.real().transpose();
  return blk;
}

inline std::vector<MatrixXd> build_steering_blocks(const VectorXd& grid_deg,
                                                   int n_antennas) {
  std::vector<MatrixXd> blocks;
  blocks.reserve(grid_deg.size());
  for (int q = 0; q < grid_deg.size(); ++q)
    blocks.push_back(steering_block(steering_vector(grid_deg[q], n_antennas)));
  return blocks;
}

// 1 inside any desired mainlobe [center - width/2, center + width/2], else 0.
inline double desired_pattern(double theta_deg,
                              const std::vector<double>& targets,
                              double width_deg) {
  for (double c : targets)
    if (std::abs(theta_deg - c) <= width_deg / 2.0 + 1e-12) return 1.0;
  return 0.0;
}

// Normalized pattern weights: c_q proportional to d_q with sum of squares 1.
inline VectorXd pattern_weights(const VectorXd& d) {
  double n2 = d.squaredNorm();
  if (n2 <= 0.0) throw ConfigError("desired pattern is identically zero");
  return d / std::sqrt(n2);
}

/* The two CI constraint rows of user k in slot t.  Row r applied to the
 * stacked real slot vector gives the signed distance of the noise-free
 * received signal h^T x to one of the two PSK decision boundaries of s:
 *   row 0:  -Im((h^T x) * conj(s * e^{+j*pi/M}))
 *   row 1:  +Im((h^T x) * conj(s * e^{-j*pi/M}))
 * Both distances >= b keeps the signal b-deep inside the decision region. */
inline MatrixXd ci_rows(const VectorXcd& h, Complex s, int psk_order) {
  const int n = int(h.size());
  double half = M_PI / psk_order;
  Complex sa = s * Complex(std::cos(half), -std::sin(half));
  Complex sb = s * Complex(std::cos(half), std::sin(half));
  MatrixXd rows(2, 2 * n);
  for (int i = 0; i < n; ++i) {
    rows(0, i) = sb.imag() * h[i].real() - sb.real() * h[i].imag();
    rows(0, n + i) = -sb.imag() * h[i].imag() - sb.real() * h[i].real();
    rows(1, i) = sa.real() * h[i].imag() - sa.imag() * h[i].real();
    rows(1, n + i) = sa.real() * h[i].real() + sa.imag() * h[i].imag();
  }
  return rows;
}

// i.i.d. complex Gaussian channel, unit variance per entry (row-major draw).
inline MatrixXcd generate_channel(Rng& rng, int n_users, int n_antennas) {
  MatrixXcd h(n_users, n_antennas);
  const double s = std::sqrt(0.5);
  for (int k = 0; k < n_users; ++k)
    for (int n = 0; n < n_antennas; ++n) {
      double re = s * rng.normal();
      double im = s * rng.normal();
      h(k, n) = Complex(re, im);
    }
  return h;
}

/* Uniform PSK symbols from the offset constellation {e^{j(2i+1)pi/M}}; for
 * M=4 these sit on the diagonals, matching the ci_rows boundary geometry.
 * Draw order: slot-major, user within slot. */
inline MatrixXcd generate_symbols(Rng& rng, int n_users, int block_len,
                                  int psk_order) {
  MatrixXcd s(n_users, block_len);
  for (int t = 0; t < block_len; ++t)
    for (int k = 0; k < n_users; ++k) {
      auto i = rng.uniform_index(std::uint64_t(psk_order));
      double ph = (2.0 * double(i) + 1.0) * M_PI / psk_order;
      s(k, t) = Complex(std::cos(ph), std::sin(ph));
    }
  return s;
}

inline int psk_index(Complex s, int psk_order) {
  double ph = std::arg(s);
  long i = std::lround((ph * psk_order / M_PI - 1.0) / 2.0);
  return int(((i % psk_order) + psk_order) % psk_order);
}

/* One concrete design problem.  All solver-side products are evaluated in
 * complex form:
 *   - steering application: steer.adjoint() * X per block,
 *   - CI rows: Re(crow1/crow2 .* (H * X)) per user and slot,
 * which agree with the stacked-real definitions C_t, A_q to rounding. */
struct Instance {
  SystemConfig cfg;
  int N = 0, K = 0, T = 0, Q = 0;
  MatrixXcd H;      // K x N channel
  MatrixXcd S;      // K x T symbols
  MatrixXcd steer;  // N x Q, column q = a(theta_q)
  VectorXd grid_deg;
  VectorXd d;  // desired pattern samples in {0,1}
  VectorXd c;  // normalized weights, sum of squares 1
  std::vector<MatrixXd> C;  // per-slot 2K x 2N CI rows (definitional form)
  MatrixXd b;               // 2K x T thresholds (row pair per user)
  MatrixXcd crow1, crow2;   // K x T: row value r = Re(crow * (H X)_{k,t})
  QceSet qce;
  HullGeometry hull;
  double sigma2 = 0.0;
  /* MSE normalization of the pattern objective, 1/(Q T^2).  The solver
   * minimizes obj_scale * (sum_q B_q^2 - (sum_q c_q B_q)^2), which keeps
   * gradients, the fixed penalty schedule, and the multiplier safeguards
   * on one scale across problem sizes. */
  double obj_scale = 1.0;

  double stacked_b_norm2() const { return b.squaredNorm(); }
};

inline Instance assemble_instance(const SystemConfig& cfg, const MatrixXcd& H,
                                  const MatrixXcd& S) {
  cfg.validate();
  Instance inst;
  inst.cfg = cfg;
  inst.N = cfg.n_antennas;
  inst.K = cfg.n_users;
  inst.T = cfg.block_len;
  if (H.rows() != inst.K || H.cols() != inst.N)
    throw ConfigError("channel shape mismatch");
  if (S.rows() != inst.K || S.cols() != inst.T)
    throw ConfigError("symbol shape mismatch");
  inst.H = H;
  inst.S = S;
  inst.grid_deg = cfg.grid();
  inst.Q = int(inst.grid_deg.size());
  inst.steer.resize(inst.N, inst.Q);
  inst.d.resize(inst.Q);
  for (int q = 0; q < inst.Q; ++q) {
    inst.steer.col(q) = steering_vector(inst.grid_deg[q], inst.N);
    inst.d[q] =
        desired_pattern(inst.grid_deg[q], cfg.target_deg, cfg.beam_width_deg);
  }
  inst.c = pattern_weights(inst.d);
  inst.obj_scale = 1.0 / (double(inst.Q) * double(inst.T) * double(inst.T));
  inst.qce = build_qce_set(cfg.quant_levels, cfg.power, cfg.n_antennas);
  inst.hull = make_hull(inst.qce);
  inst.sigma2 = std::pow(10.0, -cfg.snr_db / 10.0);

  const double half = M_PI / cfg.psk_order;
  inst.C.resize(inst.T);
  inst.b = MatrixXd::Constant(2 * inst.K, inst.T, cfg.margin);
  inst.crow1.resize(inst.K, inst.T);
  inst.crow2.resize(inst.K, inst.T);
  for (int t = 0; t < inst.T; ++t) {
    inst.C[t].resize(2 * inst.K, 2 * inst.N);
    for (int k = 0; k < inst.K; ++k) {
      Complex s = S(k, t);
      inst.C[t].middleRows(2 * k, 2) = ci_rows(H.row(k), s, cfg.psk_order);
      Complex sa = s * Complex(std::cos(half), -std::sin(half));
      Complex sb = s * Complex(std::cos(half), std::sin(half));
      inst.crow1(k, t) = Complex(0, 1) * std::conj(sb);
      inst.crow2(k, t) = Complex(0, -1) * std::conj(sa);
    }
  }
  return inst;
}

inline Instance make_instance(const SystemConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  MatrixXcd h = generate_channel(rng, cfg.n_users, cfg.n_antennas);
  MatrixXcd s =
      generate_symbols(rng, cfg.n_users, cfg.block_len, cfg.psk_order);
  return assemble_instance(cfg, h, s);
}

/* Transmit block; column t is the complex slot vector x_t.  The stacked
 * real form is [Re(x_t); Im(x_t)] per slot, 2NT entries in total. */
struct RealWaveform {
  MatrixXcd X;  // N x T

  RealWaveform() = default;
  explicit RealWaveform(MatrixXcd x) : X(std::move(x)) {}

  Eigen::Vector2d comp(int t, int n) const {
    return {X(n, t).real(), X(n, t).imag()};
  }

  VectorXd stacked() const {
    const int n = int(X.rows()), t = int(X.cols());
    VectorXd v(2 * n * t);
    for (int j = 0; j < t; ++j) {
      v.segment(2 * n * j, n) = X.col(j).real();
      v.segment(2 * n * j + n, n) = X.col(j).imag();
    }
    return v;
  }

  static RealWaveform from_stacked(const VectorXd& v, int n, int t) {
    if (v.size() != 2 * n * t) throw ConfigError("waveform length mismatch");
    MatrixXcd x(n, t);
    for (int j = 0; j < t; ++j)
      x.col(j) = v.segment(2 * n * j, n) +
                 Complex(0, 1) * v.segment(2 * n * j + n, n);
    return RealWaveform(std::move(x));
  }

  // True when every entry is exactly an alphabet vertex.
  bool quantized(const QceSet& set) const {
    for (int j = 0; j < X.cols(); ++j)
      for (int i = 0; i < X.rows(); ++i) {
        Eigen::Vector2d p(X(i, j).real(), X(i, j).imag());
        Eigen::Vector2d v = set.vertices.col(snap_index(p, set));
        if (p.x() != v.x() || p.y() != v.y()) return false;
      }
    return true;
  }
};

}  // namespace qce
