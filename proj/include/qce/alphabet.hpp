#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace qce {

using Complex = std::complex<double>;

// Thrown on invalid scenario parameters or malformed config input.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/* Quantized constant-envelope alphabet: L points of magnitude eta whose
 * phases are the odd multiples of pi/L.  Vertex l (0-based) sits at phase
 * (2l+1)*pi/L, so for L=4 the points lie on the quadrant diagonals. */
struct QceSet {
  int levels = 0;
  double eta = 0.0;
  Eigen::Matrix2Xd vertices;  // column l: eta * (cos, sin) of vertex phase

  Complex point(int l) const { return {vertices(0, l), vertices(1, l)}; }
};

inline QceSet build_qce_set(int levels, double power, int n_antennas) {
  if (levels < 2) throw ConfigError("quant_levels must be >= 2");
  if (!(power > 0.0)) throw ConfigError("power must be positive");
  if (n_antennas < 1) throw ConfigError("n_antennas must be >= 1");
  QceSet set;
  set.levels = levels;
  set.eta = std::sqrt(power / n_antennas);
  set.vertices.resize(2, levels);
  for (int l = 0; l < levels; ++l) {
    double phase = (2.0 * l + 1.0) * M_PI / levels;
    set.vertices(0, l) = set.eta * std::cos(phase);
    set.vertices(1, l) = set.eta * std::sin(phase);
  }
  return set;
}

}  // namespace qce
