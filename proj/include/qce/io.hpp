#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qce/problem.hpp"

namespace qce {

/* Flat key = value config file: '#' comments, dotted namespaces, '.'
 * decimals.  Every key must be consumed by the reader; leftovers are
 * reported as unknown keys. */
class KvFile {
 public:
  static KvFile load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    KvFile f;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::string t = trim(line);
      if (t.empty()) continue;
      auto eq = t.find('=');
      if (eq == std::string::npos)
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": expected key = value");
      std::string key = trim(t.substr(0, eq));
      std::string val = trim(t.substr(eq + 1));
      if (key.empty()) throw ConfigError("config line " +
                                         std::to_string(lineno) +
                                         ": empty key");
      if (f.kv_.count(key))
        throw ConfigError("duplicate config key: " + key);
      f.kv_[key] = val;
    }
    return f;
  }

  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  std::string get_str(const std::string& key, const std::string& dflt) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    used_.insert(key);
    return it->second;
  }

  double get_double(const std::string& key, double dflt) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    used_.insert(key);
    return parse_double(key, it->second);
  }

  long long get_int(const std::string& key, long long dflt) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    used_.insert(key);
    return parse_int(key, it->second);
  }

  std::vector<double> get_list(const std::string& key,
                               std::vector<double> dflt) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    used_.insert(key);
    std::vector<double> out;
    for (auto& item : split(it->second, ','))
      out.push_back(parse_double(key, trim(item)));
    return out;
  }

  // Call after reading everything: rejects keys nothing consumed.
  void finish() const {
    for (auto& [k, v] : kv_)
      if (!used_.count(k)) throw ConfigError("unknown config key: " + k);
  }

 private:
  static std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  static std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
  }

  static double parse_double(const std::string& key, const std::string& v) {
    try {
      size_t pos = 0;
      double d = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      throw ConfigError("bad numeric value for " + key + ": " + v);
    }
  }

  static long long parse_int(const std::string& key, const std::string& v) {
    try {
      size_t pos = 0;
      long long i = std::stoll(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return i;
    } catch (const std::exception&) {
      throw ConfigError("bad integer value for " + key + ": " + v);
    }
  }

  std::map<std::string, std::string> kv_;
  std::set<std::string> used_;
};

// Waveform interchange: one row per (slot, antenna), full precision so
// alphabet values survive a round trip bit-exactly.
inline void write_waveform_csv(const std::string& path,
                               const RealWaveform& wf) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw ConfigError("cannot write " + path);
  std::fprintf(f, "# transmit block: t = slot index, n = antenna index,\n");
  std::fprintf(f, "# re/im = real and imaginary parts of x_{t,n} [amplitude]\n");
  std::fprintf(f, "t,n,re,im\n");
  for (int t = 0; t < wf.X.cols(); ++t)
    for (int n = 0; n < wf.X.rows(); ++n)
      std::fprintf(f, "%d,%d,%.17g,%.17g\n", t, n, wf.X(n, t).real(),
                   wf.X(n, t).imag());
  std::fclose(f);
}

inline RealWaveform read_waveform_csv(const std::string& path, int n_antennas,
                                      int block_len) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open waveform file: " + path);
  MatrixXcd x(n_antennas, block_len);
  Eigen::MatrixX<int> seen = Eigen::MatrixX<int>::Zero(n_antennas, block_len);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 't') continue;
    int t, n;
    double re, im;
    if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf", &t, &n, &re, &im) != 4)
      throw ConfigError("bad waveform row: " + line);
    if (t < 0 || t >= block_len || n < 0 || n >= n_antennas)
      throw ConfigError("waveform index out of range: " + line);
    x(n, t) = Complex(re, im);
    seen(n, t) = 1;
  }
  if (seen.sum() != n_antennas * block_len)
    throw ConfigError("waveform file is missing entries");
  return RealWaveform(std::move(x));
}

}  // namespace qce
