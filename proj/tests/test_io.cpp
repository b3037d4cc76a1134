#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "qce/experiment.hpp"
#include "qce/io.hpp"

using namespace qce;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  fs::path d = fs::temp_directory_path() / "qce_io_test";
  fs::create_directories(d);
  return d;
}

std::string write_text(const fs::path& p, const std::string& body) {
  std::ofstream(p) << body;
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(bool(in));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("key value parsing with comments and whitespace") {
  auto path = write_text(temp_dir() / "basic.cfg",
                         "# leading comment\n"
                         "  sys.n_antennas = 8   # trailing comment\n"
                         "\n"
                         "run.out_dir = results/a\n"
                         "sweep.margin = 0.2, 0.4 ,0.6\n"
                         "alm.tau=1.25\n");
  KvFile f = KvFile::load(path);
  CHECK(f.has("sys.n_antennas"));
  CHECK(f.get_int("sys.n_antennas", 0) == 8);
  CHECK(f.get_str("run.out_dir", "") == "results/a");
  auto lst = f.get_list("sweep.margin", {});
  REQUIRE(lst.size() == 3);
  CHECK(lst[1] == 0.4);
  CHECK(f.get_double("alm.tau", 0.0) == 1.25);
  CHECK(f.get_int("absent", 42) == 42);
  CHECK_NOTHROW(f.finish());
}

TEST_CASE("unconsumed keys are rejected by finish") {
  auto path = write_text(temp_dir() / "extra.cfg", "sys.typo_key = 1\n");
  KvFile f = KvFile::load(path);
  CHECK_THROWS_AS(f.finish(), ConfigError);
}

TEST_CASE("malformed config lines raise errors") {
  CHECK_THROWS_AS(
      KvFile::load(write_text(temp_dir() / "dup.cfg", "a = 1\na = 2\n")),
      ConfigError);
  CHECK_THROWS_AS(
      KvFile::load(write_text(temp_dir() / "noeq.cfg", "just words\n")),
      ConfigError);
  CHECK_THROWS_AS(
      KvFile::load(write_text(temp_dir() / "nokey.cfg", "= 3\n")),
      ConfigError);
  KvFile bad = KvFile::load(
      write_text(temp_dir() / "badnum.cfg", "x = 1.0ab\ny = 7up\n"));
  CHECK_THROWS_AS(bad.get_double("x", 0.0), ConfigError);
  CHECK_THROWS_AS(bad.get_int("y", 0), ConfigError);
  CHECK_THROWS_AS(KvFile::load((temp_dir() / "missing.cfg").string()),
                  ConfigError);
}

TEST_CASE("waveform csv survives a bit-exact round trip") {
  Rng rng(2026);
  MatrixXcd x(3, 4);
  for (int t = 0; t < 4; ++t)
    for (int n = 0; n < 3; ++n)
      x(n, t) = Complex(rng.normal() * std::pow(10.0, int(rng.uniform_index(6)) - 3),
                        rng.normal());
  auto path = (temp_dir() / "wf.csv").string();
  write_waveform_csv(path, RealWaveform(x));
  RealWaveform rt = read_waveform_csv(path, 3, 4);
  for (int t = 0; t < 4; ++t)
    for (int n = 0; n < 3; ++n) {
      CHECK(rt.X(n, t).real() == x(n, t).real());
      CHECK(rt.X(n, t).imag() == x(n, t).imag());
    }
}

TEST_CASE("waveform reader validates indices and completeness") {
  auto missing = write_text(temp_dir() / "short.csv",
                            "t,n,re,im\n0,0,1.0,2.0\n");
  CHECK_THROWS_AS(read_waveform_csv(missing, 2, 1), ConfigError);
  auto oob = write_text(temp_dir() / "oob.csv",
                        "t,n,re,im\n0,5,1.0,2.0\n");
  CHECK_THROWS_AS(read_waveform_csv(oob, 2, 1), ConfigError);
  auto garbled = write_text(temp_dir() / "garbled.csv",
                            "t,n,re,im\nnot,a,row\n");
  CHECK_THROWS_AS(read_waveform_csv(garbled, 2, 1), ConfigError);
}

TEST_CASE("run config round trip and validation") {
  auto path = write_text(temp_dir() / "run.cfg",
                         "sys.n_antennas = 4\n"
                         "sys.n_users = 2\n"
                         "sys.block_len = 3\n"
                         "sys.margin = 0.25\n"
                         "sys.targets = -30, 30\n"
                         "alm.max_outer = 77\n"
                         "homotopy.lambda0 = 0.5\n"
                         "oracle.seeds = 5\n"
                         "run.out_dir = outdir_x\n"
                         "sweep.seeds = 1,2\n");
  RunConfig rc = load_run_config(path);
  CHECK(rc.sys.n_antennas == 4);
  CHECK(rc.sys.n_users == 2);
  CHECK(rc.sys.margin == 0.25);
  REQUIRE(rc.sys.target_deg.size() == 2);
  CHECK(rc.sys.target_deg[1] == 30.0);
  CHECK(rc.alm.max_outer == 77);
  CHECK(rc.hom.lambda0 == 0.5);
  CHECK(rc.oracle_seeds == 5);
  CHECK(rc.out_dir == "outdir_x");
  REQUIRE(rc.sweep_seeds.size() == 2);

  CHECK_THROWS_AS(
      load_run_config(write_text(temp_dir() / "bad1.cfg",
                                 "alm.tau = 1.0\n")),
      ConfigError);
  CHECK_THROWS_AS(
      load_run_config(write_text(temp_dir() / "bad2.cfg",
                                 "homotopy.vertex_tol = 0.9\n")),
      ConfigError);
  CHECK_THROWS_AS(
      load_run_config(write_text(temp_dir() / "bad3.cfg",
                                 "no.such.key = 1\n")),
      ConfigError);
}

TEST_CASE("solve artifacts are byte-identical across repeat runs") {
  RunConfig rc;
  rc.sys.n_antennas = 4;
  rc.sys.n_users = 1;
  rc.sys.block_len = 2;
  rc.sys.quant_levels = 4;
  rc.sys.margin = 0.2;
  rc.sys.seed = 6;
  rc.alm.max_outer = 40;  // determinism does not require convergence
  rc.hom.max_stages = 3;
  fs::path base = temp_dir();
  rc.out_dir = (base / "runA").string();
  run_solve(rc);
  rc.out_dir = (base / "runB").string();
  run_solve(rc);
  for (const char* name :
       {"beampattern.csv", "convergence.csv", "waveform.csv"}) {
    std::string a = slurp(base / "runA" / name);
    std::string b = slurp(base / "runB" / name);
    CHECK(a == b);
    CHECK(a.size() > 0);
  }
}

}  // TEST_SUITE
