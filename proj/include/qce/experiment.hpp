#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "qce/io.hpp"
#include "qce/metrics.hpp"
#include "qce/oracle.hpp"
#include "qce/outer_solver.hpp"

namespace qce {

struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  SystemConfig sys;
  AlmParams alm;
  HomotopyParams hom;
  EnumerationBudget budget;
  int oracle_seeds = 50;
  int ser_trials = 0;  // 0 skips the Monte Carlo SER in run_solve
  std::string out_dir = "out";
  int threads = 1;
  std::vector<double> sweep_margin, sweep_levels, sweep_snr, sweep_seeds;
};

inline RunConfig load_run_config(const std::string& path) {
  KvFile f = KvFile::load(path);
  RunConfig rc;
  SystemConfig& s = rc.sys;
  s.n_antennas = int(f.get_int("sys.n_antennas", s.n_antennas));
  s.n_users = int(f.get_int("sys.n_users", s.n_users));
  s.block_len = int(f.get_int("sys.block_len", s.block_len));
  s.psk_order = int(f.get_int("sys.psk_order", s.psk_order));
  s.quant_levels = int(f.get_int("sys.quant_levels", s.quant_levels));
  s.power = f.get_double("sys.power", s.power);
  s.snr_db = f.get_double("sys.snr_db", s.snr_db);
  s.margin = f.get_double("sys.margin", s.margin);
  s.target_deg = f.get_list("sys.targets", s.target_deg);
  s.beam_width_deg = f.get_double("sys.beam_width", s.beam_width_deg);
  s.grid_lo = f.get_double("sys.grid_lo", s.grid_lo);
  s.grid_hi = f.get_double("sys.grid_hi", s.grid_hi);
  s.grid_step = f.get_double("sys.grid_step", s.grid_step);
  s.seed = std::uint64_t(f.get_int("sys.seed", std::int64_t(s.seed)));

  AlmParams& a = rc.alm;
  a.tau = f.get_double("alm.tau", a.tau);
  a.delta = f.get_double("alm.delta", a.delta);
  double bound = f.get_double("alm.mult_bound", a.mult_hi);
  a.mult_lo = -bound;
  a.mult_hi = bound;
  a.max_outer = int(f.get_int("alm.max_outer", a.max_outer));
  a.max_inner = int(f.get_int("alm.max_inner", a.max_inner));
  a.stop_tol = f.get_double("alm.stop_tol", a.stop_tol);
  a.eps_scale = f.get_double("alm.eps_scale", a.eps_scale);

  HomotopyParams& h = rc.hom;
  h.lambda0 = f.get_double("homotopy.lambda0", h.lambda0);
  h.growth = f.get_double("homotopy.growth", h.growth);
  h.vertex_tol = f.get_double("homotopy.vertex_tol", h.vertex_tol);
  h.max_stages = int(f.get_int("homotopy.max_stages", h.max_stages));
  h.rho_mu0_scale = f.get_double("homotopy.rho_mu0_scale", h.rho_mu0_scale);
  h.rho_ratio = f.get_double("homotopy.rho_ratio", h.rho_ratio);
  h.penalty_carry = f.get_double("homotopy.penalty_carry", h.penalty_carry);

  rc.budget.max_candidates =
      std::uint64_t(f.get_int("oracle.budget",
                              std::int64_t(rc.budget.max_candidates)));
  rc.oracle_seeds = int(f.get_int("oracle.seeds", rc.oracle_seeds));
  rc.ser_trials = int(f.get_int("run.ser_trials", rc.ser_trials));
  rc.out_dir = f.get_str("run.out_dir", rc.out_dir);
  rc.threads = int(f.get_int("run.threads", rc.threads));
  rc.sweep_margin = f.get_list("sweep.margin", {});
  rc.sweep_levels = f.get_list("sweep.quant_levels", {});
  rc.sweep_snr = f.get_list("sweep.snr_db", {});
  rc.sweep_seeds = f.get_list("sweep.seeds", {});
  f.finish();

  rc.sys.validate();
  if (!(a.tau > 1.0)) throw ConfigError("alm.tau must exceed 1");
  if (!(a.delta > 0.0 && a.delta < 1.0))
    throw ConfigError("alm.delta must lie in (0,1)");
  if (a.max_outer < 1 || a.max_inner < 1)
    throw ConfigError("iteration limits must be >= 1");
  if (!(a.eps_scale > 0.0)) throw ConfigError("alm.eps_scale must be > 0");
  if (!(h.lambda0 > 0.0)) throw ConfigError("homotopy.lambda0 must be > 0");
  if (!(h.growth > 1.0)) throw ConfigError("homotopy.growth must exceed 1");
  if (h.max_stages < 1) throw ConfigError("homotopy.max_stages must be >= 1");
  if (!(h.rho_mu0_scale > 0.0) || !(h.rho_ratio > 0.0))
    throw ConfigError("homotopy penalty scales must be > 0");
  if (!(h.penalty_carry >= 0.0 && h.penalty_carry <= 1.0))
    throw ConfigError("homotopy.penalty_carry must lie in [0,1]");
  double vt_max = std::sin(M_PI / rc.sys.quant_levels);
  if (!(h.vertex_tol > 0.0 && h.vertex_tol < vt_max))
    throw ConfigError("homotopy.vertex_tol must lie in (0, sin(pi/L))");
  if (rc.threads < 1) throw ConfigError("run.threads must be >= 1");
  return rc;
}

// Pattern-matching objective of a waveform (the discrete-problem merit).
inline double pattern_objective(const MatrixXcd& x, const Instance& inst) {
  MatrixXcd y = apply_steer(inst, x);
  double quad = 0.0, lin = 0.0;
  for (int q = 0; q < inst.Q; ++q) {
    double bq = y.row(q).squaredNorm();
    quad += bq * bq;
    lin += inst.c[q] * bq;
  }
  return quad - lin * lin;
}

namespace detail {

inline double now_s() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch())
      .count();
}

inline void write_beampattern_csv(const std::string& path,
                                  const BeampatternResult& bp) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw ConfigError("cannot write " + path);
  std::fprintf(f, "# theta_deg [deg], power [linear], power_db [dB], "
                  "desired [0/1]\n");
  std::fprintf(f, "theta_deg,power,power_db,desired\n");
  for (int q = 0; q < bp.theta_deg.size(); ++q)
    std::fprintf(f, "%.17g,%.17g,%.17g,%g\n", bp.theta_deg[q], bp.power[q],
                 10.0 * std::log10(bp.power[q]), bp.desired[q]);
  std::fclose(f);
}

inline void write_convergence_csv(const std::string& path,
                                  const std::vector<OuterRow>& rows) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw ConfigError("cannot write " + path);
  std::fprintf(f, "# m [outer iteration, per stage], objective [augmented "
                  "Lagrangian], viol_C/viol_A [residual norms], cert_norm "
                  "[stationarity], rho [penalty rho_mu], inner_iters "
                  "[count], lambda_stage [penalty weight]\n");
  std::fprintf(f, "m,objective,viol_C,viol_A,cert_norm,rho,inner_iters,"
                  "lambda_stage\n");
  for (const auto& r : rows)
    std::fprintf(f, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%.17g\n", r.m,
                 r.value, r.viol_c, r.viol_a, r.cert_norm, r.rho_mu,
                 r.inner_iters, r.lambda);
  std::fclose(f);
}

struct EvalOutcome {
  SolveReport report;
  BeampatternResult bp;
  double min_margin = 0.0;
  double objective = 0.0;
  double ser = std::numeric_limits<double>::quiet_NaN();
};

inline EvalOutcome solve_and_evaluate(const SystemConfig& sc,
                                      const HomotopyParams& hp,
                                      const AlmParams& ap, int ser_trials) {
  EvalOutcome out;
  Instance inst = make_instance(sc);
  out.report = homotopy_solve(inst, hp, ap);
  out.bp = evaluate_beampattern(out.report.waveform, inst);
  out.min_margin = safety_margins(out.report.waveform.X, inst).minCoeff();
  out.objective = pattern_objective(out.report.waveform.X, inst);
  if (ser_trials > 0)
    out.ser = simulate_ser(out.report.waveform.X, inst,
                           std::sqrt(inst.sigma2), ser_trials, sc.seed);
  return out;
}

}  // namespace detail

/* Single design run: emits beampattern.csv, convergence.csv, waveform.csv
 * and summary.json into out_dir.  Returns the summary. */
inline nlohmann::json run_solve(const RunConfig& rc) {
  namespace fs = std::filesystem;
  double t0 = detail::now_s();
  Instance inst = make_instance(rc.sys);
  SolveReport rep = homotopy_solve(inst, rc.hom, rc.alm);
  double t_solve = detail::now_s() - t0;

  BeampatternResult bp = evaluate_beampattern(rep.waveform, inst);
  double min_margin = safety_margins(rep.waveform.X, inst).minCoeff();
  double objective = pattern_objective(rep.waveform.X, inst);
  bool feasible = rep.feasibility.violations == 0;

  nlohmann::json summary{
      {"seed", rc.sys.seed},
      {"n_antennas", rc.sys.n_antennas},
      {"n_users", rc.sys.n_users},
      {"block_len", rc.sys.block_len},
      {"psk_order", rc.sys.psk_order},
      {"quant_levels", rc.sys.quant_levels},
      {"margin_threshold", rc.sys.margin},
      {"snr_db", rc.sys.snr_db},
      {"mse", bp.mse},
      {"alpha_star", bp.alpha_star},
      {"objective", objective},
      {"min_margin", min_margin},
      {"ci_violations", rep.feasibility.violations},
      {"max_violation", rep.feasibility.max_violation},
      {"infeasible", !feasible},
      {"vertex_converged", rep.vertex_converged},
      {"all_stages_converged", rep.all_stages_converged},
      {"stages", int(rep.stages.size())},
      {"lambda_final", rep.lambda_final},
      {"outer_rows", int(rep.rows.size())},
  };
  if (rc.ser_trials > 0) {
    double sigma = std::sqrt(inst.sigma2);
    double ser = simulate_ser(rep.waveform.X, inst, sigma, rc.ser_trials,
                              rc.sys.seed);
    auto [lo, hi] = sep_bounds(std::max(0.0, min_margin), sigma);
    summary["ser"] = ser;
    summary["ser_trials"] = rc.ser_trials;
    summary["sep_lower_at_min_margin"] = lo;
    summary["sep_upper_at_min_margin"] = hi;
  }
  summary["timings"] = {{"solve_s", t_solve},
                        {"total_s", detail::now_s() - t0}};

  fs::create_directories(rc.out_dir);
  detail::write_beampattern_csv(rc.out_dir + "/beampattern.csv", bp);
  detail::write_convergence_csv(rc.out_dir + "/convergence.csv", rep.rows);
  write_waveform_csv(rc.out_dir + "/waveform.csv", rep.waveform);
  std::ofstream(rc.out_dir + "/summary.json") << summary.dump(2) << "\n";
  return summary;
}

/* Cartesian sweep over (margin, quant_levels, snr_db) x seeds; each point is
 * an independent full solve.  Points run in a worker pool; rows land in
 * preassigned slots so the output is independent of scheduling. */
inline void run_sweep(const RunConfig& rc) {
  if (rc.sweep_margin.empty() && rc.sweep_levels.empty() &&
      rc.sweep_snr.empty())
    throw ConfigError("sweep requires at least one axis "
                      "(sweep.margin, sweep.quant_levels, sweep.snr_db)");
  std::vector<double> margins =
      rc.sweep_margin.empty() ? std::vector<double>{rc.sys.margin}
                              : rc.sweep_margin;
  std::vector<double> levels =
      rc.sweep_levels.empty() ? std::vector<double>{double(
                                    rc.sys.quant_levels)}
                              : rc.sweep_levels;
  std::vector<double> snrs = rc.sweep_snr.empty()
                                 ? std::vector<double>{rc.sys.snr_db}
                                 : rc.sweep_snr;
  std::vector<double> seeds =
      rc.sweep_seeds.empty() ? std::vector<double>{double(rc.sys.seed)}
                             : rc.sweep_seeds;

  struct Point {
    double b, snr;
    int levels;
    std::uint64_t seed;
  };
  std::vector<Point> points;
  for (double b : margins)
    for (double lv : levels)
      for (double snr : snrs)
        for (double sd : seeds)
          points.push_back({b, snr, int(lv), std::uint64_t(sd)});

  struct Row {
    Point p;
    double mse, ser, min_margin;
    bool converged;
  };
  std::vector<Row> rows(points.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= points.size()) break;
      SystemConfig sc = rc.sys;
      sc.margin = points[i].b;
      sc.quant_levels = points[i].levels;
      sc.snr_db = points[i].snr;
      sc.seed = points[i].seed;
      auto out = detail::solve_and_evaluate(sc, rc.hom, rc.alm,
                                            rc.ser_trials);
      rows[i] = {points[i], out.bp.mse, out.ser, out.min_margin,
                 out.report.all_stages_converged};
    }
  };
  if (rc.threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < rc.threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  namespace fs = std::filesystem;
  fs::create_directories(rc.out_dir);
  {
    std::FILE* f = std::fopen((rc.out_dir + "/tradeoff.csv").c_str(), "w");
    if (!f) throw ConfigError("cannot write tradeoff.csv");
    std::fprintf(f, "# b [margin threshold], L [quant levels], snr_db [dB], "
                    "seed, mse [beampattern], ser [fraction], min_margin, "
                    "converged [0/1]\n");
    std::fprintf(f, "b,L,snr_db,seed,mse,ser,min_margin,converged\n");
    for (const auto& r : rows)
      std::fprintf(f, "%.17g,%d,%.17g,%llu,%.17g,%.17g,%.17g,%d\n", r.p.b,
                   r.p.levels, r.p.snr,
                   (unsigned long long)r.p.seed, r.mse, r.ser, r.min_margin,
                   r.converged ? 1 : 0);
    std::fclose(f);
  }
  {
    // seed-averaged companion, one row per (b, L, snr) in sweep order
    std::FILE* f =
        std::fopen((rc.out_dir + "/tradeoff_mean.csv").c_str(), "w");
    if (!f) throw ConfigError("cannot write tradeoff_mean.csv");
    std::fprintf(f, "# means over seeds; columns as tradeoff.csv\n");
    std::fprintf(f, "b,L,snr_db,n_seeds,mean_mse,mean_ser,mean_min_margin\n");
    size_t group = seeds.size();
    for (size_t i = 0; i < rows.size(); i += group) {
      double mse = 0, ser = 0, mm = 0;
      for (size_t j = i; j < i + group; ++j) {
        mse += rows[j].mse;
        ser += rows[j].ser;
        mm += rows[j].min_margin;
      }
      double n = double(group);
      std::fprintf(f, "%.17g,%d,%.17g,%zu,%.17g,%.17g,%.17g\n", rows[i].p.b,
                   rows[i].p.levels, rows[i].p.snr, group, mse / n, ser / n,
                   mm / n);
    }
    std::fclose(f);
  }
}

/* Homotopy-vs-enumeration agreement harness on seeds 1..oracle_seeds.
 * Budget refusal propagates as BudgetError (CLI exit code 3). */
inline nlohmann::json run_oracle_check(const RunConfig& rc) {
  struct Row {
    int seed;
    OracleStatus status;
    double oracle_obj, solver_obj, gap_rel;
    bool solver_feasible;
    std::uint64_t candidates;
  };
  std::vector<Row> rows;
  int feasible_seeds = 0, agree = 0, soundness_violations = 0;
  for (int s = 1; s <= rc.oracle_seeds; ++s) {
    SystemConfig sc = rc.sys;
    sc.seed = std::uint64_t(s);
    Instance inst = make_instance(sc);
    OracleResult orc = exhaustive_solve(inst, rc.budget);
    if (orc.status == OracleStatus::kBudgetExceeded)
      throw BudgetError("enumeration budget exceeded: L^(N*T) > " +
                        std::to_string(rc.budget.max_candidates));
    SolveReport rep = homotopy_solve(inst, rc.hom, rc.alm);
    double sobj = pattern_objective(rep.waveform.X, inst);
    bool sfeas = rep.feasibility.violations == 0;
    Row row{s, orc.status, orc.objective, sobj,
            std::numeric_limits<double>::quiet_NaN(), sfeas,
            orc.n_candidates};
    if (orc.status == OracleStatus::kOptimal) {
      ++feasible_seeds;
      row.gap_rel = (sobj - orc.objective) /
                    std::max(1e-12, std::abs(orc.objective));
      bool within = sfeas && sobj <= 1.05 * orc.objective + 1e-12;
      if (within) ++agree;
      if (sfeas && sobj < orc.objective - 1e-9) ++soundness_violations;
    }
    rows.push_back(row);
  }

  namespace fs = std::filesystem;
  fs::create_directories(rc.out_dir);
  {
    std::FILE* f =
        std::fopen((rc.out_dir + "/oracle_check.csv").c_str(), "w");
    if (!f) throw ConfigError("cannot write oracle_check.csv");
    std::fprintf(f, "# oracle_status: 0 optimal, 1 infeasible; gap_rel "
                    "relative objective gap (feasible seeds only)\n");
    std::fprintf(f, "seed,oracle_status,oracle_obj,solver_obj,gap_rel,"
                    "solver_feasible,candidates\n");
    for (const auto& r : rows)
      std::fprintf(f, "%d,%d,%.17g,%.17g,%.17g,%d,%llu\n", r.seed,
                   int(r.status), r.oracle_obj, r.solver_obj, r.gap_rel,
                   r.solver_feasible ? 1 : 0,
                   (unsigned long long)r.candidates);
    std::fclose(f);
  }
  nlohmann::json summary{
      {"seeds", rc.oracle_seeds},
      {"oracle_feasible_seeds", feasible_seeds},
      {"feasible_and_within_5pct", agree},
      {"soundness_violations", soundness_violations},
      {"pass_quality", feasible_seeds == 0 ||
                           agree >= int(std::ceil(0.8 * feasible_seeds))},
      {"pass_soundness", soundness_violations == 0},
  };
  std::ofstream(rc.out_dir + "/oracle_summary.json")
      << summary.dump(2) << "\n";
  return summary;
}

// SER and bound evaluation of an existing waveform file.
inline nlohmann::json run_ser(const RunConfig& rc,
                              const std::string& waveform_path) {
  Instance inst = make_instance(rc.sys);
  RealWaveform wf =
      read_waveform_csv(waveform_path, rc.sys.n_antennas, rc.sys.block_len);
  double sigma = std::sqrt(inst.sigma2);
  double min_margin = safety_margins(wf.X, inst).minCoeff();
  int trials = rc.ser_trials > 0 ? rc.ser_trials : 10000;
  double ser = simulate_ser(wf.X, inst, sigma, trials, rc.sys.seed);
  auto [lo_min, hi_min] = sep_bounds(std::max(0.0, min_margin), sigma);
  auto [lo_b, hi_b] = sep_bounds(rc.sys.margin, sigma);
  nlohmann::json summary{
      {"seed", rc.sys.seed},
      {"ser", ser},
      {"ser_trials", trials},
      {"min_margin", min_margin},
      {"sep_lower_at_min_margin", lo_min},
      {"sep_upper_at_min_margin", hi_min},
      {"sep_lower_at_threshold", lo_b},
      {"sep_upper_at_threshold", hi_b},
  };
  std::filesystem::create_directories(rc.out_dir);
  std::ofstream(rc.out_dir + "/ser.json") << summary.dump(2) << "\n";
  return summary;
}

}  // namespace qce
