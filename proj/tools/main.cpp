// Command-line front end: solve | sweep | oracle-check | ser.
// Exit codes: 0 success, 2 configuration error, 3 enumeration budget refusal.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "qce/experiment.hpp"

namespace {

struct CommonOpts {
  std::string config;
  std::int64_t seed = -1;
  std::string out_dir;
  int threads = 0;
};

void add_common(CLI::App* sub, CommonOpts& o) {
  sub->add_option("config", o.config, "key = value config file")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--seed", o.seed, "override sys.seed");
  sub->add_option("--out-dir", o.out_dir, "override run.out_dir");
  sub->add_option("--threads", o.threads, "override run.threads");
}

qce::RunConfig load(const CommonOpts& o) {
  qce::RunConfig rc = qce::load_run_config(o.config);
  if (o.seed >= 0) rc.sys.seed = std::uint64_t(o.seed);
  if (!o.out_dir.empty()) rc.out_dir = o.out_dir;
  if (o.threads > 0) rc.threads = o.threads;
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantized constant-envelope waveform design"};
  app.require_subcommand(1);

  CommonOpts solve_o, sweep_o, oracle_o, ser_o;
  std::string waveform_path;

  CLI::App* solve = app.add_subcommand("solve", "single design run");
  add_common(solve, solve_o);
  CLI::App* sweep = app.add_subcommand("sweep", "parameter sweep");
  add_common(sweep, sweep_o);
  CLI::App* oracle =
      app.add_subcommand("oracle-check", "compare against enumeration");
  add_common(oracle, oracle_o);
  CLI::App* ser = app.add_subcommand("ser", "evaluate a stored waveform");
  add_common(ser, ser_o);
  ser->add_option("--waveform", waveform_path, "waveform.csv to evaluate")
      ->required()
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) {
      auto summary = qce::run_solve(load(solve_o));
      std::printf("%s\n", summary.dump(2).c_str());
    } else if (sweep->parsed()) {
      qce::run_sweep(load(sweep_o));
    } else if (oracle->parsed()) {
      auto summary = qce::run_oracle_check(load(oracle_o));
      std::printf("%s\n", summary.dump(2).c_str());
    } else if (ser->parsed()) {
      auto summary = qce::run_ser(load(ser_o), waveform_path);
      std::printf("%s\n", summary.dump(2).c_str());
    }
  } catch (const qce::BudgetError& e) {
    std::fprintf(stderr, "budget error: %s\n", e.what());
    return 3;
  } catch (const qce::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
