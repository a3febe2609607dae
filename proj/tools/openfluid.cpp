#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "openfluid/io.hpp"
#include "openfluid/verify.hpp"

using namespace openfluid;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitVerificationFailure = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitNumericalAbort = 3;

int cmd_run(const std::string& config, const std::string& out_dir) {
  Scenario sc;
  try {
    sc = load_scenario(config);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kExitConfigError;
  }
  try {
    RunRecord rec = run_scenario(sc, out_dir);
    std::cout << "scenario " << rec.scenario_hash << ": " << rec.steps << " steps, t = "
              << rec.t_final << "\n";
    std::cout << "timeseries: " << rec.timeseries_path << "\n";
    std::cout << "final snapshot: " << rec.final_snapshot_path << "\n";
    if (rec.aborted) {
      std::cerr << "numerical abort: " << rec.abort_reason
                << " (last good snapshot retained)\n";
      return kExitNumericalAbort;
    }
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return kExitNumericalAbort;
  }
  return kExitPass;
}

int cmd_verify(const std::string& suite, const std::string& config, const std::string& out_dir) {
  Scenario sc;
  try {
    sc = load_scenario(config);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kExitConfigError;
  }
  try {
    std::filesystem::create_directories(out_dir);
    auto reports = verify_suite(suite, sc, out_dir);
    for (const auto& r : reports) {
      std::cout << r.human_table();
      if (!r.csv.empty())
        write_file_atomic((std::filesystem::path(out_dir) / (r.suite + ".csv")).string(),
                          r.csv);
    }
    write_file_atomic((std::filesystem::path(out_dir) / "verdicts.json").string(),
                      verdicts_json(reports));
    for (const auto& r : reports)
      if (!r.all_pass()) return kExitVerificationFailure;
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "verification aborted: " << e.what() << "\n";
    return kExitNumericalAbort;
  }
  return kExitPass;
}

int cmd_converge(const std::string& config, int levels) {
  Scenario sc;
  try {
    sc = load_scenario(config);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kExitConfigError;
  }
  try {
    ConvergenceReport rep = convergence_study(sc, levels);
    std::cout << rep.table();
    for (const auto& [k, ord] : rep.fitted_order) {
      std::cout << k << ": order " << ord << (rep.pass.at(k) ? " [PASS]" : " [FAIL]");
      if (!rep.monotone.at(k)) std::cout << " (non-monotone residuals)";
      std::cout << "\n";
    }
    if (!rep.all_pass()) return kExitVerificationFailure;
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "convergence study aborted: " << e.what() << "\n";
    return kExitNumericalAbort;
  }
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"open-boundary fluid laboratory"};
  app.require_subcommand(1);

  std::string config, out_dir = "out", suite;
  int levels = 3;

  auto* run = app.add_subcommand("run", "integrate a scenario and write diagnostics");
  run->add_option("--config", config, "scenario config (JSON)")->required();
  run->add_option("--out", out_dir, "output directory");

  auto* verify = app.add_subcommand("verify", "run a verification suite");
  verify->add_option("suite", suite, "budgets|bracket|legendre|stress_tables|material|all")
      ->required();
  verify->add_option("--config", config, "scenario config (JSON)")->required();
  verify->add_option("--out", out_dir, "output directory");

  auto* conv = app.add_subcommand("converge", "refinement study of budget residuals");
  conv->add_option("--config", config, "scenario config (JSON)")->required();
  conv->add_option("--levels", levels, "number of refinement levels (>= 3)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfigError;
  }

  if (run->parsed()) return cmd_run(config, out_dir);
  if (verify->parsed()) return cmd_verify(suite, config, out_dir);
  if (conv->parsed()) return cmd_converge(config, levels);
  return kExitConfigError;
}
