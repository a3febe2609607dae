#pragma once

#include <map>

#include "openfluid/scenario.hpp"

namespace openfluid {

struct VerdictItem {
  std::string name;
  bool pass = false;
  double value = 0;      // measured quantity (residual, error, ...)
  double threshold = 0;  // pass when value <= threshold
  std::string detail;
};

struct SuiteReport {
  std::string suite;
  std::vector<VerdictItem> items;
  std::string csv;  // suite-specific table (budgets.csv / bracket.csv)

  bool all_pass() const;
  std::string human_table() const;
};

std::string verdicts_json(const std::vector<SuiteReport>& reports);

SuiteReport verify_legendre(unsigned seed);
SuiteReport verify_stress_tables(unsigned seed);
SuiteReport verify_budgets(const Scenario& sc);
SuiteReport verify_bracket(const Scenario& sc);
SuiteReport verify_material(const Scenario& sc, const std::string& work_dir);

std::vector<SuiteReport> verify_suite(const std::string& which, const Scenario& sc,
                                      const std::string& work_dir);

struct ConvergenceReport {
  std::vector<double> h;                           // per level
  std::map<std::string, std::vector<double>> res;  // per quantity per level
  std::map<std::string, double> fitted_order;
  std::map<std::string, bool> pass;        // order >= min_order or round-off floor
  std::map<std::string, bool> monotone;
  double min_order = 1.8;

  bool all_pass() const;
  std::string table() const;
};

/// Re-runs the scenario at successively halved dx (dt scaled along) and
/// fits the order of each budget residual. levels >= 3 required.
ConvergenceReport convergence_study(const Scenario& base, int levels, double min_order = 1.8);

/// Worker cap for independent scenario runs (OPENFLUID_THREADS).
int worker_cap(int njobs);

}  // namespace openfluid
