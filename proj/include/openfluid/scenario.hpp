#pragma once

#include <map>
#include <string>

#include "openfluid/budgets.hpp"
#include "openfluid/dynamics.hpp"

namespace openfluid {

/// A fully validated run configuration.
struct Scenario {
  GridPtr grid;
  ModelSpec model;
  // initial-condition expressions
  std::vector<Expression> u0;
  std::vector<Expression> rho0;
  Expression s0;
  std::vector<Expression> tensor0;
  BulkSourceSpec bulk;
  std::vector<FluxClosure> closures;
  // time controls
  double dt = 1e-3;
  double t_end = 1.0;
  double cfl = 0.5;
  bool hard_cfl_error = true;
  // output controls
  int snapshot_every = 0;  // 0 = only final snapshot
  bool binary_snapshots = false;
  unsigned seed = 0;
  std::string config_text;  // canonical source, hashed into the record

  State initial_state() const;
};

/// Parses and validates a JSON config. Throws std::invalid_argument with
/// a config-path message on malformed input.
Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::string& config_path);

struct RunRecord {
  std::string scenario_hash;
  int steps = 0;
  double t_final = 0;
  bool aborted = false;
  std::string abort_reason;
  std::string timeseries_path;
  std::string final_snapshot_path;
  std::map<std::string, double> max_budget_residuals;
};

/// Integrates to t_end, writing timeseries.csv, snapshots and
/// run_summary.json into out_dir. On numerical abort the last good
/// snapshot is kept and the record is flagged.
RunRecord run_scenario(const Scenario& sc, const std::string& out_dir);

std::string scenario_hash(const std::string& config_text);

}  // namespace openfluid
