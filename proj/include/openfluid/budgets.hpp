#pragma once

#include "openfluid/dynamics.hpp"

namespace openfluid {

/// One audited balance law: d/dt of a global integral versus its bulk
/// and boundary columns.
struct BudgetReport {
  std::string quantity;
  double d_dt = 0;      // chain-ruled through the dynamics tendency
  double bulk = 0;
  double boundary = 0;
  double residual = 0;  // d_dt - bulk - boundary
  double tol = 0;
  bool pass = false;
};

struct BudgetTolerance {
  double abs = 1e-8;
  double rel_c = 5.0;  // residual allowance rel_c * dx^2 * column scale
};

enum class BudgetKind { mass, entropy };
enum class EnergyForm { generic, euler, rotating, shallow_water };

BudgetReport quantity_budget(BudgetKind kind, int component, const ModelSpec& model,
                             const State& st, const BulkSourceSpec& bulk,
                             const std::vector<FluxClosure>& closures,
                             const BudgetTolerance& tol = {});

/// Total-energy budget. The generic form pairs fluxes with the model's
/// variational derivatives; the named forms use the per-model columns.
BudgetReport energy_budget(const ModelSpec& model, const State& st, const BulkSourceSpec& bulk,
                           const std::vector<FluxClosure>& closures,
                           EnergyForm form = EnergyForm::generic,
                           const BudgetTolerance& tol = {});

/// Kinetic / internal / potential split plus the total row whose columns
/// are the exact columnwise sums' counterparts.
std::vector<BudgetReport> energy_split_budget(const ModelSpec& model, const State& st,
                                              const BulkSourceSpec& bulk,
                                              const std::vector<FluxClosure>& closures,
                                              const BudgetTolerance& tol = {});

/// Evaluates the equivalent boundary-energy-flow expressions on the
/// realized fluxes and returns them with their max pairwise spread.
/// Throws when the flux/trace compatibility relations are violated.
struct BoundaryFormCheck {
  std::vector<std::string> labels;
  std::vector<double> values;
  double max_abs_diff = 0;
  double max_rel_diff = 0;
};
BoundaryFormCheck boundary_form_equivalence(const ModelSpec& model, const State& st,
                                            const std::vector<FluxClosure>& closures);

/// MHD: |int [J.u - j_B . dl/dB] - int [-(dl/du.u)(u.n) - (dl/dB.u)(B.n)
/// + (dl/dB.B)(u.n)]| on trace-realized fluxes.
double mhd_boundary_identity_gap(const ModelSpec& model, const State& st);

/// Secondary oracle for d/dt columns: centered time difference of a
/// state functional through a forward/backward integrator step pair,
/// for end-to-end cross-checks of the chain-ruled rates.
double time_differenced_rate(const ModelSpec& model, const State& st,
                             const BulkSourceSpec& bulk,
                             const std::vector<FluxClosure>& closures, double dt,
                             const std::function<double(const State&)>& functional);

}  // namespace openfluid
