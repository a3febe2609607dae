#pragma once

#include <optional>

#include "openfluid/expression.hpp"
#include "openfluid/field.hpp"
#include "openfluid/thermo.hpp"

namespace openfluid {

enum class ModelFamily {
  euler,
  euler_rotating_gravity,
  shallow_water_rotating,
  multicomponent_euler,
  tensor_advected,
  mhd,
  euler_korteweg,
};

bool family_has_entropy(ModelFamily f);
bool family_has_rotation(ModelFamily f);

/// Advected tensor slot of a tensor_advected model. The Lagrangian
/// couples quadratically, l -= coupling/2 * (pi : pi), which exercises
/// every hat-contraction stress term while keeping the Legendre map
/// trivially invertible.
struct TensorSlotSpec {
  TensorRank rank{1, 0};
  FieldKind kind = FieldKind::density;
  double coupling = 1.0;
};

/// Model family, parameters and state equation. Produces all
/// variational derivatives and the Legendre pair.
struct ModelSpec {
  ModelFamily family = ModelFamily::euler;
  StateEquation eos;

  // multicomponent: per-component barotropic (kappa_k, gamma_k) terms
  // added to the shared eos evaluated at (rho_total, s)
  std::vector<std::array<double, 2>> component_baro;

  // rotation / gravity / shallow water
  std::vector<Expression> R;  // vector potential, one expression per axis
  std::optional<double> omega;  // for validating curl R = 2*omega
  Expression phi;             // gravitational potential
  Expression Z;               // bottom topography
  double g_const = 9.81;

  double lambda = 0.0;  // Korteweg coefficient, l -= lambda/2 |grad rho|^2

  std::optional<TensorSlotSpec> tensor;  // tensor_advected / mhd slot

  // optional external stress sigma^c_d(x,t), row-major c*dim+d
  std::vector<Expression> sigma_ext;

  int n_components() const {
    return family == ModelFamily::multicomponent_euler
               ? static_cast<int>(component_baro.size())
               : 1;
  }
  bool has_tensor() const { return tensor.has_value(); }
  bool has_external_stress() const { return !sigma_ext.empty(); }
};

ModelSpec make_euler(const StateEquation& eos);
ModelSpec make_rotating(const StateEquation& eos, std::vector<Expression> R, Expression phi,
                        std::optional<double> omega = {});
ModelSpec make_shallow_water(double g_const, std::vector<Expression> R, Expression Z,
                             std::optional<double> omega = {});
ModelSpec make_multicomponent(const StateEquation& eos,
                              std::vector<std::array<double, 2>> comps);
ModelSpec make_mhd(const StateEquation& eos);
ModelSpec make_korteweg(const StateEquation& eos, double lambda);
ModelSpec make_tensor_advected(const StateEquation& eos, TensorSlotSpec slot);

/// Eulerian unknowns at one instant. Shallow water stores the depth h
/// in rho[0] and carries a zero entropy field.
struct State {
  GridPtr grid;
  Field u;                 // (1,0) function
  std::vector<Field> rho;  // scalar densities, one per component
  Field s;                 // scalar density
  std::optional<Field> tensor;
  double t = 0.0;

  static State zeros(GridPtr grid, const ModelSpec& m);
  Field rho_total() const;
  bool all_finite() const;
};

/// State values at a single point (cell center, ghost point or face).
struct PointVals {
  double x = 0.0, y = 0.0;
  double u[2] = {0.0, 0.0};
  Eigen::VectorXd rho;     // per component
  double s = 0.0;
  Eigen::VectorXd tensor;  // flat components, empty if none
};

/// Pointwise variational derivatives of the Lagrangian density
/// (gradient-rho terms excluded; those are field-level).
struct PointDerivs {
  double m[2] = {0.0, 0.0};  // dl/du
  Eigen::VectorXd dl_drho;
  double dl_ds = 0.0;
  Eigen::VectorXd dl_dtensor;  // conjugate layout, empty if none
};

PointDerivs point_derivs(const ModelSpec& m, const PointVals& pv);
/// Buffer-reusing variant for hot loops.
void point_derivs_into(const ModelSpec& m, const PointVals& pv, PointDerivs& out);
double point_lagrangian(const ModelSpec& m, const PointVals& pv);  // no grad-rho part
double point_energy(const ModelSpec& m, const PointVals& pv);      // no grad-rho part
/// u from (m, rho) at a point: inverse Legendre map.
void point_velocity_from_momentum(const ModelSpec& m, double x, double y,
                                  const double mom[2], double rho_total, double u_out[2]);

/// Field-level variational derivatives.
struct VarDerivs {
  Field dl_du;                       // 1-form density (the momentum m)
  std::vector<Field> dl_drho;        // scalar functions
  Field dl_ds;                       // scalar function
  std::optional<Field> dl_dtensor;   // conjugate (q,p) layout
  std::optional<Field> dl_dgradrho;  // vector function (Korteweg: -lambda grad rho)
};

VarDerivs variational_derivatives(const ModelSpec& m, const State& st);
Field momentum_from_velocity(const ModelSpec& m, const State& st);
Field velocity_from_momentum(const ModelSpec& m, const Field& mom,
                             const std::vector<Field>& rho);

Field lagrangian_density(const ModelSpec& m, const State& st);  // scalar density
Field energy_density(const ModelSpec& m, const State& st);      // scalar density

struct HamiltonianEval {
  Field density;  // scalar density h
  Field dh_dm;    // = u
};
/// h = m.u - l with u the inverse Legendre image of m.
HamiltonianEval hamiltonian_density(const ModelSpec& m, const Field& mom,
                                    const std::vector<Field>& rho, const Field& s,
                                    const std::optional<Field>& tensor);

/// Partials of the total energy density with respect to the state,
/// used to chain-rule d/dt of global integrals through tendencies.
struct EnergyPartials {
  Field de_du;
  std::vector<Field> de_drho;
  Field de_ds;
  std::optional<Field> de_dtensor;
  std::optional<Field> de_dgradrho;
};
EnergyPartials energy_partials(const ModelSpec& m, const State& st);

/// Vector field R(x) realized on the grid (zero when absent).
Field coriolis_field(const ModelSpec& m, GridPtr grid);
Field gravity_potential_field(const ModelSpec& m, GridPtr grid);
Field topography_field(const ModelSpec& m, GridPtr grid);
/// External stress realized as a (1,1) tensor density field at time t.
Field external_stress_field(const ModelSpec& m, GridPtr grid, double t);

/// Fast signal speed for the CFL guard.
double max_signal_speed(const ModelSpec& m, const State& st);

void check_state_admissible(const ModelSpec& m, const State& st);

}  // namespace openfluid
