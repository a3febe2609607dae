#pragma once

#include <optional>
#include <string>
#include <vector>

#include "openfluid/model.hpp"

namespace openfluid {

/// Bulk (distributed) sources given as expressions of (x, y, t).
struct BulkSourceSpec {
  std::vector<Expression> b;          // momentum source components
  std::vector<Expression> theta_rho;  // one per density component
  Expression theta_s;
  std::vector<Expression> theta_tensor;  // per tensor component

  bool empty() const;
};

/// Realized bulk sources on the grid at time t.
struct BulkSources {
  Field b;                      // vector density
  std::vector<Field> theta_rho;  // scalar densities
  Field theta_s;                 // scalar density
  std::optional<Field> theta_tensor;
};

BulkSources evaluate_bulk(const BulkSourceSpec& spec, GridPtr grid, const ModelSpec& model,
                          double t);

enum class FluxMode { closed, inflow, outflow_viscous, outflow_inviscid, free_open, prescribed };

/// Per-patch boundary flux closure.
struct FluxClosure {
  int patch = 0;
  FluxMode mode = FluxMode::closed;
  // inflow: full prescribed boundary state
  std::vector<Expression> u0;
  std::vector<Expression> rho0;  // per component
  Expression s0;
  // outflow (viscous): prescribed velocity and temperature
  Expression T0;
  // outflow (inviscid): normal speed
  Expression nu0;
  // prescribed: raw flux expressions
  std::vector<Expression> J_presc;
  std::vector<Expression> j_rho_presc;
  Expression j_s_presc;
  std::vector<Expression> j_tensor_presc;
};

/// Trace of the state (plus coordinates/normal) at one boundary face.
struct FaceState {
  int face_id = 0;
  int dim = 2;
  double x = 0, y = 0, nx = 0, ny = 0, da = 1;
  double u[2] = {0, 0};
  Eigen::VectorXd rho;
  double s = 0;
  Eigen::VectorXd tensor;

  double un() const { return u[0] * nx + u[1] * ny; }
};

/// Boundary fluxes at one face.
struct FaceFlux {
  int face_id = 0;
  double J[2] = {0, 0};
  Eigen::VectorXd j_rho;
  double j_s = 0;
  Eigen::VectorXd j_tensor;
};

struct FluxValues {
  std::vector<FaceFlux> faces;
};

/// Validates mode parameters against the grid patch (sign conditions on
/// u0.n and nu0, checked per face; violations report the face index).
FluxClosure make_flux_spec(FluxMode mode, FluxClosure params, const std::string& patch,
                           const Grid& grid, double t = 0.0);

/// Traces the state primitives to the faces of a patch (quadratic
/// extrapolation of cell data) and packages them as FaceStates.
std::vector<FaceState> trace_face_states(const ModelSpec& model, const State& st,
                                         const std::vector<int>& face_ids);

/// Evaluates the closure on the given face traces. Prescribed data is
/// evaluated at face coordinates; state-dependent closures use the
/// traces per the inflow/outflow/free-open rules.
FluxValues evaluate_fluxes(const FluxClosure& closure, const ModelSpec& model,
                           const std::vector<FaceState>& traces, double t);

/// Fluxes that exactly realize the boundary rows on the current trace
/// (the freely-open choice): J = -(u.n) dl/du - sigma_adv.n, etc.
FluxValues fluxes_from_trace(const ModelSpec& model, const std::vector<FaceState>& traces);

/// Pointwise momentum dl/du at a face state (used to build J).
void face_momentum(const ModelSpec& model, const FaceState& fs, double m_out[2]);

/// Advective stress sigma.n at a face state (zero for non-tensor models).
void face_stress_normal(const ModelSpec& model, const FaceState& fs, double sn_out[2]);

}  // namespace openfluid
