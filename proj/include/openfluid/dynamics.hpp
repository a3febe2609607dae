#pragma once

#include "openfluid/ghost.hpp"
#include "openfluid/model.hpp"
#include "openfluid/sources.hpp"

namespace openfluid {

struct Tendency {
  Field du_dt;                 // vector function
  Field dm_dt;                 // 1-form density
  std::vector<Field> drho_dt;  // scalar densities
  Field ds_dt;                 // scalar density
  std::optional<Field> dtensor_dt;
};

/// Ghost-extended state after boundary-condition application. Stencils
/// in the tendency assembly are centered everywhere and read the ghosts.
struct GhostState {
  GridPtr grid;
  double t = 0.0;
  std::vector<ExtArray> u;
  std::vector<ExtArray> rho;
  ExtArray s;
  std::vector<ExtArray> tensor;
  std::vector<FluxMode> patch_modes;  // per patch slot
};

/// Max-norm residuals of the discrete boundary rows on one patch.
struct BoundaryRowResiduals {
  std::string patch;
  double momentum = 0.0;    // (u.n) dl/du + sigma_adv.n + J - sigma_ext.n
  double mass = 0.0;        // rho u.n + j_rho
  double entropy = 0.0;     // s u.n + j_s
  double tensor = 0.0;      // tensor u.n + j_tensor
  double grad_rho_n = 0.0;  // (grad rho).n  (Korteweg row)
};

/// Fills ghost layers: quadratic extrapolation by default, pinned traces
/// per closure (closed pins u.n = 0, inflow pins the full prescribed
/// state, outflow pins exactly what the closure determines). Patches not
/// covered by a closure default to closed.
GhostState apply_boundary_conditions(const ModelSpec& model, const State& st,
                                     const std::vector<FluxClosure>& closures, double t);

/// Face traces read from the ghost-extended arrays.
std::vector<FaceState> ghost_face_states(const ModelSpec& model, const GhostState& gs,
                                         const std::vector<int>& face_ids);

std::vector<BoundaryRowResiduals> boundary_residual_report(
    const ModelSpec& model, const GhostState& gs, const std::vector<FluxClosure>& closures);

/// Advection-induced stress sigma_pi (density branch) or sigma_kappa
/// (function branch) from the generic hat contraction. `dl_dadv` in the
/// conjugate (q,p) layout. Returns a (1,1) tensor density.
Field assemble_stress(const Field& advected, const Field& dl_dadv);
/// MHD specialization B (x) dl/dB.
Field assemble_stress_mhd(const Field& B, const Field& dl_dB);

/// Interior tendencies with boundary data taken from the ghost state.
Tendency interior_tendency(const ModelSpec& model, const State& st, const BulkSources& bulk,
                           const GhostState& gs);

/// Convenience: apply BCs then assemble.
Tendency compute_tendency(const ModelSpec& model, const State& st, const BulkSourceSpec& bulk,
                          const std::vector<FluxClosure>& closures, double t);

/// lambda * laplace(rho) at cells; the higher-order correction to the
/// density potential (zero field unless the model is Korteweg).
Field korteweg_mu_correction(const ModelSpec& model, const GhostState& gs);
/// Same correction traced to faces.
std::vector<double> korteweg_mu_correction_at_faces(const ModelSpec& model,
                                                    const GhostState& gs,
                                                    const std::vector<int>& face_ids);

struct StepControls {
  double cfl = 0.5;
  bool hard_cfl_error = true;
};

/// Classical four-stage explicit step; boundary conditions are
/// re-applied at every stage. Throws on CFL violation (when hard) and
/// on non-finite tendencies.
State rk4_step(const ModelSpec& model, const State& st, const BulkSourceSpec& bulk,
               const std::vector<FluxClosure>& closures, double dt,
               const StepControls& ctl = {});

}  // namespace openfluid
