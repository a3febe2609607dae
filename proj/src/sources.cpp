#include "openfluid/sources.hpp"

#include <cmath>
#include <stdexcept>

#include "openfluid/ops.hpp"
#include "openfluid/tensor_algebra.hpp"

namespace openfluid {

bool BulkSourceSpec::empty() const {
  auto any = [](const std::vector<Expression>& v) {
    for (const auto& e : v)
      if (e.valid()) return true;
    return false;
  };
  return !any(b) && !any(theta_rho) && !theta_s.valid() && !any(theta_tensor);
}

BulkSources evaluate_bulk(const BulkSourceSpec& spec, GridPtr grid, const ModelSpec& model,
                          double t) {
  BulkSources out;
  out.b = Field::zeros(grid, one_form_rank, FieldKind::density);
  for (int c = 0; c < grid->dim && c < static_cast<int>(spec.b.size()); ++c)
    if (spec.b[c].valid())
      for (int j = 0; j < grid->ny(); ++j)
        for (int i = 0; i < grid->nx(); ++i)
          out.b.comp[c](grid->flat(i, j)) = spec.b[c](grid->cell_x(i), grid->cell_y(j), t);

  out.theta_rho.assign(model.n_components(), Field::scalar(grid, FieldKind::density));
  for (int k = 0; k < model.n_components(); ++k)
    if (k < static_cast<int>(spec.theta_rho.size()) && spec.theta_rho[k].valid())
      for (int j = 0; j < grid->ny(); ++j)
        for (int i = 0; i < grid->nx(); ++i)
          out.theta_rho[k].comp[0](grid->flat(i, j)) =
              spec.theta_rho[k](grid->cell_x(i), grid->cell_y(j), t);

  out.theta_s = Field::scalar(grid, FieldKind::density);
  if (spec.theta_s.valid())
    for (int j = 0; j < grid->ny(); ++j)
      for (int i = 0; i < grid->nx(); ++i)
        out.theta_s.comp[0](grid->flat(i, j)) = spec.theta_s(grid->cell_x(i), grid->cell_y(j), t);

  if (model.has_tensor()) {
    Field th = Field::zeros(grid, model.tensor->rank, model.tensor->kind);
    for (int c = 0; c < th.n_comp() && c < static_cast<int>(spec.theta_tensor.size()); ++c)
      if (spec.theta_tensor[c].valid())
        for (int j = 0; j < grid->ny(); ++j)
          for (int i = 0; i < grid->nx(); ++i)
            th.comp[c](grid->flat(i, j)) =
                spec.theta_tensor[c](grid->cell_x(i), grid->cell_y(j), t);
    out.theta_tensor = std::move(th);
  }
  return out;
}

FluxClosure make_flux_spec(FluxMode mode, FluxClosure params, const std::string& patch,
                           const Grid& grid, double t) {
  FluxClosure c = std::move(params);
  c.mode = mode;
  c.patch = grid.patch_index(patch);
  const auto faces = grid.patch_faces(c.patch);
  if (faces.empty()) throw std::invalid_argument("empty patch '" + patch + "'");

  auto eval_u0n = [&](const Face& f) {
    double ux = c.u0.size() > 0 && c.u0[0].valid() ? c.u0[0](f.x, f.y, t) : 0.0;
    double uy = c.u0.size() > 1 && c.u0[1].valid() ? c.u0[1](f.x, f.y, t) : 0.0;
    return ux * f.nx + uy * f.ny;
  };

  switch (mode) {
    case FluxMode::inflow: {
      if (c.u0.empty() || c.rho0.empty())
        throw std::invalid_argument("inflow closure needs u0 and rho0");
      for (int fid : faces) {
        const Face& f = grid.faces[fid];
        if (!(eval_u0n(f) < 0.0))
          throw std::invalid_argument("inflow requires u0.n < 0; violated at face " +
                                      std::to_string(fid));
      }
      break;
    }
    case FluxMode::outflow_viscous: {
      if (c.u0.empty() || !c.T0.valid())
        throw std::invalid_argument("viscous outflow closure needs u0 and T0");
      for (int fid : faces) {
        const Face& f = grid.faces[fid];
        if (!(eval_u0n(f) > 0.0))
          throw std::invalid_argument("outflow requires u0.n > 0; violated at face " +
                                      std::to_string(fid));
      }
      break;
    }
    case FluxMode::outflow_inviscid: {
      if (!c.nu0.valid()) throw std::invalid_argument("inviscid outflow closure needs nu0");
      for (int fid : faces) {
        const Face& f = grid.faces[fid];
        if (!(c.nu0(f.x, f.y, t) > 0.0))
          throw std::invalid_argument("outflow requires nu0 > 0; violated at face " +
                                      std::to_string(fid));
      }
      break;
    }
    default:
      break;
  }
  return c;
}

std::vector<FaceState> trace_face_states(const ModelSpec& model, const State& st,
                                         const std::vector<int>& face_ids) {
  std::vector<BoundaryField> traces;
  traces.push_back(boundary_trace(st.u, face_ids));
  for (const auto& r : st.rho) traces.push_back(boundary_trace(r, face_ids));
  traces.push_back(boundary_trace(st.s, face_ids));
  if (st.tensor) traces.push_back(boundary_trace(*st.tensor, face_ids));

  const int ncomp = model.n_components();
  std::vector<FaceState> out(face_ids.size());
  for (size_t k = 0; k < face_ids.size(); ++k) {
    const Face& f = st.grid->faces[face_ids[k]];
    FaceState& fs = out[k];
    fs.face_id = face_ids[k];
    fs.dim = st.grid->dim;
    fs.x = f.x; fs.y = f.y; fs.nx = f.nx; fs.ny = f.ny; fs.da = f.da;
    fs.u[0] = traces[0].comp[0](k);
    fs.u[1] = st.grid->dim == 2 ? traces[0].comp[1](k) : 0.0;
    fs.rho.resize(ncomp);
    for (int c = 0; c < ncomp; ++c) fs.rho[c] = traces[1 + c].comp[0](k);
    fs.s = traces[1 + ncomp].comp[0](k);
    if (st.tensor) {
      const BoundaryField& tb = traces[2 + ncomp];
      fs.tensor.resize(tb.n_comp());
      for (int c = 0; c < tb.n_comp(); ++c) fs.tensor[c] = tb.comp[c](k);
    }
  }
  return out;
}

void face_momentum(const ModelSpec& model, const FaceState& fs, double m_out[2]) {
  PointVals pv;
  pv.x = fs.x;
  pv.y = fs.y;
  pv.u[0] = fs.u[0];
  pv.u[1] = fs.u[1];
  pv.rho = fs.rho;
  pv.s = fs.s;
  pv.tensor = fs.tensor;
  PointDerivs d = point_derivs(model, pv);
  m_out[0] = d.m[0];
  m_out[1] = d.m[1];
}

void face_stress_normal(const ModelSpec& model, const FaceState& fs, double sn_out[2]) {
  sn_out[0] = sn_out[1] = 0.0;
  if (!model.has_tensor() || fs.tensor.size() == 0) return;
  const int dim = fs.dim;
  PointVals pv;
  pv.x = fs.x;
  pv.y = fs.y;
  pv.u[0] = fs.u[0];
  pv.u[1] = fs.u[1];
  pv.rho = fs.rho;
  pv.s = fs.s;
  pv.tensor = fs.tensor;
  PointDerivs d = point_derivs(model, pv);

  PointTensor adv(dim, model.tensor->rank);
  for (size_t c = 0; c < adv.a.size(); ++c) adv.a[c] = fs.tensor[static_cast<int>(c)];
  PointTensor dl(dim, {model.tensor->rank.q, model.tensor->rank.p});
  {
    PointTensor raw(dim, model.tensor->rank);
    for (size_t c = 0; c < raw.a.size(); ++c) raw.a[c] = d.dl_dtensor[static_cast<int>(c)];
    dl = conjugate_transpose(raw);
  }
  PointTensor sigma = model.family == ModelFamily::mhd
                          ? outer_stress(adv, dl)
                          : advective_stress(adv, model.tensor->kind, dl);
  // (sigma . n)_d = sigma^c_d n_c
  const double n[2] = {fs.nx, fs.ny};
  for (int dd = 0; dd < dim; ++dd) {
    double acc = 0.0;
    for (int cc = 0; cc < dim; ++cc) acc += sigma.a[cc * dim + dd] * n[cc];
    sn_out[dd] = acc;
  }
}

namespace {

FaceFlux zero_flux(const ModelSpec& model, const FaceState& fs) {
  FaceFlux ff;
  ff.face_id = fs.face_id;
  ff.j_rho = Eigen::VectorXd::Zero(model.n_components());
  if (fs.tensor.size() > 0) ff.j_tensor = Eigen::VectorXd::Zero(fs.tensor.size());
  return ff;
}

}  // namespace

FluxValues fluxes_from_trace(const ModelSpec& model, const std::vector<FaceState>& traces) {
  FluxValues out;
  for (const FaceState& fs : traces) {
    FaceFlux ff = zero_flux(model, fs);
    const double un = fs.un();
    double m[2], sn[2];
    face_momentum(model, fs, m);
    face_stress_normal(model, fs, sn);
    ff.J[0] = -un * m[0] - sn[0];
    ff.J[1] = -un * m[1] - sn[1];
    for (int k = 0; k < fs.rho.size(); ++k) ff.j_rho[k] = -fs.rho[k] * un;
    ff.j_s = -fs.s * un;
    for (int c = 0; c < fs.tensor.size(); ++c) ff.j_tensor[c] = -fs.tensor[c] * un;
    out.faces.push_back(std::move(ff));
  }
  return out;
}

FluxValues evaluate_fluxes(const FluxClosure& closure, const ModelSpec& model,
                           const std::vector<FaceState>& traces, double t) {
  FluxValues out;
  switch (closure.mode) {
    case FluxMode::closed:
      for (const FaceState& fs : traces) out.faces.push_back(zero_flux(model, fs));
      break;

    case FluxMode::inflow:
      for (const FaceState& fs : traces) {
        FaceFlux ff = zero_flux(model, fs);
        FaceState presc = fs;  // keep coordinates/normal, override state
        presc.u[0] = closure.u0.size() > 0 && closure.u0[0].valid()
                         ? closure.u0[0](fs.x, fs.y, t) : 0.0;
        presc.u[1] = closure.u0.size() > 1 && closure.u0[1].valid()
                         ? closure.u0[1](fs.x, fs.y, t) : 0.0;
        for (int k = 0; k < presc.rho.size(); ++k)
          presc.rho[k] = k < static_cast<int>(closure.rho0.size()) && closure.rho0[k].valid()
                             ? closure.rho0[k](fs.x, fs.y, t) : 0.0;
        presc.s = closure.s0.valid() ? closure.s0(fs.x, fs.y, t) : 0.0;
        const double un0 = presc.un();
        double m[2];
        face_momentum(model, presc, m);
        ff.J[0] = -un0 * m[0];
        ff.J[1] = -un0 * m[1];
        for (int k = 0; k < presc.rho.size(); ++k) ff.j_rho[k] = -presc.rho[k] * un0;
        ff.j_s = -presc.s * un0;
        out.faces.push_back(std::move(ff));
      }
      break;

    case FluxMode::outflow_viscous:
      for (const FaceState& fs : traces) {
        FaceFlux ff = zero_flux(model, fs);
        FaceState presc = fs;  // density from the running state, u and T prescribed
        presc.u[0] = closure.u0.size() > 0 && closure.u0[0].valid()
                         ? closure.u0[0](fs.x, fs.y, t) : 0.0;
        presc.u[1] = closure.u0.size() > 1 && closure.u0[1].valid()
                         ? closure.u0[1](fs.x, fs.y, t) : 0.0;
        const double T0 = closure.T0(fs.x, fs.y, t);
        double rho_tot = fs.rho.sum();
        presc.s = entropy_from_rho_T(model.eos, rho_tot, T0);
        const double un0 = presc.un();
        double m[2];
        face_momentum(model, presc, m);
        ff.J[0] = -un0 * m[0];
        ff.J[1] = -un0 * m[1];
        for (int k = 0; k < fs.rho.size(); ++k) ff.j_rho[k] = -fs.rho[k] * un0;
        ff.j_s = -presc.s * un0;
        out.faces.push_back(std::move(ff));
      }
      break;

    case FluxMode::outflow_inviscid:
      for (const FaceState& fs : traces) {
        FaceFlux ff = zero_flux(model, fs);
        const double nu0 = closure.nu0(fs.x, fs.y, t);
        double m[2];
        face_momentum(model, fs, m);
        ff.J[0] = -nu0 * m[0];
        ff.J[1] = -nu0 * m[1];
        for (int k = 0; k < fs.rho.size(); ++k) ff.j_rho[k] = -fs.rho[k] * nu0;
        ff.j_s = -fs.s * nu0;
        out.faces.push_back(std::move(ff));
      }
      break;

    case FluxMode::free_open: {
      for (const FaceState& fs : traces) {
        double rho_tot = fs.rho.sum();
        if (!(rho_tot >= model.eos.rho_floor))
          throw std::domain_error("free_open closure with degenerate boundary density");
      }
      return fluxes_from_trace(model, traces);
    }

    case FluxMode::prescribed:
      for (const FaceState& fs : traces) {
        FaceFlux ff = zero_flux(model, fs);
        for (int c = 0; c < 2; ++c)
          if (c < static_cast<int>(closure.J_presc.size()) && closure.J_presc[c].valid())
            ff.J[c] = closure.J_presc[c](fs.x, fs.y, t);
        for (int k = 0; k < ff.j_rho.size(); ++k)
          if (k < static_cast<int>(closure.j_rho_presc.size()) && closure.j_rho_presc[k].valid())
            ff.j_rho[k] = closure.j_rho_presc[k](fs.x, fs.y, t);
        if (closure.j_s_presc.valid()) ff.j_s = closure.j_s_presc(fs.x, fs.y, t);
        for (int c = 0; c < ff.j_tensor.size(); ++c)
          if (c < static_cast<int>(closure.j_tensor_presc.size()) &&
              closure.j_tensor_presc[c].valid())
            ff.j_tensor[c] = closure.j_tensor_presc[c](fs.x, fs.y, t);
        out.faces.push_back(std::move(ff));
      }
      break;
  }
  return out;
}

}  // namespace openfluid
