#include "openfluid/dynamics.hpp"

#include <cmath>
#include <stdexcept>

#include "openfluid/ops.hpp"
#include "openfluid/tensor_algebra.hpp"

namespace openfluid {

namespace {

double eval_or0(const Expression& e, double x, double y, double t = 0.0) {
  return e.valid() ? e(x, y, t) : 0.0;
}

ExtArray product(const Grid& g, const ExtArray& a, const ExtArray& b) {
  ExtArray out(g.nx(), g.ny(), g.dim);
  const int gy = g.dim == 2 ? 2 : 0;
  for (int j = -gy; j < g.ny() + gy; ++j)
    for (int i = -2; i < g.nx() + 2; ++i) out.at(i, j) = a.at(i, j) * b.at(i, j);
  return out;
}

// Visits interior and side-ghost points. Corner ghosts are skipped:
// they are never filled and no single-axis centered stencil reads them.
template <class F>
void for_each_ext_point(const Grid& g, F&& fn) {
  const int gy = g.dim == 2 ? 2 : 0;
  for (int j = -gy; j < g.ny() + gy; ++j)
    for (int i = -2; i < g.nx() + 2; ++i) {
      const bool i_ghost = i < 0 || i >= g.nx();
      const bool j_ghost = j < 0 || j >= g.ny();
      if (i_ghost && j_ghost) continue;
      fn(i, j);
    }
}

// Compact 3-point Laplacian per axis, evaluated one ring into the
// ghosts (indices -1..n); the outermost ring stays zero.
ExtArray laplacian_ring(const Grid& g, const ExtArray& f) {
  ExtArray out(g.nx(), g.ny(), g.dim);
  const int jg = g.dim == 2 ? 1 : 0;
  for (int j = -jg; j < g.ny() + jg; ++j)
    for (int i = -1; i <= g.nx(); ++i) {
      double acc = (f.at(i + 1, j) - 2.0 * f.at(i, j) + f.at(i - 1, j)) /
                   (g.dx[0] * g.dx[0]);
      if (g.dim == 2)
        acc += (f.at(i, j + 1) - 2.0 * f.at(i, j) + f.at(i, j - 1)) /
               (g.dx[1] * g.dx[1]);
      out.at(i, j) = acc;
    }
  return out;
}

// Extends side-ghost data into the 2x2 ghost corners by quadratic
// extrapolation along x within each already-filled ghost row.
void fill_corners(const Grid& g, ExtArray& f) {
  if (g.dim != 2) return;
  for (int j : {-2, -1, g.ny(), g.ny() + 1})
    for (int side = 0; side < 2; ++side) {
      const int edge = side == 0 ? 0 : g.nx() - 1;
      const int inward = side == 0 ? 1 : -1;
      const double f1 = f.at(edge, j), f2 = f.at(edge + inward, j),
                   f3 = f.at(edge + 2 * inward, j);
      f.at(edge - inward, j) = 3.0 * f1 - 3.0 * f2 + f3;
      f.at(edge - 2 * inward, j) = 6.0 * f1 - 8.0 * f2 + 3.0 * f3;
    }
}

std::vector<double> face_values(const Grid& g, int patch, const Expression& e, double t) {
  std::vector<double> v;
  for (int fid : g.patch_faces(patch)) {
    const Face& f = g.faces[fid];
    v.push_back(eval_or0(e, f.x, f.y, t));
  }
  return v;
}

const FluxClosure* closure_for_patch(const std::vector<FluxClosure>& closures, int patch) {
  for (const auto& c : closures)
    if (c.patch == patch) return &c;
  return nullptr;
}

}  // namespace

GhostState apply_boundary_conditions(const ModelSpec& model, const State& st,
                                     const std::vector<FluxClosure>& closures, double t) {
  const Grid& g = *st.grid;
  GhostState gs;
  gs.grid = st.grid;
  gs.t = t;
  for (int c = 0; c < g.dim; ++c) gs.u.push_back(ExtArray::from_cells(g, st.u.comp[c]));
  for (const auto& r : st.rho) gs.rho.push_back(ExtArray::from_cells(g, r.comp[0]));
  gs.s = ExtArray::from_cells(g, st.s.comp[0]);
  if (st.tensor)
    for (int c = 0; c < st.tensor->n_comp(); ++c)
      gs.tensor.push_back(ExtArray::from_cells(g, st.tensor->comp[c]));
  gs.patch_modes.assign(g.patch_names.size(), FluxMode::closed);

  const int nsides = 2 * g.dim;
  for (int patch = 0; patch < nsides; ++patch) {
    const int axis = patch / 2;
    const int side = patch % 2;
    const FluxClosure* cl = closure_for_patch(closures, patch);
    const FluxMode mode = cl ? cl->mode : FluxMode::closed;
    gs.patch_modes[patch] = mode;

    // default: extrapolate everything, then pin per mode
    for (auto& a : gs.u) fill_extrapolate(g, a, axis, side);
    for (auto& a : gs.rho) fill_extrapolate(g, a, axis, side);
    fill_extrapolate(g, gs.s, axis, side);
    for (auto& a : gs.tensor) fill_extrapolate(g, a, axis, side);

    const auto faces = g.patch_faces(patch);
    const int nf = static_cast<int>(faces.size());
    const std::vector<double> zeros(nf, 0.0);

    switch (mode) {
      case FluxMode::closed:
        fill_pin_value(g, gs.u[axis], axis, side, zeros);
        break;

      case FluxMode::inflow: {
        for (int c = 0; c < g.dim; ++c) {
          std::vector<double> v = c < static_cast<int>(cl->u0.size())
                                      ? face_values(g, patch, cl->u0[c], t)
                                      : zeros;
          fill_pin_value(g, gs.u[c], axis, side, v);
        }
        for (size_t k = 0; k < gs.rho.size(); ++k) {
          std::vector<double> v = k < cl->rho0.size() ? face_values(g, patch, cl->rho0[k], t)
                                                      : zeros;
          if (model.family == ModelFamily::euler_korteweg)
            fill_pin_value_and_slope(g, gs.rho[k], axis, side, v, zeros);
          else
            fill_pin_value(g, gs.rho[k], axis, side, v);
        }
        fill_pin_value(g, gs.s, axis, side, face_values(g, patch, cl->s0, t));
        break;
      }

      case FluxMode::outflow_viscous: {
        for (int c = 0; c < g.dim; ++c) {
          std::vector<double> v = c < static_cast<int>(cl->u0.size())
                                      ? face_values(g, patch, cl->u0[c], t)
                                      : zeros;
          fill_pin_value(g, gs.u[c], axis, side, v);
        }
        // entropy pinned so that the trace temperature is T0, at the
        // extrapolated density trace
        std::vector<double> sv(nf);
        for (int k = 0; k < nf; ++k) {
          const Face& f = g.faces[faces[k]];
          double rho_tot = 0.0;
          for (auto& a : gs.rho) rho_tot += trace_at_face(g, a, f);
          sv[k] = entropy_from_rho_T(model.eos, rho_tot, cl->T0(f.x, f.y, t));
        }
        fill_pin_value(g, gs.s, axis, side, sv);
        break;
      }

      case FluxMode::outflow_inviscid: {
        // pin only u.n = nu0 (times the normal orientation)
        std::vector<double> v(nf);
        for (int k = 0; k < nf; ++k) {
          const Face& f = g.faces[faces[k]];
          const double n_axis = axis == 0 ? f.nx : f.ny;
          v[k] = cl->nu0(f.x, f.y, t) * n_axis;
        }
        fill_pin_value(g, gs.u[axis], axis, side, v);
        break;
      }

      case FluxMode::free_open:
        break;  // extrapolation only

      case FluxMode::prescribed: {
        // invert the boundary rows: u = J/j_rho - R, rho_k = -j_rho_k/(u.n)
        std::vector<double> ux(nf), uy(nf), sv(nf);
        std::vector<std::vector<double>> rv(gs.rho.size(), std::vector<double>(nf));
        bool pin_state = true;
        for (int k = 0; k < nf; ++k) {
          const Face& f = g.faces[faces[k]];
          double jr_tot = 0.0;
          std::vector<double> jr(gs.rho.size(), 0.0);
          for (size_t kk = 0; kk < gs.rho.size(); ++kk) {
            if (kk < cl->j_rho_presc.size()) jr[kk] = eval_or0(cl->j_rho_presc[kk], f.x, f.y, t);
            jr_tot += jr[kk];
          }
          if (std::abs(jr_tot) < 1e-14) {
            pin_state = false;
            break;
          }
          double J[2] = {0.0, 0.0};
          for (int c = 0; c < 2; ++c)
            if (c < static_cast<int>(cl->J_presc.size()))
              J[c] = eval_or0(cl->J_presc[c], f.x, f.y, t);
          double R[2] = {0.0, 0.0};
          for (size_t c = 0; c < model.R.size() && c < 2; ++c)
            R[c] = eval_or0(model.R[c], f.x, f.y);
          ux[k] = J[0] / jr_tot - R[0];
          uy[k] = J[1] / jr_tot - R[1];
          const double un = ux[k] * f.nx + uy[k] * f.ny;
          if (std::abs(un) < 1e-14)
            throw std::invalid_argument(
                "prescribed fluxes incompatible: j_rho != 0 but the implied u.n vanishes "
                "(J must satisfy J.n != 0) at face " + std::to_string(faces[k]));
          for (size_t kk = 0; kk < gs.rho.size(); ++kk) rv[kk][k] = -jr[kk] / un;
          sv[k] = -eval_or0(cl->j_s_presc, f.x, f.y, t) / un;
        }
        if (pin_state) {
          fill_pin_value(g, gs.u[0], axis, side, ux);
          if (g.dim == 2) fill_pin_value(g, gs.u[1], axis, side, uy);
          for (size_t kk = 0; kk < gs.rho.size(); ++kk)
            fill_pin_value(g, gs.rho[kk], axis, side, rv[kk]);
          fill_pin_value(g, gs.s, axis, side, sv);
        } else {
          fill_pin_value(g, gs.u[axis], axis, side, zeros);  // zero-flux limit
        }
        break;
      }
    }

    // Korteweg boundary row: (grad rho).n = 0, unless rho was pinned
    // above (inflow handles both constraints with the cubic fill).
    if (model.family == ModelFamily::euler_korteweg && mode != FluxMode::inflow &&
        !(mode == FluxMode::prescribed))
      fill_pin_normal_slope(g, gs.rho[0], axis, side, zeros);
  }
  for (auto& a : gs.u) fill_corners(g, a);
  for (auto& a : gs.rho) fill_corners(g, a);
  fill_corners(g, gs.s);
  for (auto& a : gs.tensor) fill_corners(g, a);
  return gs;
}

std::vector<FaceState> ghost_face_states(const ModelSpec& model, const GhostState& gs,
                                         const std::vector<int>& face_ids) {
  const Grid& g = *gs.grid;
  std::vector<FaceState> out(face_ids.size());
  for (size_t k = 0; k < face_ids.size(); ++k) {
    const Face& f = g.faces[face_ids[k]];
    FaceState& fs = out[k];
    fs.face_id = face_ids[k];
    fs.dim = g.dim;
    fs.x = f.x; fs.y = f.y; fs.nx = f.nx; fs.ny = f.ny; fs.da = f.da;
    fs.u[0] = trace_at_face(g, gs.u[0], f);
    fs.u[1] = g.dim == 2 ? trace_at_face(g, gs.u[1], f) : 0.0;
    fs.rho.resize(static_cast<int>(gs.rho.size()));
    for (size_t c = 0; c < gs.rho.size(); ++c)
      fs.rho[static_cast<int>(c)] = trace_at_face(g, gs.rho[c], f);
    fs.s = trace_at_face(g, gs.s, f);
    if (!gs.tensor.empty()) {
      fs.tensor.resize(static_cast<int>(gs.tensor.size()));
      for (size_t c = 0; c < gs.tensor.size(); ++c)
        fs.tensor[static_cast<int>(c)] = trace_at_face(g, gs.tensor[c], f);
    }
  }
  return out;
}

std::vector<BoundaryRowResiduals> boundary_residual_report(
    const ModelSpec& model, const GhostState& gs, const std::vector<FluxClosure>& closures) {
  const Grid& g = *gs.grid;
  std::vector<BoundaryRowResiduals> out;
  for (int patch = 0; patch < static_cast<int>(g.patch_names.size()); ++patch) {
    const auto faces = g.patch_faces(patch);
    auto traces = ghost_face_states(model, gs, faces);
    const FluxClosure* cl = closure_for_patch(closures, patch);
    FluxClosure closed;
    closed.patch = patch;
    FluxValues fv = evaluate_fluxes(cl ? *cl : closed, model, traces, gs.t);

    BoundaryRowResiduals r;
    r.patch = g.patch_names[patch];
    for (size_t k = 0; k < traces.size(); ++k) {
      const FaceState& fs = traces[k];
      const FaceFlux& ff = fv.faces[k];
      double m[2], sn[2];
      face_momentum(model, fs, m);
      face_stress_normal(model, fs, sn);
      const double un = fs.un();
      double sig_ext_n[2] = {0.0, 0.0};
      if (model.has_external_stress()) {
        const int dim = g.dim;
        const double n[2] = {fs.nx, fs.ny};
        for (int d = 0; d < dim; ++d)
          for (int c = 0; c < dim; ++c) {
            const size_t e = static_cast<size_t>(c * dim + d);
            if (e < model.sigma_ext.size())
              sig_ext_n[d] += eval_or0(model.sigma_ext[e], fs.x, fs.y, gs.t) * n[c];
          }
      }
      for (int c = 0; c < g.dim; ++c)
        r.momentum = std::max(r.momentum,
                              std::abs(un * m[c] + sn[c] + ff.J[c] - sig_ext_n[c]));
      for (int kk = 0; kk < fs.rho.size(); ++kk)
        r.mass = std::max(r.mass, std::abs(fs.rho[kk] * un + ff.j_rho[kk]));
      if (family_has_entropy(model.family))
        r.entropy = std::max(r.entropy, std::abs(fs.s * un + ff.j_s));
      for (int c = 0; c < fs.tensor.size(); ++c)
        r.tensor = std::max(r.tensor, std::abs(fs.tensor[c] * un + ff.j_tensor[c]));
      if (model.family == ModelFamily::euler_korteweg)
        r.grad_rho_n = std::max(r.grad_rho_n,
                                std::abs(trace_normal_slope(g, gs.rho[0], g.faces[fs.face_id])));
    }
    out.push_back(std::move(r));
  }
  return out;
}

Field assemble_stress(const Field& advected, const Field& dl_dadv) {
  if (advected.rank.order() > 2) throw std::invalid_argument("assemble_stress: p+q <= 2");
  if (dl_dadv.rank.p != advected.rank.q || dl_dadv.rank.q != advected.rank.p)
    throw std::invalid_argument("assemble_stress: dl_dadv must have the conjugate rank");
  Field sigma(advected.grid, {1, 1}, FieldKind::density);
  for (int cell = 0; cell < advected.grid->n_cells(); ++cell) {
    PointTensor adv = tensor_at(advected, cell);
    PointTensor dl = tensor_at(dl_dadv, cell);
    set_tensor(sigma, cell, advective_stress(adv, advected.kind, dl));
  }
  return sigma;
}

Field assemble_stress_mhd(const Field& B, const Field& dl_dB) {
  Field sigma(B.grid, {1, 1}, FieldKind::density);
  for (int cell = 0; cell < B.grid->n_cells(); ++cell)
    set_tensor(sigma, cell, outer_stress(tensor_at(B, cell), tensor_at(dl_dB, cell)));
  return sigma;
}

Field korteweg_mu_correction(const ModelSpec& model, const GhostState& gs) {
  Field out = Field::scalar(gs.grid, FieldKind::function);
  if (model.family != ModelFamily::euler_korteweg) return out;
  const Grid& g = *gs.grid;
  ExtArray lap = laplacian_ring(g, gs.rho[0]);
  out.comp[0] = model.lambda * lap.interior(g);
  return out;
}

std::vector<double> korteweg_mu_correction_at_faces(const ModelSpec& model,
                                                    const GhostState& gs,
                                                    const std::vector<int>& face_ids) {
  std::vector<double> out(face_ids.size(), 0.0);
  if (model.family != ModelFamily::euler_korteweg) return out;
  const Grid& g = *gs.grid;
  ExtArray lap = laplacian_ring(g, gs.rho[0]);
  for (size_t k = 0; k < face_ids.size(); ++k)
    out[k] = model.lambda * trace_at_face(g, lap, g.faces[face_ids[k]]);
  return out;
}

Tendency interior_tendency(const ModelSpec& model, const State& st, const BulkSources& bulk,
                           const GhostState& gs) {
  const Grid& g = *st.grid;
  const int dim = g.dim;
  const int ncomp = model.n_components();
  const int ntens = static_cast<int>(gs.tensor.size());

  // --- derived quantities on the extended arrays -------------------------
  std::vector<ExtArray> m_ext(dim, ExtArray(g.nx(), g.ny(), dim));       // dl/du
  std::vector<ExtArray> m0_ext(dim, ExtArray(g.nx(), g.ny(), dim));      // rho_tot * u
  std::vector<ExtArray> lrho0_ext(ncomp, ExtArray(g.nx(), g.ny(), dim)); // dl/drho_k - R.u
  ExtArray ls_ext(g.nx(), g.ny(), dim);
  std::vector<ExtArray> dlt_ext(ntens, ExtArray(g.nx(), g.ny(), dim));   // dl/dtensor, raw layout
  std::vector<ExtArray> R_ext(dim, ExtArray(g.nx(), g.ny(), dim));
  const bool rotating = family_has_rotation(model.family) && !model.R.empty();

  PointVals pv;
  pv.rho.resize(ncomp);
  if (ntens > 0) pv.tensor.resize(ntens);
  PointDerivs pd;

  for_each_ext_point(g, [&](int i, int j) {
    pv.x = g.lo[0] + (i + 0.5) * g.dx[0];
    pv.y = dim == 2 ? g.lo[1] + (j + 0.5) * g.dx[1] : 0.0;
    pv.u[0] = gs.u[0].at(i, j);
    pv.u[1] = dim == 2 ? gs.u[1].at(i, j) : 0.0;
    double rho_tot = 0.0;
    for (int k = 0; k < ncomp; ++k) {
      pv.rho[k] = gs.rho[k].at(i, j);
      rho_tot += pv.rho[k];
    }
    pv.s = gs.s.at(i, j);
    for (int c = 0; c < ntens; ++c) pv.tensor[c] = gs.tensor[c].at(i, j);

    point_derivs_into(model, pv, pd);
    double R[2] = {0.0, 0.0};
    if (rotating)
      for (int c = 0; c < dim && c < static_cast<int>(model.R.size()); ++c)
        R[c] = eval_or0(model.R[c], pv.x, pv.y);
    const double Ru = R[0] * pv.u[0] + R[1] * pv.u[1];
    for (int c = 0; c < dim; ++c) {
      m_ext[c].at(i, j) = pd.m[c];
      m0_ext[c].at(i, j) = rho_tot * pv.u[c];
      R_ext[c].at(i, j) = R[c];
    }
    for (int k = 0; k < ncomp; ++k) lrho0_ext[k].at(i, j) = pd.dl_drho[k] - Ru;
    ls_ext.at(i, j) = pd.dl_ds;
    for (int c = 0; c < ntens; ++c) dlt_ext[c].at(i, j) = pd.dl_dtensor[c];
  });

  // velocity gradient at interior cells
  std::vector<Eigen::ArrayXd> du(dim * dim);
  for (int c = 0; c < dim; ++c)
    for (int d = 0; d < dim; ++d) du[c * dim + d] = partial_centered(g, gs.u[d], c);
  Eigen::ArrayXd divu = du[0];
  divu = Eigen::ArrayXd::Zero(g.n_cells());
  for (int c = 0; c < dim; ++c) divu += du[c * dim + c];

  Tendency td;
  td.du_dt = Field::vector(st.grid, FieldKind::function);
  td.dm_dt = Field(st.grid, one_form_rank, FieldKind::density);
  td.drho_dt.assign(ncomp, Field::scalar(st.grid, FieldKind::density));
  td.ds_dt = Field::scalar(st.grid, FieldKind::density);

  // --- continuity and entropy: flux-form advection -----------------------
  // closed walls odd-reflect the normal advective flux so face fluxes
  // vanish exactly and the cell sums telescope to machine zero
  auto advect_density = [&](const ExtArray& q) {
    Eigen::ArrayXd div_flux = Eigen::ArrayXd::Zero(g.n_cells());
    for (int c = 0; c < dim; ++c) {
      ExtArray flux = product(g, gs.u[c], q);
      for (int patch = 0; patch < 2 * dim; ++patch)
        if (gs.patch_modes[patch] == FluxMode::closed && patch / 2 == c)
          fill_odd_reflect(g, flux, patch / 2, patch % 2);
      div_flux += partial_centered(g, flux, c);
    }
    return div_flux;
  };

  Eigen::ArrayXd div_flux_tot = Eigen::ArrayXd::Zero(g.n_cells());
  for (int k = 0; k < ncomp; ++k) {
    Eigen::ArrayXd divf = advect_density(gs.rho[k]);
    div_flux_tot += divf;
    td.drho_dt[k].comp[0] = -divf + bulk.theta_rho[k].comp[0];
  }
  if (family_has_entropy(model.family))
    td.ds_dt.comp[0] = -advect_density(gs.s) + bulk.theta_s.comp[0];

  // --- momentum ----------------------------------------------------------
  // dm/dt = -L_u(rho_tot u) + sum_k rho_k grad(lrho0_k) + s grad(ls)
  //         + R-group (rotation) + tensor terms + b + div sigma_ext
  std::vector<Eigen::ArrayXd> dm(dim);
  for (int i = 0; i < dim; ++i) {
    Eigen::ArrayXd acc = -m0_ext[i].interior(g) * divu;
    for (int c = 0; c < dim; ++c) acc -= gs.u[c].interior(g) * partial_centered(g, m0_ext[i], c);
    for (int j = 0; j < dim; ++j) acc -= m0_ext[j].interior(g) * du[i * dim + j];
    dm[i] = acc;
  }

  // pressure-like terms
  Field mu_corr = korteweg_mu_correction(model, gs);
  for (int k = 0; k < ncomp; ++k) {
    Eigen::ArrayXd rho_int = gs.rho[k].interior(g);
    if (model.family == ModelFamily::euler_korteweg) {
      // rho grad(lrho + lambda lap rho): assemble the potential on the
      // extended ring so its gradient is centered at boundary cells too
      ExtArray pot(g.nx(), g.ny(), g.dim);
      ExtArray lap = laplacian_ring(g, gs.rho[0]);
      const int jg = dim == 2 ? 1 : 0;
      for (int j = -jg; j < g.ny() + jg; ++j)
        for (int i = -1; i <= g.nx(); ++i)
          pot.at(i, j) = lrho0_ext[k].at(i, j) + model.lambda * lap.at(i, j);
      for (int i = 0; i < dim; ++i) dm[i] += rho_int * partial_centered(g, pot, i);
    } else {
      for (int i = 0; i < dim; ++i) dm[i] += rho_int * partial_centered(g, lrho0_ext[k], i);
    }
  }
  if (family_has_entropy(model.family)) {
    Eigen::ArrayXd s_int = gs.s.interior(g);
    for (int i = 0; i < dim; ++i) dm[i] += s_int * partial_centered(g, ls_ext, i);
  }

  // rotation group: -rho_tot (curl R) x u - R div(rho_tot u), written so
  // a discretely curl-free gauge shift of R cancels to round-off
  if (rotating) {
    Eigen::ArrayXd rho_tot_int = gs.rho[0].interior(g);
    for (int k = 1; k < ncomp; ++k) rho_tot_int += gs.rho[k].interior(g);
    if (dim == 2) {
      Eigen::ArrayXd curlR =
          partial_centered(g, R_ext[1], 0) - partial_centered(g, R_ext[0], 1);
      dm[0] += rho_tot_int * curlR * gs.u[1].interior(g);
      dm[1] -= rho_tot_int * curlR * gs.u[0].interior(g);
    }
    for (int i = 0; i < dim; ++i) dm[i] -= R_ext[i].interior(g) * div_flux_tot;
  }

  // advected-tensor contributions
  if (ntens > 0) {
    td.dtensor_dt = Field::zeros(st.grid, st.tensor->rank, st.tensor->kind);
    if (model.family == ModelFamily::mhd) {
      // dB/dt = -curl(B x u), dm += B.grad(lB) - div(B (x) lB)
      ExtArray psi(g.nx(), g.ny(), dim);
      for_each_ext_point(g, [&](int i, int j) {
        psi.at(i, j) = gs.tensor[0].at(i, j) * gs.u[1].at(i, j) -
                       gs.tensor[1].at(i, j) * gs.u[0].at(i, j);
      });
      td.dtensor_dt->comp[0] = -partial_centered(g, psi, 1);
      td.dtensor_dt->comp[1] = partial_centered(g, psi, 0);
      // dm_d += sum_a B_a d_d(lB_a) - d_c(B_c lB_d); the first term
      // contracts the tensor slots with the gradient index free
      for (int d = 0; d < dim; ++d) {
        Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(g.n_cells());
        for (int a = 0; a < dim; ++a)
          acc += gs.tensor[a].interior(g) * partial_centered(g, dlt_ext[a], d);
        for (int c = 0; c < dim; ++c) {
          ExtArray sig_cd = product(g, gs.tensor[c], dlt_ext[d]);
          acc -= partial_centered(g, sig_cd, c);
        }
        dm[d] += acc;
      }
    } else {
      // generic tensor density / field branch
      const TensorRank rank = st.tensor->rank;
      const FieldKind kind = st.tensor->kind;
      // transport + hat:grad u
      std::vector<Eigen::ArrayXd> lie(ntens);
      if (kind == FieldKind::density) {
        for (int k = 0; k < ntens; ++k) {
          Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(g.n_cells());
          for (int c = 0; c < dim; ++c) {
            ExtArray flux = product(g, gs.u[c], gs.tensor[k]);
            for (int patch = 0; patch < 2 * dim; ++patch)
              if (gs.patch_modes[patch] == FluxMode::closed && patch / 2 == c)
                fill_odd_reflect(g, flux, patch / 2, patch % 2);
            acc += partial_centered(g, flux, c);
          }
          lie[k] = acc;
        }
      } else {
        for (int k = 0; k < ntens; ++k) {
          Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(g.n_cells());
          for (int c = 0; c < dim; ++c)
            acc += gs.u[c].interior(g) * partial_centered(g, gs.tensor[k], c);
          lie[k] = acc;
        }
      }
      // hat contraction pointwise at interior cells
      PointTensor tp(dim, rank);
      for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
          const int cell = g.flat(i, j);
          for (int k = 0; k < ntens; ++k) tp.a[k] = gs.tensor[k].at(i, j);
          PointTensor h = hat(tp);
          const int p = rank.p, q = rank.q;
          for (int k = 0; k < ntens; ++k) {
            std::vector<int> idx(p + q);
            int rem = k;
            for (int s = p + q - 1; s >= 0; --s) {
              idx[s] = rem % dim;
              rem /= dim;
            }
            std::vector<int> hid(p + q + 2);
            for (int s = 0; s < p; ++s) hid[s] = idx[s];
            for (int s = 0; s < q; ++s) hid[p + 1 + s] = idx[p + s];
            double acc = 0.0;
            for (int c = 0; c < dim; ++c)
              for (int d = 0; d < dim; ++d) {
                hid[p] = c;
                hid[p + q + 1] = d;
                acc += h.at(hid) * du[c * dim + d](cell);
              }
            lie[k](cell) += acc;
          }
        }
      for (int k = 0; k < ntens; ++k) {
        td.dtensor_dt->comp[k] = -lie[k];
        if (bulk.theta_tensor) td.dtensor_dt->comp[k] += bulk.theta_tensor->comp[k];
      }

      // momentum: + tensor : grad(dl_dtensor) - div sigma
      for (int d = 0; d < dim; ++d) {
        Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(g.n_cells());
        for (int k = 0; k < ntens; ++k)
          acc += gs.tensor[k].interior(g) * partial_centered(g, dlt_ext[k], d);
        dm[d] += acc;
      }
      // sigma on the extended arrays, pointwise
      std::vector<ExtArray> sig(dim * dim, ExtArray(g.nx(), g.ny(), dim));
      PointTensor raw(dim, rank);
      for_each_ext_point(g, [&](int i, int j) {
        for (int k = 0; k < ntens; ++k) raw.a[k] = dlt_ext[k].at(i, j);
        PointTensor dl = conjugate_transpose(raw);
        PointTensor adv(dim, rank);
        for (int k = 0; k < ntens; ++k) adv.a[k] = gs.tensor[k].at(i, j);
        PointTensor s2 = advective_stress(adv, kind, dl);
        for (int c = 0; c < dim * dim; ++c) sig[c].at(i, j) = s2.a[c];
      });
      for (int d = 0; d < dim; ++d)
        for (int c = 0; c < dim; ++c) dm[d] -= partial_centered(g, sig[c * dim + d], c);
    }
    if (model.family == ModelFamily::mhd && bulk.theta_tensor)
      for (int k = 0; k < ntens; ++k) td.dtensor_dt->comp[k] += bulk.theta_tensor->comp[k];
  }

  // bulk momentum source and external stress
  for (int i = 0; i < dim; ++i) dm[i] += bulk.b.comp[i];
  if (model.has_external_stress()) {
    std::vector<ExtArray> sig(dim * dim, ExtArray(g.nx(), g.ny(), dim));
    for_each_ext_point(g, [&](int i, int j) {
      const double x = g.lo[0] + (i + 0.5) * g.dx[0];
      const double y = dim == 2 ? g.lo[1] + (j + 0.5) * g.dx[1] : 0.0;
      for (int c = 0; c < dim; ++c)
        for (int d = 0; d < dim; ++d) {
          const size_t e = static_cast<size_t>(c * dim + d);
          if (e < model.sigma_ext.size())
            sig[c * dim + d].at(i, j) = eval_or0(model.sigma_ext[e], x, y, gs.t);
        }
    });
    for (int d = 0; d < dim; ++d)
      for (int c = 0; c < dim; ++c) dm[d] += partial_centered(g, sig[c * dim + d], c);
  }

  for (int i = 0; i < dim; ++i) td.dm_dt.comp[i] = dm[i];

  // --- velocity form: dm = rho du + (u+R) drho_tot  ----------------------
  Eigen::ArrayXd rho_tot_int = gs.rho[0].interior(g);
  for (int k = 1; k < ncomp; ++k) rho_tot_int += gs.rho[k].interior(g);
  Eigen::ArrayXd drho_tot = td.drho_dt[0].comp[0];
  for (int k = 1; k < ncomp; ++k) drho_tot += td.drho_dt[k].comp[0];
  for (int i = 0; i < dim; ++i) {
    Eigen::ArrayXd carried = gs.u[i].interior(g);
    if (rotating) carried += R_ext[i].interior(g);
    td.du_dt.comp[i] = (td.dm_dt.comp[i] - carried * drho_tot) / rho_tot_int;
  }

  if (!td.du_dt.all_finite() || !td.dm_dt.all_finite() || !td.ds_dt.all_finite())
    throw std::runtime_error("non-finite tendency (NaN/Inf detected)");
  for (const auto& f : td.drho_dt)
    if (!f.all_finite()) throw std::runtime_error("non-finite tendency (NaN/Inf detected)");
  if (td.dtensor_dt && !td.dtensor_dt->all_finite())
    throw std::runtime_error("non-finite tendency (NaN/Inf detected)");
  return td;
}

Tendency compute_tendency(const ModelSpec& model, const State& st, const BulkSourceSpec& bulk,
                          const std::vector<FluxClosure>& closures, double t) {
  GhostState gs = apply_boundary_conditions(model, st, closures, t);
  BulkSources bs = evaluate_bulk(bulk, st.grid, model, t);
  return interior_tendency(model, st, bs, gs);
}

namespace {

State axpy(const State& y, double a, const Tendency& k, const ModelSpec& model) {
  State out = y;
  for (int c = 0; c < y.grid->dim; ++c) out.u.comp[c] += a * k.du_dt.comp[c];
  for (size_t kk = 0; kk < y.rho.size(); ++kk)
    out.rho[kk].comp[0] += a * k.drho_dt[kk].comp[0];
  out.s.comp[0] += a * k.ds_dt.comp[0];
  if (out.tensor && k.dtensor_dt)
    for (int c = 0; c < out.tensor->n_comp(); ++c)
      out.tensor->comp[c] += a * k.dtensor_dt->comp[c];
  (void)model;
  return out;
}

}  // namespace

State rk4_step(const ModelSpec& model, const State& st, const BulkSourceSpec& bulk,
               const std::vector<FluxClosure>& closures, double dt, const StepControls& ctl) {
  const double vmax = max_signal_speed(model, st);
  const double h = st.grid->dim == 2 ? std::min(st.grid->dx[0], st.grid->dx[1])
                                     : st.grid->dx[0];
  if (vmax > 0.0 && dt > ctl.cfl * h / vmax) {
    if (ctl.hard_cfl_error)
      throw std::runtime_error("CFL violation: dt = " + std::to_string(dt) +
                               " exceeds " + std::to_string(ctl.cfl * h / vmax));
  }

  Tendency k1 = compute_tendency(model, st, bulk, closures, st.t);
  State s2 = axpy(st, 0.5 * dt, k1, model);
  s2.t = st.t + 0.5 * dt;
  Tendency k2 = compute_tendency(model, s2, bulk, closures, s2.t);
  State s3 = axpy(st, 0.5 * dt, k2, model);
  s3.t = st.t + 0.5 * dt;
  Tendency k3 = compute_tendency(model, s3, bulk, closures, s3.t);
  State s4 = axpy(st, dt, k3, model);
  s4.t = st.t + dt;
  Tendency k4 = compute_tendency(model, s4, bulk, closures, s4.t);

  State out = st;
  auto add = [&](Field& dst, const Field& a, const Field& b, const Field& c, const Field& d) {
    for (int cc = 0; cc < dst.n_comp(); ++cc)
      dst.comp[cc] += (dt / 6.0) * (a.comp[cc] + 2.0 * b.comp[cc] + 2.0 * c.comp[cc] + d.comp[cc]);
  };
  add(out.u, k1.du_dt, k2.du_dt, k3.du_dt, k4.du_dt);
  for (size_t kk = 0; kk < out.rho.size(); ++kk)
    add(out.rho[kk], k1.drho_dt[kk], k2.drho_dt[kk], k3.drho_dt[kk], k4.drho_dt[kk]);
  add(out.s, k1.ds_dt, k2.ds_dt, k3.ds_dt, k4.ds_dt);
  if (out.tensor)
    add(*out.tensor, *k1.dtensor_dt, *k2.dtensor_dt, *k3.dtensor_dt, *k4.dtensor_dt);
  out.t = st.t + dt;
  if (!out.all_finite()) throw std::runtime_error("non-finite state after step");
  return out;
}

}  // namespace openfluid
