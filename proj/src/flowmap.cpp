#include "openfluid/flowmap.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "openfluid/dynamics.hpp"
#include "openfluid/ops.hpp"

namespace openfluid {

FlowMap integrate_flow_map(const VelocitySampler& u, const std::vector<Eigen::Vector2d>& labels,
                           int dim, double t0, double t1, double dt) {
  FlowMap fm;
  fm.dim = dim;
  fm.labels = labels;
  fm.positions = labels;
  fm.jacobian.assign(labels.size(), 1.0);
  fm.t0 = t0;
  fm.t1 = t1;

  const int nsteps = std::max(1, static_cast<int>(std::ceil((t1 - t0) / dt - 1e-12)));
  const double h = (t1 - t0) / nsteps;

  for (size_t j = 0; j < labels.size(); ++j) {
    double x = labels[j][0], y = labels[j][1], J = 1.0;
    double t = t0;
    for (int n = 0; n < nsteps; ++n) {
      // RK4 on (x, y, J)
      double k[4][3];
      auto rhs = [&](double tt, double xx, double yy, double JJ, double out[3]) {
        double v[2];
        u.velocity(tt, xx, yy, v);
        out[0] = v[0];
        out[1] = v[1];
        out[2] = u.divergence(tt, xx, yy) * JJ;
      };
      rhs(t, x, y, J, k[0]);
      rhs(t + 0.5 * h, x + 0.5 * h * k[0][0], y + 0.5 * h * k[0][1], J + 0.5 * h * k[0][2], k[1]);
      rhs(t + 0.5 * h, x + 0.5 * h * k[1][0], y + 0.5 * h * k[1][1], J + 0.5 * h * k[1][2], k[2]);
      rhs(t + h, x + h * k[2][0], y + h * k[2][1], J + h * k[2][2], k[3]);
      x += (h / 6.0) * (k[0][0] + 2 * k[1][0] + 2 * k[2][0] + k[3][0]);
      y += (h / 6.0) * (k[0][1] + 2 * k[1][1] + 2 * k[2][1] + k[3][1]);
      J += (h / 6.0) * (k[0][2] + 2 * k[1][2] + 2 * k[2][2] + k[3][2]);
      t += h;
    }
    if (!(J > 0.0))
      throw std::runtime_error("flow map lost orientation (J <= 0) at label " +
                               std::to_string(j));
    fm.positions[j] = Eigen::Vector2d(x, y);
    fm.jacobian[j] = J;
  }
  return fm;
}

Pushforward pushforward_density(const std::vector<double>& varrho, const FlowMap& fm,
                                GridPtr grid, int min_labels_per_cell) {
  Pushforward out;
  out.density = Field::scalar(grid, FieldKind::density);
  const Grid& g = *grid;

  if (g.dim == 1) {
    // sort labels by mapped position once, then fit a local line per cell
    std::vector<int> order(fm.positions.size());
    for (size_t j = 0; j < order.size(); ++j) order[j] = static_cast<int>(j);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return fm.positions[a][0] < fm.positions[b][0]; });
    for (int i = 0; i < g.nx(); ++i) {
      const double xc = g.cell_x(i);
      const double rad = g.dx[0];
      double sw = 0, swx = 0, swxx = 0, swf = 0, swxf = 0;
      int count = 0;
      for (int jo : order) {
        const double d = fm.positions[jo][0] - xc;
        if (std::abs(d) > rad) continue;
        const double f = varrho[jo] / fm.jacobian[jo];
        sw += 1;
        swx += d;
        swxx += d * d;
        swf += f;
        swxf += d * f;
        ++count;
      }
      if (count < min_labels_per_cell) {
        out.undersampled_cells.push_back(i);
        if (count == 0) continue;
      }
      const double det = sw * swxx - swx * swx;
      if (std::abs(det) > 1e-14 && count >= 2)
        out.density.comp[0](i) = (swf * swxx - swxf * swx) / det;
      else
        out.density.comp[0](i) = swf / sw;
    }
    return out;
  }

  // 2D: plane fit over the labels landing within a cell-sized radius
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      const double xc = g.cell_x(i), yc = g.cell_y(j);
      const double rad = std::max(g.dx[0], g.dx[1]);
      Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
      Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
      int count = 0;
      for (size_t jo = 0; jo < fm.positions.size(); ++jo) {
        const double dx = fm.positions[jo][0] - xc;
        const double dy = fm.positions[jo][1] - yc;
        if (std::abs(dx) > rad || std::abs(dy) > rad) continue;
        const double f = varrho[jo] / fm.jacobian[jo];
        Eigen::Vector3d phi(1.0, dx, dy);
        A += phi * phi.transpose();
        rhs += f * phi;
        ++count;
      }
      if (count < min_labels_per_cell) out.undersampled_cells.push_back(g.flat(i, j));
      if (count >= 3) {
        Eigen::Vector3d c = A.ldlt().solve(rhs);
        out.density.comp[0](g.flat(i, j)) = c[0];
      } else if (count > 0) {
        out.density.comp[0](g.flat(i, j)) = rhs[0] / count;
      }
    }
  return out;
}

VelocitySampler sampler_from_frames(const EulerianFrames& frames, double margin) {
  if (frames.times.size() < 2) throw std::invalid_argument("need at least two stored frames");
  GridPtr grid = frames.grid;
  // precompute divergence fields per frame
  auto divs = std::make_shared<std::vector<Field>>();
  for (const auto& uf : frames.u) divs->push_back(divergence(uf));

  auto frames_ptr = std::make_shared<EulerianFrames>(frames);

  auto interp1d = [grid, margin](const Field& f, int comp, double x) {
    const Grid& g = *grid;
    const double lo = g.lo[0], hi = g.hi[0];
    if (x < lo - margin || x > hi + margin)
      throw std::runtime_error("label exited the stored velocity's bounding box");
    const double xc = std::clamp(x, lo + 0.5 * g.dx[0], hi - 0.5 * g.dx[0]);
    const double fi = (xc - lo) / g.dx[0] - 0.5;
    const int i0 = std::clamp(static_cast<int>(std::floor(fi)), 0, g.nx() - 2);
    const double w = fi - i0;
    return (1.0 - w) * f.comp[comp](i0) + w * f.comp[comp](i0 + 1);
  };

  VelocitySampler vs;
  vs.velocity = [frames_ptr, interp1d](double t, double x, double, double out[2]) {
    const auto& fr = *frames_ptr;
    const auto it = std::upper_bound(fr.times.begin(), fr.times.end(), t);
    int k1 = std::clamp(static_cast<int>(it - fr.times.begin()), 1,
                        static_cast<int>(fr.times.size()) - 1);
    const int k0 = k1 - 1;
    const double span = fr.times[k1] - fr.times[k0];
    const double w = span > 0 ? std::clamp((t - fr.times[k0]) / span, 0.0, 1.0) : 0.0;
    out[0] = (1.0 - w) * interp1d(fr.u[k0], 0, x) + w * interp1d(fr.u[k1], 0, x);
    out[1] = 0.0;
  };
  vs.divergence = [frames_ptr, divs, interp1d](double t, double x, double) {
    const auto& fr = *frames_ptr;
    const auto it = std::upper_bound(fr.times.begin(), fr.times.end(), t);
    int k1 = std::clamp(static_cast<int>(it - fr.times.begin()), 1,
                        static_cast<int>(fr.times.size()) - 1);
    const int k0 = k1 - 1;
    const double span = fr.times[k1] - fr.times[k0];
    const double w = span > 0 ? std::clamp((t - fr.times[k0]) / span, 0.0, 1.0) : 0.0;
    return (1.0 - w) * interp1d((*divs)[k0], 0, x) + w * interp1d((*divs)[k1], 0, x);
  };
  return vs;
}

MaterialCheck equivalence_check_1d(const ModelSpec& model, const EulerianFrames& frames,
                                   const BulkSourceSpec& bulk,
                                   const std::vector<FluxClosure>& closures,
                                   const std::function<double(double)>& rho_initial_extended,
                                   double label_spacing, double margin, double dt) {
  if (frames.grid->dim != 1)
    throw std::invalid_argument("material equivalence check is 1D");
  const Grid& g = *frames.grid;
  const double t0 = frames.times.front(), t1 = frames.times.back();
  // the sampler band must also cover labels drifting past the seeds
  double u_max = 0.0;
  for (const auto& uf : frames.u) u_max = std::max(u_max, uf.max_abs());
  VelocitySampler vs = sampler_from_frames(frames, margin + (t1 - t0) * u_max + g.dx[0]);

  // seed labels across the domain plus the margin band
  std::vector<Eigen::Vector2d> labels;
  for (double x = g.lo[0] - margin + 0.5 * label_spacing; x < g.hi[0] + margin;
       x += label_spacing)
    labels.emplace_back(x, 0.0);

  // co-integrate (phi, J, varrho) with material source Theta = theta(phi) J
  const int nsteps = std::max(1, static_cast<int>(std::ceil((t1 - t0) / dt - 1e-12)));
  const double h = (t1 - t0) / nsteps;
  const Expression* theta = !bulk.theta_rho.empty() && bulk.theta_rho[0].valid()
                                ? &bulk.theta_rho[0]
                                : nullptr;

  std::vector<double> phi(labels.size()), J(labels.size(), 1.0), varrho(labels.size());
  std::vector<double> varrho0(labels.size());
  for (size_t j = 0; j < labels.size(); ++j) {
    phi[j] = labels[j][0];
    varrho[j] = rho_initial_extended(labels[j][0]);
    varrho0[j] = varrho[j];
  }

  for (size_t j = 0; j < labels.size(); ++j) {
    double x = phi[j], Jj = 1.0, r = varrho[j], t = t0;
    auto rhs = [&](double tt, double xx, double JJ, double out[3]) {
      double v[2];
      vs.velocity(tt, xx, 0.0, v);
      out[0] = v[0];
      out[1] = vs.divergence(tt, xx, 0.0) * JJ;
      // the material source lives on phi^{-1}(Omega): labels outside the
      // domain carry no source
      const bool inside = xx >= g.lo[0] && xx <= g.hi[0];
      out[2] = theta && inside ? (*theta)(xx, 0.0, tt) * JJ : 0.0;
    };
    for (int n = 0; n < nsteps; ++n) {
      double k[4][3];
      rhs(t, x, Jj, k[0]);
      rhs(t + 0.5 * h, x + 0.5 * h * k[0][0], Jj + 0.5 * h * k[0][1], k[1]);
      rhs(t + 0.5 * h, x + 0.5 * h * k[1][0], Jj + 0.5 * h * k[1][1], k[2]);
      rhs(t + h, x + h * k[2][0], Jj + h * k[2][1], k[3]);
      x += (h / 6.0) * (k[0][0] + 2 * k[1][0] + 2 * k[2][0] + k[3][0]);
      Jj += (h / 6.0) * (k[0][1] + 2 * k[1][1] + 2 * k[2][1] + k[3][1]);
      r += (h / 6.0) * (k[0][2] + 2 * k[1][2] + 2 * k[2][2] + k[3][2]);
      t += h;
    }
    phi[j] = x;
    J[j] = Jj;
    varrho[j] = r;
  }

  FlowMap fm;
  fm.dim = 1;
  fm.labels = labels;
  fm.positions.resize(labels.size());
  for (size_t j = 0; j < labels.size(); ++j) fm.positions[j] = Eigen::Vector2d(phi[j], 0.0);
  fm.jacobian = J;
  fm.t0 = t0;
  fm.t1 = t1;

  MaterialCheck mc;
  Pushforward pf = pushforward_density(varrho, fm, frames.grid);
  mc.undersampled_cells = static_cast<int>(pf.undersampled_cells.size());
  const Field& rho_eul = frames.rho.back();
  mc.max_density_error = (pf.density.comp[0] - rho_eul.comp[0]).abs().maxCoeff();

  // material mass bookkeeping over phi^{-1}(Omega)
  auto material_mass = [&](const std::vector<double>& pos, const std::vector<double>& r) {
    double m = 0.0;
    for (size_t j = 0; j < pos.size(); ++j)
      if (pos[j] >= g.lo[0] && pos[j] <= g.hi[0]) m += r[j] * label_spacing;
    return m;
  };
  std::vector<double> pos0(labels.size());
  for (size_t j = 0; j < labels.size(); ++j) pos0[j] = labels[j][0];
  mc.material_mass_change = material_mass(phi, varrho) - material_mass(pos0, varrho0);

  // time-integrated Eulerian bulk + boundary columns (trapezoid on frames)
  double expected = 0.0;
  std::vector<double> col(frames.times.size(), 0.0);
  for (size_t k = 0; k < frames.times.size(); ++k) {
    State st = State::zeros(frames.grid, model);
    st.u = frames.u[k];
    st.rho[0] = frames.rho[k];
    st.t = frames.times[k];
    BulkSources bs = evaluate_bulk(bulk, frames.grid, model, frames.times[k]);
    double c = bs.theta_rho[0].comp[0].sum() * g.cell_volume();
    GhostState gs = apply_boundary_conditions(model, st, closures, st.t);
    auto traces = ghost_face_states(model, gs, g.all_faces());
    size_t pos = 0;
    for (int patch = 0; patch < static_cast<int>(g.patch_names.size()); ++patch) {
      const auto faces = g.patch_faces(patch);
      std::vector<FaceState> ptr(traces.begin() + pos, traces.begin() + pos + faces.size());
      const FluxClosure* cl = nullptr;
      for (const auto& cc : closures)
        if (cc.patch == patch) cl = &cc;
      FluxClosure closed;
      closed.patch = patch;
      FluxValues fv = evaluate_fluxes(cl ? *cl : closed, model, ptr, st.t);
      for (size_t kk = 0; kk < faces.size(); ++kk)
        c += fv.faces[kk].j_rho[0] * ptr[kk].da;
      pos += faces.size();
    }
    col[k] = c;
  }
  for (size_t k = 0; k + 1 < frames.times.size(); ++k)
    expected += 0.5 * (col[k] + col[k + 1]) * (frames.times[k + 1] - frames.times[k]);
  mc.expected_mass_change = expected;
  mc.mass_balance_residual = std::abs(mc.material_mass_change - expected);
  return mc;
}

double boundary_piola_residual(const PiolaInput& in) {
  const int n = static_cast<int>(in.boundary_labels.size());
  if (n < 3) throw std::invalid_argument("need a closed polyline of boundary labels");
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    const int ip = (i + 1) % n, im = (i - 1 + n) % n;
    const Eigen::Vector2d tau_label =
        0.5 * (in.boundary_labels[ip] - in.boundary_labels[im]);
    const Eigen::Vector2d tau_spatial =
        0.5 * (in.boundary_positions[ip] - in.boundary_positions[im]);
    // counterclockwise curve: outward normal is the tangent rotated -90
    Eigen::Vector2d N(tau_label[1], -tau_label[0]);
    N.normalize();
    Eigen::Vector2d nrm(tau_spatial[1], -tau_spatial[0]);
    nrm.normalize();
    const double J_boundary = tau_spatial.norm() / tau_label.norm();

    // grad phi by least squares over a symmetric neighbor ball: take
    // everything within a fixed multiple of the nearest-label distance
    // (at least k_neighbors points), so the quadratic error terms of
    // the affine fit cancel and the estimate stays 2nd order
    const Eigen::Vector2d X = in.boundary_labels[i];
    std::vector<std::pair<double, int>> near;
    for (size_t k = 0; k < in.cloud_labels.size(); ++k) {
      const double d2 = (in.cloud_labels[k] - X).squaredNorm();
      if (d2 > 1e-24) near.emplace_back(d2, static_cast<int>(k));
    }
    std::sort(near.begin(), near.end());
    const double r2 = 2.6 * near.front().first;
    size_t take = 0;
    while (take < near.size() &&
           (near[take].first <= r2 || take < static_cast<size_t>(in.k_neighbors)))
      ++take;
    Eigen::Matrix2d A = Eigen::Matrix2d::Zero();
    Eigen::Matrix2d B = Eigen::Matrix2d::Zero();
    const Eigen::Vector2d x0 = in.boundary_positions[i];
    for (size_t k = 0; k < take; ++k) {
      const Eigen::Vector2d dX = in.cloud_labels[near[k].second] - X;
      const Eigen::Vector2d dx = in.cloud_positions[near[k].second] - x0;
      A += dX * dX.transpose();
      B += dx * dX.transpose();
    }
    const Eigen::Matrix2d F = B * A.inverse();  // grad phi
    const double Jphi = F.determinant();
    if (!(Jphi > 0.0)) throw std::runtime_error("degenerate local Jacobian");

    double wv[2];
    in.w_field(x0[0], x0[1], wv);
    const Eigen::Vector2d w(wv[0], wv[1]);
    const double lhs = N.dot(F.inverse() * w) * Jphi;
    const double rhs = nrm.dot(w) * J_boundary;
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

double boundary_piola_residual_1d(double label_left, double label_right,
                                  const std::function<double(double)>& phi,
                                  const std::function<double(double)>& w, double h) {
  double worst = 0.0;
  for (int side = 0; side < 2; ++side) {
    const double X = side == 0 ? label_left : label_right;
    const double N = side == 0 ? -1.0 : 1.0;
    const double dphi = (phi(X + h) - phi(X - h)) / (2.0 * h);
    if (!(dphi > 0.0)) throw std::runtime_error("degenerate local Jacobian");
    const double lhs = N * (w(phi(X)) / dphi) * dphi;
    const double rhs = N * w(phi(X));  // n = N for an orientation-preserving 1D map
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

}  // namespace openfluid
