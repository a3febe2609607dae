#include "openfluid/model.hpp"

#include <cmath>
#include <stdexcept>

#include "openfluid/ops.hpp"

namespace openfluid {

bool family_has_entropy(ModelFamily f) { return f != ModelFamily::shallow_water_rotating; }

bool family_has_rotation(ModelFamily f) {
  return f == ModelFamily::euler_rotating_gravity || f == ModelFamily::shallow_water_rotating;
}

ModelSpec make_euler(const StateEquation& eos) {
  ModelSpec m;
  m.family = ModelFamily::euler;
  m.eos = eos;
  return m;
}

ModelSpec make_rotating(const StateEquation& eos, std::vector<Expression> R, Expression phi,
                        std::optional<double> omega) {
  ModelSpec m;
  m.family = ModelFamily::euler_rotating_gravity;
  m.eos = eos;
  m.R = std::move(R);
  m.phi = std::move(phi);
  m.omega = omega;
  return m;
}

ModelSpec make_shallow_water(double g_const, std::vector<Expression> R, Expression Z,
                             std::optional<double> omega) {
  ModelSpec m;
  m.family = ModelFamily::shallow_water_rotating;
  m.g_const = g_const;
  m.R = std::move(R);
  m.Z = std::move(Z);
  m.omega = omega;
  return m;
}

ModelSpec make_multicomponent(const StateEquation& eos,
                              std::vector<std::array<double, 2>> comps) {
  if (comps.empty()) throw std::invalid_argument("multicomponent model needs >= 1 component");
  ModelSpec m;
  m.family = ModelFamily::multicomponent_euler;
  m.eos = eos;
  m.component_baro = std::move(comps);
  return m;
}

ModelSpec make_mhd(const StateEquation& eos) {
  ModelSpec m;
  m.family = ModelFamily::mhd;
  m.eos = eos;
  m.tensor = TensorSlotSpec{{1, 0}, FieldKind::function, 1.0};
  return m;
}

ModelSpec make_korteweg(const StateEquation& eos, double lambda) {
  ModelSpec m;
  m.family = ModelFamily::euler_korteweg;
  m.eos = eos;
  m.lambda = lambda;
  return m;
}

ModelSpec make_tensor_advected(const StateEquation& eos, TensorSlotSpec slot) {
  ModelSpec m;
  m.family = ModelFamily::tensor_advected;
  m.eos = eos;
  m.tensor = slot;
  return m;
}

State State::zeros(GridPtr grid, const ModelSpec& m) {
  State st;
  st.grid = grid;
  st.u = Field::vector(grid, FieldKind::function);
  st.rho.assign(m.n_components(), Field::scalar(grid, FieldKind::density));
  st.s = Field::scalar(grid, FieldKind::density);
  if (m.has_tensor()) st.tensor = Field::zeros(grid, m.tensor->rank, m.tensor->kind);
  return st;
}

Field State::rho_total() const {
  Field tot = rho[0];
  for (size_t k = 1; k < rho.size(); ++k) tot += rho[k];
  return tot;
}

bool State::all_finite() const {
  if (!u.all_finite() || !s.all_finite()) return false;
  for (const auto& r : rho)
    if (!r.all_finite()) return false;
  if (tensor && !tensor->all_finite()) return false;
  return true;
}

namespace {

double eval_or0(const Expression& e, double x, double y, double t = 0.0) {
  return e.valid() ? e(x, y, t) : 0.0;
}

void eval_R(const ModelSpec& m, double x, double y, double R[2]) {
  R[0] = R[1] = 0.0;
  for (size_t c = 0; c < m.R.size() && c < 2; ++c) R[c] = eval_or0(m.R[c], x, y);
}

// multicomponent internal energy: sum_k kappa_k rho_k^gamma_k + eos(rho_tot, s)
double multi_eps(const ModelSpec& m, const Eigen::VectorXd& rho, double s, double* rho_tot_out) {
  double rho_tot = rho.sum();
  if (rho_tot_out) *rho_tot_out = rho_tot;
  double eps = internal_energy(m.eos, rho_tot, s);
  for (int k = 0; k < rho.size(); ++k)
    eps += m.component_baro[k][0] * std::pow(rho[k], m.component_baro[k][1]);
  return eps;
}

double tensor_sq(const Eigen::VectorXd& t) { return t.squaredNorm(); }

}  // namespace

PointDerivs point_derivs(const ModelSpec& m, const PointVals& pv) {
  PointDerivs d;
  point_derivs_into(m, pv, d);
  return d;
}

void point_derivs_into(const ModelSpec& m, const PointVals& pv, PointDerivs& d) {
  const double usq = pv.u[0] * pv.u[0] + pv.u[1] * pv.u[1];
  if (d.dl_drho.size() != pv.rho.size()) d.dl_drho.resize(pv.rho.size());
  switch (m.family) {
    case ModelFamily::euler:
    case ModelFamily::mhd:
    case ModelFamily::euler_korteweg: {
      const double rho = pv.rho[0];
      check_admissible(m.eos, rho);
      d.m[0] = rho * pv.u[0];
      d.m[1] = rho * pv.u[1];
      d.dl_drho[0] = 0.5 * usq - eps_rho(m.eos, rho, pv.s);
      d.dl_ds = -eps_s(m.eos, rho, pv.s);
      if (m.family == ModelFamily::mhd) d.dl_dtensor = -pv.tensor;
      break;
    }
    case ModelFamily::euler_rotating_gravity: {
      const double rho = pv.rho[0];
      check_admissible(m.eos, rho);
      double R[2];
      eval_R(m, pv.x, pv.y, R);
      d.m[0] = rho * (pv.u[0] + R[0]);
      d.m[1] = rho * (pv.u[1] + R[1]);
      d.dl_drho[0] = 0.5 * usq + R[0] * pv.u[0] + R[1] * pv.u[1] -
                     eps_rho(m.eos, rho, pv.s) - eval_or0(m.phi, pv.x, pv.y);
      d.dl_ds = -eps_s(m.eos, rho, pv.s);
      break;
    }
    case ModelFamily::shallow_water_rotating: {
      const double h = pv.rho[0];
      if (!(h >= m.eos.rho_floor)) throw std::domain_error("degenerate water depth");
      double R[2];
      eval_R(m, pv.x, pv.y, R);
      d.m[0] = h * (pv.u[0] + R[0]);
      d.m[1] = h * (pv.u[1] + R[1]);
      d.dl_drho[0] = 0.5 * usq + R[0] * pv.u[0] + R[1] * pv.u[1] -
                     m.g_const * (h + eval_or0(m.Z, pv.x, pv.y));
      d.dl_ds = 0.0;
      break;
    }
    case ModelFamily::multicomponent_euler: {
      double rho_tot = 0.0;
      // dl/drho_k = |u|^2/2 - d eps/d rho_k
      for (int k = 0; k < pv.rho.size(); ++k) rho_tot += pv.rho[k];
      check_admissible(m.eos, rho_tot);
      const double e0_rho = eps_rho(m.eos, rho_tot, pv.s);
      for (int k = 0; k < pv.rho.size(); ++k) {
        const double kap = m.component_baro[k][0], gam = m.component_baro[k][1];
        d.dl_drho[k] = 0.5 * usq - (e0_rho + kap * gam * std::pow(pv.rho[k], gam - 1.0));
      }
      d.m[0] = rho_tot * pv.u[0];
      d.m[1] = rho_tot * pv.u[1];
      d.dl_ds = -eps_s(m.eos, rho_tot, pv.s);
      break;
    }
    case ModelFamily::tensor_advected: {
      const double rho = pv.rho[0];
      check_admissible(m.eos, rho);
      d.m[0] = rho * pv.u[0];
      d.m[1] = rho * pv.u[1];
      d.dl_drho[0] = 0.5 * usq - eps_rho(m.eos, rho, pv.s);
      d.dl_ds = -eps_s(m.eos, rho, pv.s);
      d.dl_dtensor = -m.tensor->coupling * pv.tensor;  // raw layout; conjugate where needed
      break;
    }
  }
}

double point_lagrangian(const ModelSpec& m, const PointVals& pv) {
  const double usq = pv.u[0] * pv.u[0] + pv.u[1] * pv.u[1];
  switch (m.family) {
    case ModelFamily::euler:
      return 0.5 * pv.rho[0] * usq - internal_energy(m.eos, pv.rho[0], pv.s);
    case ModelFamily::mhd:
      return 0.5 * pv.rho[0] * usq - internal_energy(m.eos, pv.rho[0], pv.s) -
             0.5 * tensor_sq(pv.tensor);
    case ModelFamily::euler_korteweg:
      // grad-rho part added at field level
      return 0.5 * pv.rho[0] * usq - internal_energy(m.eos, pv.rho[0], pv.s);
    case ModelFamily::euler_rotating_gravity: {
      double R[2];
      eval_R(m, pv.x, pv.y, R);
      return 0.5 * pv.rho[0] * usq + pv.rho[0] * (R[0] * pv.u[0] + R[1] * pv.u[1]) -
             internal_energy(m.eos, pv.rho[0], pv.s) -
             pv.rho[0] * eval_or0(m.phi, pv.x, pv.y);
    }
    case ModelFamily::shallow_water_rotating: {
      double R[2];
      eval_R(m, pv.x, pv.y, R);
      const double h = pv.rho[0];
      const double surf = h + eval_or0(m.Z, pv.x, pv.y);
      return 0.5 * h * usq + h * (R[0] * pv.u[0] + R[1] * pv.u[1]) -
             0.5 * m.g_const * surf * surf;
    }
    case ModelFamily::multicomponent_euler: {
      double rho_tot = 0.0;
      const double eps = multi_eps(m, pv.rho, pv.s, &rho_tot);
      return 0.5 * rho_tot * usq - eps;
    }
    case ModelFamily::tensor_advected:
      return 0.5 * pv.rho[0] * usq - internal_energy(m.eos, pv.rho[0], pv.s) -
             0.5 * m.tensor->coupling * tensor_sq(pv.tensor);
  }
  return 0.0;
}

double point_energy(const ModelSpec& m, const PointVals& pv) {
  const double usq = pv.u[0] * pv.u[0] + pv.u[1] * pv.u[1];
  switch (m.family) {
    case ModelFamily::euler:
    case ModelFamily::euler_korteweg:
      return 0.5 * pv.rho[0] * usq + internal_energy(m.eos, pv.rho[0], pv.s);
    case ModelFamily::mhd:
      return 0.5 * pv.rho[0] * usq + internal_energy(m.eos, pv.rho[0], pv.s) +
             0.5 * tensor_sq(pv.tensor);
    case ModelFamily::euler_rotating_gravity:
      return 0.5 * pv.rho[0] * usq + internal_energy(m.eos, pv.rho[0], pv.s) +
             pv.rho[0] * eval_or0(m.phi, pv.x, pv.y);
    case ModelFamily::shallow_water_rotating: {
      const double surf = pv.rho[0] + eval_or0(m.Z, pv.x, pv.y);
      return 0.5 * pv.rho[0] * usq + 0.5 * m.g_const * surf * surf;
    }
    case ModelFamily::multicomponent_euler: {
      double rho_tot = 0.0;
      const double eps = multi_eps(m, pv.rho, pv.s, &rho_tot);
      return 0.5 * rho_tot * usq + eps;
    }
    case ModelFamily::tensor_advected:
      return 0.5 * pv.rho[0] * usq + internal_energy(m.eos, pv.rho[0], pv.s) +
             0.5 * m.tensor->coupling * tensor_sq(pv.tensor);
  }
  return 0.0;
}

void point_velocity_from_momentum(const ModelSpec& m, double x, double y, const double mom[2],
                                  double rho_total, double u_out[2]) {
  if (!(rho_total >= m.eos.rho_floor)) throw std::domain_error("degenerate density");
  u_out[0] = mom[0] / rho_total;
  u_out[1] = mom[1] / rho_total;
  if (family_has_rotation(m.family)) {
    double R[2];
    eval_R(m, x, y, R);
    u_out[0] -= R[0];
    u_out[1] -= R[1];
  }
}

namespace {

PointVals point_vals_at(const ModelSpec& m, const State& st, int cell, int i, int j) {
  PointVals pv;
  pv.x = st.grid->cell_x(i);
  pv.y = st.grid->cell_y(j);
  pv.u[0] = st.u.comp[0](cell);
  pv.u[1] = st.grid->dim == 2 ? st.u.comp[1](cell) : 0.0;
  pv.rho.resize(static_cast<int>(st.rho.size()));
  for (size_t k = 0; k < st.rho.size(); ++k) pv.rho[static_cast<int>(k)] = st.rho[k].comp[0](cell);
  pv.s = st.s.comp[0](cell);
  if (st.tensor) {
    pv.tensor.resize(st.tensor->n_comp());
    for (int c = 0; c < st.tensor->n_comp(); ++c) pv.tensor[c] = st.tensor->comp[c](cell);
  }
  return pv;
}

template <class F>
void for_each_cell(const Grid& g, F&& fn) {
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) fn(g.flat(i, j), i, j);
}

}  // namespace

VarDerivs variational_derivatives(const ModelSpec& m, const State& st) {
  const Grid& g = *st.grid;
  VarDerivs vd;
  vd.dl_du = Field(st.grid, one_form_rank, FieldKind::density);
  vd.dl_drho.assign(m.n_components(), Field::scalar(st.grid, FieldKind::function));
  vd.dl_ds = Field::scalar(st.grid, FieldKind::function);
  if (st.tensor) {
    TensorRank conj{st.tensor->rank.q, st.tensor->rank.p};
    FieldKind conj_kind = st.tensor->kind == FieldKind::density ? FieldKind::function
                                                                : FieldKind::density;
    vd.dl_dtensor = Field(st.grid, conj, conj_kind);
  }
  for_each_cell(g, [&](int cell, int i, int j) {
    PointVals pv = point_vals_at(m, st, cell, i, j);
    PointDerivs d = point_derivs(m, pv);
    for (int c = 0; c < g.dim; ++c) vd.dl_du.comp[c](cell) = d.m[c];
    for (int k = 0; k < m.n_components(); ++k) vd.dl_drho[k].comp[0](cell) = d.dl_drho[k];
    vd.dl_ds.comp[0](cell) = d.dl_ds;
    if (vd.dl_dtensor)
      for (int c = 0; c < vd.dl_dtensor->n_comp(); ++c) {
        // conjugate layout: transpose the index groups
        PointTensor t(g.dim, st.tensor->rank);
        for (int cc = 0; cc < static_cast<int>(t.a.size()) && cc < d.dl_dtensor.size(); ++cc)
          t.a[cc] = d.dl_dtensor[cc];
        PointTensor ct = conjugate_transpose(t);
        vd.dl_dtensor->comp[c](cell) = ct.a[c];
      }
  });
  if (m.family == ModelFamily::euler_korteweg) {
    Field grad_rho = gradient(st.rho[0].with_kind(FieldKind::function));
    vd.dl_dgradrho = (-m.lambda) * grad_rho;
  }
  return vd;
}

Field momentum_from_velocity(const ModelSpec& m, const State& st) {
  Field mom(st.grid, one_form_rank, FieldKind::density);
  for_each_cell(*st.grid, [&](int cell, int i, int j) {
    PointVals pv = point_vals_at(m, st, cell, i, j);
    PointDerivs d = point_derivs(m, pv);
    for (int c = 0; c < st.grid->dim; ++c) mom.comp[c](cell) = d.m[c];
  });
  return mom;
}

Field velocity_from_momentum(const ModelSpec& m, const Field& mom,
                             const std::vector<Field>& rho) {
  GridPtr grid = mom.grid;
  Field u = Field::vector(grid, FieldKind::function);
  Eigen::ArrayXd rho_tot = rho[0].comp[0];
  for (size_t k = 1; k < rho.size(); ++k) rho_tot += rho[k].comp[0];
  for (int j = 0; j < grid->ny(); ++j)
    for (int i = 0; i < grid->nx(); ++i) {
      const int cell = grid->flat(i, j);
      double mv[2] = {mom.comp[0](cell), grid->dim == 2 ? mom.comp[1](cell) : 0.0};
      double uv[2];
      point_velocity_from_momentum(m, grid->cell_x(i), grid->cell_y(j), mv, rho_tot(cell), uv);
      for (int c = 0; c < grid->dim; ++c) u.comp[c](cell) = uv[c];
    }
  return u;
}

Field lagrangian_density(const ModelSpec& m, const State& st) {
  Field l = Field::scalar(st.grid, FieldKind::density);
  for_each_cell(*st.grid, [&](int cell, int i, int j) {
    l.comp[0](cell) = point_lagrangian(m, point_vals_at(m, st, cell, i, j));
  });
  if (m.family == ModelFamily::euler_korteweg) {
    Field grad_rho = gradient(st.rho[0].with_kind(FieldKind::function));
    l.comp[0] -= 0.5 * m.lambda * dot(grad_rho, grad_rho).comp[0];
  }
  return l;
}

Field energy_density(const ModelSpec& m, const State& st) {
  Field e = Field::scalar(st.grid, FieldKind::density);
  for_each_cell(*st.grid, [&](int cell, int i, int j) {
    e.comp[0](cell) = point_energy(m, point_vals_at(m, st, cell, i, j));
  });
  if (m.family == ModelFamily::euler_korteweg) {
    Field grad_rho = gradient(st.rho[0].with_kind(FieldKind::function));
    e.comp[0] += 0.5 * m.lambda * dot(grad_rho, grad_rho).comp[0];
  }
  return e;
}

HamiltonianEval hamiltonian_density(const ModelSpec& m, const Field& mom,
                                    const std::vector<Field>& rho, const Field& s,
                                    const std::optional<Field>& tensor) {
  State st;
  st.grid = mom.grid;
  st.u = velocity_from_momentum(m, mom, rho);
  st.rho = rho;
  st.s = s;
  st.tensor = tensor;
  HamiltonianEval he;
  he.dh_dm = st.u;
  Field l = lagrangian_density(m, st);
  he.density = Field::scalar(st.grid, FieldKind::density);
  Eigen::ArrayXd mu = mom.comp[0] * st.u.comp[0];
  if (st.grid->dim == 2) mu += mom.comp[1] * st.u.comp[1];
  he.density.comp[0] = mu - l.comp[0];
  return he;
}

EnergyPartials energy_partials(const ModelSpec& m, const State& st) {
  const Grid& g = *st.grid;
  EnergyPartials ep;
  ep.de_du = Field::vector(st.grid, FieldKind::function);
  ep.de_drho.assign(m.n_components(), Field::scalar(st.grid, FieldKind::function));
  ep.de_ds = Field::scalar(st.grid, FieldKind::function);
  if (st.tensor) ep.de_dtensor = Field(st.grid, st.tensor->rank, st.tensor->kind);

  for_each_cell(g, [&](int cell, int i, int j) {
    PointVals pv = point_vals_at(m, st, cell, i, j);
    const double usq = pv.u[0] * pv.u[0] + pv.u[1] * pv.u[1];
    double rho_tot = pv.rho.sum();
    // de/du = rho_tot * u for every catalogued family
    for (int c = 0; c < g.dim; ++c) ep.de_du.comp[c](cell) = rho_tot * pv.u[c];
    switch (m.family) {
      case ModelFamily::euler:
      case ModelFamily::mhd:
      case ModelFamily::euler_korteweg:
        ep.de_drho[0].comp[0](cell) = 0.5 * usq + eps_rho(m.eos, pv.rho[0], pv.s);
        ep.de_ds.comp[0](cell) = eps_s(m.eos, pv.rho[0], pv.s);
        break;
      case ModelFamily::euler_rotating_gravity:
        ep.de_drho[0].comp[0](cell) =
            0.5 * usq + eps_rho(m.eos, pv.rho[0], pv.s) + eval_or0(m.phi, pv.x, pv.y);
        ep.de_ds.comp[0](cell) = eps_s(m.eos, pv.rho[0], pv.s);
        break;
      case ModelFamily::shallow_water_rotating:
        ep.de_drho[0].comp[0](cell) =
            0.5 * usq + m.g_const * (pv.rho[0] + eval_or0(m.Z, pv.x, pv.y));
        break;
      case ModelFamily::multicomponent_euler: {
        const double e0_rho = eps_rho(m.eos, rho_tot, pv.s);
        for (int k = 0; k < pv.rho.size(); ++k) {
          const double kap = m.component_baro[k][0], gam = m.component_baro[k][1];
          ep.de_drho[k].comp[0](cell) =
              0.5 * usq + e0_rho + kap * gam * std::pow(pv.rho[k], gam - 1.0);
        }
        ep.de_ds.comp[0](cell) = eps_s(m.eos, rho_tot, pv.s);
        break;
      }
      case ModelFamily::tensor_advected:
        ep.de_drho[0].comp[0](cell) = 0.5 * usq + eps_rho(m.eos, pv.rho[0], pv.s);
        ep.de_ds.comp[0](cell) = eps_s(m.eos, pv.rho[0], pv.s);
        break;
    }
    if (ep.de_dtensor) {
      const double c = m.family == ModelFamily::mhd ? 1.0 : m.tensor->coupling;
      for (int cc = 0; cc < ep.de_dtensor->n_comp(); ++cc)
        ep.de_dtensor->comp[cc](cell) = c * pv.tensor[cc];
    }
  });
  if (m.family == ModelFamily::euler_korteweg) {
    Field grad_rho = gradient(st.rho[0].with_kind(FieldKind::function));
    ep.de_dgradrho = m.lambda * grad_rho;
  }
  return ep;
}

Field coriolis_field(const ModelSpec& m, GridPtr grid) {
  Field R = Field::vector(grid, FieldKind::function);
  if (m.R.empty()) return R;
  for (int c = 0; c < grid->dim && c < static_cast<int>(m.R.size()); ++c)
    if (m.R[c].valid())
      for (int j = 0; j < grid->ny(); ++j)
        for (int i = 0; i < grid->nx(); ++i)
          R.comp[c](grid->flat(i, j)) = m.R[c](grid->cell_x(i), grid->cell_y(j));
  return R;
}

Field gravity_potential_field(const ModelSpec& m, GridPtr grid) {
  if (!m.phi.valid()) return Field::scalar(grid, FieldKind::function);
  return Field::from_expression(grid, FieldKind::function, m.phi);
}

Field topography_field(const ModelSpec& m, GridPtr grid) {
  if (!m.Z.valid()) return Field::scalar(grid, FieldKind::function);
  return Field::from_expression(grid, FieldKind::function, m.Z);
}

Field external_stress_field(const ModelSpec& m, GridPtr grid, double t) {
  Field sig(grid, {1, 1}, FieldKind::density);
  if (!m.has_external_stress()) return sig;
  const int dim = grid->dim;
  for (int c = 0; c < dim; ++c)
    for (int d = 0; d < dim; ++d) {
      const size_t k = static_cast<size_t>(c * dim + d);
      if (k < m.sigma_ext.size() && m.sigma_ext[k].valid())
        for (int j = 0; j < grid->ny(); ++j)
          for (int i = 0; i < grid->nx(); ++i)
            sig.comp[c * dim + d](grid->flat(i, j)) =
                m.sigma_ext[k](grid->cell_x(i), grid->cell_y(j), t);
    }
  return sig;
}

double max_signal_speed(const ModelSpec& m, const State& st) {
  double vmax = 0.0;
  const Grid& g = *st.grid;
  for (int cell = 0; cell < g.n_cells(); ++cell) {
    double usq = st.u.comp[0](cell) * st.u.comp[0](cell);
    if (g.dim == 2) usq += st.u.comp[1](cell) * st.u.comp[1](cell);
    double c = 0.0;
    if (m.family == ModelFamily::shallow_water_rotating) {
      c = std::sqrt(std::max(m.g_const * st.rho[0].comp[0](cell), 0.0));
    } else {
      double rho_tot = 0.0;
      for (const auto& r : st.rho) rho_tot += r.comp[0](cell);
      c = sound_speed(m.eos, rho_tot, st.s.comp[0](cell));
      if (m.family == ModelFamily::mhd && st.tensor) {
        double bsq = 0.0;
        for (int cc = 0; cc < st.tensor->n_comp(); ++cc)
          bsq += st.tensor->comp[cc](cell) * st.tensor->comp[cc](cell);
        c += std::sqrt(bsq / rho_tot);
      }
    }
    vmax = std::max(vmax, std::sqrt(usq) + c);
  }
  return vmax;
}

void check_state_admissible(const ModelSpec& m, const State& st) {
  if (!st.all_finite()) throw std::domain_error("state contains NaN/Inf");
  for (const auto& r : st.rho)
    if (r.comp[0].minCoeff() < m.eos.rho_floor)
      throw std::domain_error("density below floor");
}

}  // namespace openfluid
