#include "openfluid/brackets.hpp"

#include <cmath>
#include <stdexcept>

#include "openfluid/ops.hpp"

namespace openfluid {

namespace {

void fd_partials(const DiscreteFunctional& f, double x, double y, const double m[2],
                 const Eigen::VectorXd& rho, double s, DiscreteFunctional::Partials& out) {
  auto step = [](double v) { return 1e-6 * std::max(1.0, std::abs(v)); };
  double mp[2] = {m[0], m[1]};
  for (int c = 0; c < 2; ++c) {
    const double h = step(m[c]);
    mp[c] = m[c] + h;
    const double fp = f.density(x, y, mp, rho, s);
    mp[c] = m[c] - h;
    const double fm = f.density(x, y, mp, rho, s);
    mp[c] = m[c];
    out.dm[c] = (fp - fm) / (2.0 * h);
  }
  Eigen::VectorXd rp = rho;
  out.drho.resize(rho.size());
  for (int k = 0; k < rho.size(); ++k) {
    const double h = step(rho[k]);
    rp[k] = rho[k] + h;
    const double fp = f.density(x, y, m, rp, s);
    rp[k] = rho[k] - h;
    const double fm = f.density(x, y, m, rp, s);
    rp[k] = rho[k];
    out.drho[k] = (fp - fm) / (2.0 * h);
  }
  {
    const double h = step(s);
    out.ds = (f.density(x, y, m, rho, s + h) - f.density(x, y, m, rho, s - h)) / (2.0 * h);
  }
}

void eval_partials(const DiscreteFunctional& f, double x, double y, const double m[2],
                   const Eigen::VectorXd& rho, double s, DiscreteFunctional::Partials& out) {
  if (f.partials) {
    f.partials(x, y, m, rho, s, out);
    if (out.drho.size() != rho.size()) {
      Eigen::VectorXd tmp = Eigen::VectorXd::Zero(rho.size());
      tmp.head(out.drho.size()) = out.drho;
      out.drho = tmp;
    }
  } else {
    fd_partials(f, x, y, m, rho, s, out);
  }
}

}  // namespace

DiscreteFunctional DiscreteFunctional::total_mass(int component) {
  DiscreteFunctional f;
  f.name = component == 0 ? "mass" : "mass_" + std::to_string(component + 1);
  f.density = [component](double, double, const double*, const Eigen::VectorXd& rho, double) {
    return rho[component];
  };
  f.partials = [component](double, double, const double*, const Eigen::VectorXd& rho, double,
                           Partials& out) {
    out.dm[0] = out.dm[1] = 0;
    out.drho = Eigen::VectorXd::Zero(rho.size());
    out.drho[component] = 1.0;
    out.ds = 0;
  };
  return f;
}

DiscreteFunctional DiscreteFunctional::total_entropy() {
  DiscreteFunctional f;
  f.name = "entropy";
  f.density = [](double, double, const double*, const Eigen::VectorXd&, double s) { return s; };
  f.partials = [](double, double, const double*, const Eigen::VectorXd& rho, double,
                  Partials& out) {
    out.dm[0] = out.dm[1] = 0;
    out.drho = Eigen::VectorXd::Zero(rho.size());
    out.ds = 1.0;
  };
  return f;
}

DiscreteFunctional DiscreteFunctional::momentum(int axis) {
  DiscreteFunctional f;
  f.name = axis == 0 ? "momentum_x" : "momentum_y";
  f.density = [axis](double, double, const double m[2], const Eigen::VectorXd&, double) {
    return m[axis];
  };
  f.partials = [axis](double, double, const double*, const Eigen::VectorXd& rho, double,
                      Partials& out) {
    out.dm[0] = out.dm[1] = 0;
    out.dm[axis] = 1.0;
    out.drho = Eigen::VectorXd::Zero(rho.size());
    out.ds = 0;
  };
  return f;
}

DiscreteFunctional DiscreteFunctional::kinetic_energy() {
  DiscreteFunctional f;
  f.name = "kinetic";
  f.density = [](double, double, const double m[2], const Eigen::VectorXd& rho, double) {
    const double rt = rho.sum();
    return 0.5 * (m[0] * m[0] + m[1] * m[1]) / rt;
  };
  f.partials = [](double, double, const double m[2], const Eigen::VectorXd& rho, double,
                  Partials& out) {
    const double rt = rho.sum();
    out.dm[0] = m[0] / rt;
    out.dm[1] = m[1] / rt;
    const double d = -0.5 * (m[0] * m[0] + m[1] * m[1]) / (rt * rt);
    out.drho = Eigen::VectorXd::Constant(rho.size(), d);
    out.ds = 0;
  };
  return f;
}

DiscreteFunctional DiscreteFunctional::hamiltonian(const ModelSpec& model) {
  if (model.has_tensor())
    throw std::invalid_argument("bracket functionals cover (m, rho_k, s) families only");
  DiscreteFunctional f;
  f.name = "hamiltonian";
  ModelSpec m = model;
  f.density = [m](double x, double y, const double mom[2], const Eigen::VectorXd& rho,
                  double s) {
    PointVals pv;
    pv.x = x;
    pv.y = y;
    pv.rho = rho;
    pv.s = s;
    point_velocity_from_momentum(m, x, y, mom, rho.sum(), pv.u);
    return mom[0] * pv.u[0] + mom[1] * pv.u[1] - point_lagrangian(m, pv);
  };
  f.partials = [m](double x, double y, const double mom[2], const Eigen::VectorXd& rho,
                   double s, Partials& out) {
    PointVals pv;
    pv.x = x;
    pv.y = y;
    pv.rho = rho;
    pv.s = s;
    point_velocity_from_momentum(m, x, y, mom, rho.sum(), pv.u);
    PointDerivs d = point_derivs(m, pv);
    out.dm[0] = pv.u[0];
    out.dm[1] = pv.u[1];
    out.drho = -d.dl_drho;
    out.ds = -d.dl_ds;
  };
  return f;
}

std::vector<DiscreteFunctional> DiscreteFunctional::catalogue(const ModelSpec& model, int dim) {
  std::vector<DiscreteFunctional> fs;
  for (int k = 0; k < model.n_components(); ++k) fs.push_back(total_mass(k));
  if (family_has_entropy(model.family)) fs.push_back(total_entropy());
  for (int c = 0; c < dim; ++c) fs.push_back(momentum(c));
  fs.push_back(kinetic_energy());
  fs.push_back(hamiltonian(model));
  return fs;
}

MState to_mstate(const ModelSpec& model, const State& st) {
  MState ms;
  ms.grid = st.grid;
  ms.m = momentum_from_velocity(model, st);
  ms.rho = st.rho;
  ms.s = st.s;
  return ms;
}

namespace {

template <class F>
void for_each_cell(const Grid& g, F&& fn) {
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) fn(g.flat(i, j), g.cell_x(i), g.cell_y(j));
}

void gather(const MState& ms, int cell, double m[2], Eigen::VectorXd& rho, double& s) {
  m[0] = ms.m.comp[0](cell);
  m[1] = ms.grid->dim == 2 ? ms.m.comp[1](cell) : 0.0;
  for (size_t k = 0; k < ms.rho.size(); ++k) rho[static_cast<int>(k)] = ms.rho[k].comp[0](cell);
  s = ms.s.comp[0](cell);
}

}  // namespace

double evaluate_functional(const DiscreteFunctional& f, const MState& ms) {
  double sum = 0.0;
  Eigen::VectorXd rho(static_cast<int>(ms.rho.size()));
  for_each_cell(*ms.grid, [&](int cell, double x, double y) {
    double m[2];
    double s;
    gather(ms, cell, m, rho, s);
    sum += f.density(x, y, m, rho, s);
  });
  return sum * ms.grid->cell_volume();
}

FunctionalPartials functional_derivative(const DiscreteFunctional& f, const MState& ms) {
  FunctionalPartials fp;
  fp.df_dm = Field::vector(ms.grid, FieldKind::function);
  fp.df_drho.assign(ms.rho.size(), Field::scalar(ms.grid, FieldKind::function));
  fp.df_ds = Field::scalar(ms.grid, FieldKind::function);
  Eigen::VectorXd rho(static_cast<int>(ms.rho.size()));
  DiscreteFunctional::Partials out;
  for_each_cell(*ms.grid, [&](int cell, double x, double y) {
    double m[2];
    double s;
    gather(ms, cell, m, rho, s);
    eval_partials(f, x, y, m, rho, s, out);
    for (int c = 0; c < ms.grid->dim; ++c) fp.df_dm.comp[c](cell) = out.dm[c];
    for (size_t k = 0; k < ms.rho.size(); ++k)
      fp.df_drho[k].comp[0](cell) = out.drho[static_cast<int>(k)];
    fp.df_ds.comp[0](cell) = out.ds;
  });
  return fp;
}

namespace {

struct FacePartialData {
  double a[2];   // df/dm at the face
  Eigen::VectorXd f_rho;
  double f_s;
  double m[2];   // momentum at the traced primitives
  double un;     // traced u . n
  double da;
};

// Everything the boundary terms need, evaluated at the traced
// primitives so flux cancellation tests close at machine precision.
std::vector<FacePartialData> face_partials(const DiscreteFunctional& f, const ModelSpec& model,
                                           const std::vector<FaceState>& traces) {
  std::vector<FacePartialData> out(traces.size());
  DiscreteFunctional::Partials p;
  for (size_t k = 0; k < traces.size(); ++k) {
    const FaceState& fs = traces[k];
    double mom[2];
    face_momentum(model, fs, mom);
    eval_partials(f, fs.x, fs.y, mom, fs.rho, fs.s, p);
    FacePartialData& d = out[k];
    d.a[0] = p.dm[0];
    d.a[1] = p.dm[1];
    d.f_rho = p.drho;
    d.f_s = p.ds;
    d.m[0] = mom[0];
    d.m[1] = mom[1];
    d.un = fs.un();
    d.da = fs.da;
  }
  return out;
}

BracketValue bracket_with_traces(const DiscreteFunctional& f, const DiscreteFunctional& h,
                                 const ModelSpec& model, const State& st,
                                 const std::vector<FaceState>& traces) {
  const Grid& g = *st.grid;
  const int dim = g.dim;
  MState ms = to_mstate(model, st);
  FunctionalPartials pf = functional_derivative(f, ms);
  FunctionalPartials ph = functional_derivative(h, ms);

  // total: m.(b.grad a - a.grad b) + sum_k rho_k (b.grad f_k - a.grad h_k)
  //        + s (b.grad f_s - a.grad h_s), one-sided stencils at the wall
  std::vector<Eigen::ArrayXd> da(dim * dim), db(dim * dim);
  for (int c = 0; c < dim; ++c)
    for (int d = 0; d < dim; ++d) {
      da[c * dim + d] = partial(g, pf.df_dm.comp[d], c);
      db[c * dim + d] = partial(g, ph.df_dm.comp[d], c);
    }
  Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(g.n_cells());
  for (int i = 0; i < dim; ++i)
    for (int c = 0; c < dim; ++c)
      acc += ms.m.comp[i] *
             (ph.df_dm.comp[c] * da[c * dim + i] - pf.df_dm.comp[c] * db[c * dim + i]);
  for (size_t k = 0; k < ms.rho.size(); ++k) {
    Eigen::ArrayXd gf = Eigen::ArrayXd::Zero(g.n_cells());
    for (int c = 0; c < dim; ++c)
      gf += ph.df_dm.comp[c] * partial(g, pf.df_drho[k].comp[0], c) -
            pf.df_dm.comp[c] * partial(g, ph.df_drho[k].comp[0], c);
    acc += ms.rho[k].comp[0] * gf;
  }
  {
    Eigen::ArrayXd gf = Eigen::ArrayXd::Zero(g.n_cells());
    for (int c = 0; c < dim; ++c)
      gf += ph.df_dm.comp[c] * partial(g, pf.df_ds.comp[0], c) -
            pf.df_dm.comp[c] * partial(g, ph.df_ds.comp[0], c);
    acc += ms.s.comp[0] * gf;
  }

  BracketValue bv;
  bv.total = acc.sum() * g.cell_volume();

  auto fd = face_partials(f, model, traces);
  auto hd = face_partials(h, model, traces);
  double bnd = 0.0;
  for (size_t k = 0; k < traces.size(); ++k) {
    const FaceState& fs = traces[k];
    const double bn = hd[k].a[0] * fs.nx + hd[k].a[1] * fs.ny;  // (dh/dm).n
    double term = bn * (fd[k].m[0] * fd[k].a[0] + fd[k].m[1] * fd[k].a[1]);
    for (int kk = 0; kk < fs.rho.size(); ++kk) term += fs.rho[kk] * bn * fd[k].f_rho[kk];
    term += fs.s * bn * fd[k].f_s;
    bnd += term * fs.da;
  }
  bv.boundary = bnd;
  bv.bulk = bv.total - bv.boundary;
  return bv;
}

}  // namespace

BracketValue lie_poisson_bracket(const DiscreteFunctional& f, const DiscreteFunctional& h,
                                 const ModelSpec& model, const State& st) {
  auto traces = trace_face_states(model, st, st.grid->all_faces());
  return bracket_with_traces(f, h, model, st, traces);
}

EvolutionCheck extended_evolution_rate(const DiscreteFunctional& f, const ModelSpec& model,
                                       const State& st, const BulkSourceSpec& bulk,
                                       const std::vector<FluxClosure>& closures) {
  const Grid& g = *st.grid;
  EvolutionCheck ec;
  ec.functional = f.name;

  GhostState gs = apply_boundary_conditions(model, st, closures, st.t);
  auto traces = ghost_face_states(model, gs, g.all_faces());

  DiscreteFunctional h = DiscreteFunctional::hamiltonian(model);
  ec.lp = bracket_with_traces(f, h, model, st, traces);

  // bulk sources paired with the functional partials
  BulkSources bs = evaluate_bulk(bulk, st.grid, model, st.t);
  MState ms = to_mstate(model, st);
  FunctionalPartials pf = functional_derivative(f, ms);
  Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(g.n_cells());
  for (int c = 0; c < g.dim; ++c) acc += bs.b.comp[c] * pf.df_dm.comp[c];
  for (size_t k = 0; k < ms.rho.size(); ++k)
    acc += bs.theta_rho[k].comp[0] * pf.df_drho[k].comp[0];
  acc += bs.theta_s.comp[0] * pf.df_ds.comp[0];
  ec.bulk_sources = acc.sum() * g.cell_volume();

  // boundary fluxes paired with the functional partials at the faces
  auto fd = face_partials(f, model, traces);
  double bnd = 0.0;
  {
    // per patch, evaluate the closure on its faces (trace order matches
    // all_faces: faces are stored patch-contiguous)
    size_t pos = 0;
    for (int patch = 0; patch < static_cast<int>(g.patch_names.size()); ++patch) {
      const auto faces = g.patch_faces(patch);
      std::vector<FaceState> patch_traces(traces.begin() + pos,
                                          traces.begin() + pos + faces.size());
      const FluxClosure* cl = nullptr;
      for (const auto& c : closures)
        if (c.patch == patch) cl = &c;
      FluxClosure closed;
      closed.patch = patch;
      FluxValues fv = evaluate_fluxes(cl ? *cl : closed, model, patch_traces, st.t);
      for (size_t k = 0; k < faces.size(); ++k) {
        const FaceFlux& ff = fv.faces[k];
        const FacePartialData& d = fd[pos + k];
        double term = ff.J[0] * d.a[0] + ff.J[1] * d.a[1];
        for (int kk = 0; kk < ff.j_rho.size(); ++kk) term += ff.j_rho[kk] * d.f_rho[kk];
        term += ff.j_s * d.f_s;
        bnd += term * d.da;
      }
      pos += faces.size();
    }
  }
  ec.boundary_sources = bnd;
  ec.rate = ec.lp.total + ec.bulk_sources + ec.boundary_sources;

  // d/dt f chain-ruled through the dynamics tendency:
  // dm/dt pairs with df/dm, etc.
  Tendency td = interior_tendency(model, st, bs, gs);
  Eigen::ArrayXd dacc = Eigen::ArrayXd::Zero(g.n_cells());
  for (int c = 0; c < g.dim; ++c) dacc += td.dm_dt.comp[c] * pf.df_dm.comp[c];
  for (size_t k = 0; k < ms.rho.size(); ++k)
    dacc += td.drho_dt[k].comp[0] * pf.df_drho[k].comp[0];
  dacc += td.ds_dt.comp[0] * pf.df_ds.comp[0];
  ec.ddt = dacc.sum() * g.cell_volume();
  ec.residual = std::abs(ec.ddt - ec.rate);
  return ec;
}

}  // namespace openfluid
