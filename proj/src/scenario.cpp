#include "openfluid/scenario.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "openfluid/io.hpp"
#include "openfluid/ops.hpp"

namespace openfluid {

using nlohmann::json;

namespace {

Expression expr_of(const json& j, const std::string& where) {
  try {
    if (j.is_number()) return Expression::parse(format_double(j.get<double>()));
    return Expression::parse(j.get<std::string>());
  } catch (const std::exception& e) {
    throw std::invalid_argument("config error at " + where + ": " + e.what());
  }
}

std::vector<Expression> expr_list(const json& j, const std::string& where) {
  std::vector<Expression> out;
  if (j.is_array()) {
    int k = 0;
    for (const auto& e : j) out.push_back(expr_of(e, where + "[" + std::to_string(k++) + "]"));
  } else {
    out.push_back(expr_of(j, where));
  }
  return out;
}

StateEquation parse_eos(const json& j) {
  const std::string family = j.value("family", "ideal_gas");
  const double floor = j.value("rho_floor", 1e-10);
  if (family == "barotropic")
    return StateEquation::barotropic(j.value("kappa_b", 1.0), j.value("gamma", 2.0), floor);
  if (family == "ideal_gas")
    return StateEquation::ideal(j.value("c_v", 1.0), j.value("gamma", 1.4), j.value("T_r", 1.0),
                                j.value("rho_r", 1.0), j.value("sigma_r", 0.0), floor);
  throw std::invalid_argument("config error at model.state_equation.family: unknown '" +
                              family + "'");
}

FluxMode parse_mode(const std::string& m) {
  if (m == "closed") return FluxMode::closed;
  if (m == "inflow") return FluxMode::inflow;
  if (m == "outflow_viscous") return FluxMode::outflow_viscous;
  if (m == "outflow_inviscid") return FluxMode::outflow_inviscid;
  if (m == "free_open") return FluxMode::free_open;
  if (m == "prescribed") return FluxMode::prescribed;
  throw std::invalid_argument("config error at boundaries[].mode: unknown '" + m + "'");
}

}  // namespace

State Scenario::initial_state() const {
  State st = State::zeros(grid, model);
  st.u = Field::vector_from_expressions(grid, FieldKind::function, u0);
  for (size_t k = 0; k < st.rho.size(); ++k)
    st.rho[k] = Field::from_expression(grid, FieldKind::density, rho0[k]);
  if (s0.valid()) st.s = Field::from_expression(grid, FieldKind::density, s0);
  if (st.tensor)
    for (int c = 0; c < st.tensor->n_comp() && c < static_cast<int>(tensor0.size()); ++c)
      if (tensor0[c].valid())
        for (int j = 0; j < grid->ny(); ++j)
          for (int i = 0; i < grid->nx(); ++i)
            st.tensor->comp[c](grid->flat(i, j)) =
                tensor0[c](grid->cell_x(i), grid->cell_y(j));
  return st;
}

Scenario parse_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("config error: invalid JSON: ") + e.what());
  }
  Scenario sc;
  sc.config_text = text;

  // grid
  if (!j.contains("grid")) throw std::invalid_argument("config error: missing 'grid'");
  const auto& jg = j["grid"];
  const int dim = jg.value("dim", 1);
  std::array<std::array<double, 2>, 2> ext{{{0.0, 1.0}, {0.0, 1.0}}};
  if (jg.contains("extents")) {
    const auto& je = jg["extents"];
    for (int a = 0; a < dim && a < static_cast<int>(je.size()); ++a) {
      ext[a][0] = je[a][0].get<double>();
      ext[a][1] = je[a][1].get<double>();
    }
  }
  std::array<int, 2> cells{8, 8};
  if (jg.contains("cells")) {
    const auto& jc = jg["cells"];
    if (jc.is_array())
      for (int a = 0; a < dim && a < static_cast<int>(jc.size()); ++a)
        cells[a] = jc[a].get<int>();
    else
      cells[0] = cells[1] = jc.get<int>();
  }
  std::vector<std::string> labels;
  if (jg.contains("patch_labels"))
    for (const auto& l : jg["patch_labels"]) labels.push_back(l.get<std::string>());
  try {
    sc.grid = make_grid(dim, ext, cells, labels);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("config error at grid: ") + e.what());
  }

  // model
  if (!j.contains("model")) throw std::invalid_argument("config error: missing 'model'");
  const auto& jm = j["model"];
  const std::string family = jm.value("family", "euler");
  StateEquation eos =
      jm.contains("state_equation") ? parse_eos(jm["state_equation"]) : StateEquation::ideal(1.0, 1.4);
  std::vector<Expression> R;
  if (jm.contains("R")) R = expr_list(jm["R"], "model.R");
  Expression phi, Z;
  if (jm.contains("phi")) phi = expr_of(jm["phi"], "model.phi");
  if (jm.contains("Z")) Z = expr_of(jm["Z"], "model.Z");
  std::optional<double> omega;
  if (jm.contains("omega")) omega = jm["omega"].get<double>();

  if (family == "euler") {
    sc.model = make_euler(eos);
  } else if (family == "euler_rotating_gravity") {
    sc.model = make_rotating(eos, R, phi, omega);
  } else if (family == "shallow_water_rotating") {
    sc.model = make_shallow_water(jm.value("g_const", 9.81), R, Z, omega);
  } else if (family == "multicomponent_euler") {
    std::vector<std::array<double, 2>> comps;
    for (const auto& c : jm.value("components", json::array()))
      comps.push_back({c.value("kappa_b", 1.0), c.value("gamma", 2.0)});
    if (comps.empty()) throw std::invalid_argument("config error: multicomponent needs components");
    sc.model = make_multicomponent(eos, comps);
  } else if (family == "mhd") {
    sc.model = make_mhd(eos);
  } else if (family == "euler_korteweg") {
    sc.model = make_korteweg(eos, jm.value("lambda", 0.0));
  } else if (family == "tensor_advected") {
    TensorSlotSpec slot;
    if (jm.contains("tensor")) {
      const auto& jt = jm["tensor"];
      slot.rank = TensorRank{jt.value("p", 1), jt.value("q", 0)};
      slot.kind = jt.value("kind", "density") == "density" ? FieldKind::density
                                                           : FieldKind::function;
      slot.coupling = jt.value("coupling", 1.0);
    }
    sc.model = make_tensor_advected(eos, slot);
  } else {
    throw std::invalid_argument("config error at model.family: unknown '" + family + "'");
  }
  if (jm.contains("sigma_ext")) sc.model.sigma_ext = expr_list(jm["sigma_ext"], "model.sigma_ext");

  // curl R = 2 omega spot check
  if (sc.model.omega && sc.grid->dim == 2 && !sc.model.R.empty()) {
    Field Rf = coriolis_field(sc.model, sc.grid);
    Field curl = curl2d(Rf);
    const double err = (curl.comp[0] - 2.0 * (*sc.model.omega)).abs().maxCoeff();
    const double h = std::max(sc.grid->dx[0], sc.grid->dx[1]);
    if (err > 10.0 * h * h + 1e-8)
      throw std::invalid_argument("config error at model.R: curl R != 2 omega (max dev " +
                                  format_double(err) + ")");
  }

  // initial conditions
  if (!j.contains("initial")) throw std::invalid_argument("config error: missing 'initial'");
  const auto& ji = j["initial"];
  sc.u0 = ji.contains("u") ? expr_list(ji["u"], "initial.u")
                           : std::vector<Expression>{Expression::parse("0"), Expression::parse("0")};
  while (sc.u0.size() < 2) sc.u0.push_back(Expression::parse("0"));
  if (ji.contains("rho"))
    sc.rho0 = expr_list(ji["rho"], "initial.rho");
  else if (ji.contains("h"))
    sc.rho0 = expr_list(ji["h"], "initial.h");
  else
    throw std::invalid_argument("config error: missing initial.rho");
  if (static_cast<int>(sc.rho0.size()) != sc.model.n_components())
    throw std::invalid_argument("config error: initial.rho needs one expression per component");
  if (ji.contains("s")) sc.s0 = expr_of(ji["s"], "initial.s");
  if (ji.contains("tensor")) sc.tensor0 = expr_list(ji["tensor"], "initial.tensor");
  if (ji.contains("B")) sc.tensor0 = expr_list(ji["B"], "initial.B");

  // bulk sources
  if (j.contains("bulk_sources")) {
    const auto& jb = j["bulk_sources"];
    if (jb.contains("b")) sc.bulk.b = expr_list(jb["b"], "bulk_sources.b");
    if (jb.contains("theta_rho"))
      sc.bulk.theta_rho = expr_list(jb["theta_rho"], "bulk_sources.theta_rho");
    if (jb.contains("theta_h"))
      sc.bulk.theta_rho = expr_list(jb["theta_h"], "bulk_sources.theta_h");
    if (jb.contains("theta_s")) sc.bulk.theta_s = expr_of(jb["theta_s"], "bulk_sources.theta_s");
    if (jb.contains("theta_tensor"))
      sc.bulk.theta_tensor = expr_list(jb["theta_tensor"], "bulk_sources.theta_tensor");
    if (jb.contains("theta_B"))
      sc.bulk.theta_tensor = expr_list(jb["theta_B"], "bulk_sources.theta_B");
  }

  // boundaries
  if (j.contains("boundaries")) {
    for (const auto& jbc : j["boundaries"]) {
      const std::string patch = jbc.value("patch", "");
      const FluxMode mode = parse_mode(jbc.value("mode", "closed"));
      FluxClosure params;
      if (jbc.contains("u0")) params.u0 = expr_list(jbc["u0"], "boundaries.u0");
      if (jbc.contains("rho0")) params.rho0 = expr_list(jbc["rho0"], "boundaries.rho0");
      if (jbc.contains("s0")) params.s0 = expr_of(jbc["s0"], "boundaries.s0");
      if (jbc.contains("T0")) params.T0 = expr_of(jbc["T0"], "boundaries.T0");
      if (jbc.contains("nu0")) params.nu0 = expr_of(jbc["nu0"], "boundaries.nu0");
      if (jbc.contains("J")) params.J_presc = expr_list(jbc["J"], "boundaries.J");
      if (jbc.contains("j_rho")) params.j_rho_presc = expr_list(jbc["j_rho"], "boundaries.j_rho");
      if (jbc.contains("j_s")) params.j_s_presc = expr_of(jbc["j_s"], "boundaries.j_s");
      if (jbc.contains("j_tensor"))
        params.j_tensor_presc = expr_list(jbc["j_tensor"], "boundaries.j_tensor");
      try {
        sc.closures.push_back(make_flux_spec(mode, params, patch, *sc.grid));
      } catch (const std::exception& e) {
        throw std::invalid_argument("config error at boundaries[" + patch + "]: " + e.what());
      }
    }
  }

  // time and output controls
  if (j.contains("time")) {
    const auto& jt = j["time"];
    sc.dt = jt.value("dt", 1e-3);
    sc.t_end = jt.value("t_end", 1.0);
    sc.cfl = jt.value("cfl", 0.5);
    sc.hard_cfl_error = jt.value("cfl_mode", "error") != "warn";
    const std::string scheme = jt.value("scheme", "rk4");
    if (scheme != "rk4")
      throw std::invalid_argument("config error at time.scheme: only rk4 is available");
  }
  if (j.contains("output")) {
    const auto& jo = j["output"];
    sc.snapshot_every = jo.value("snapshot_every", 0);
    sc.binary_snapshots = jo.value("binary_snapshots", false);
  }
  sc.seed = j.value("seed", 0u);

  // everything must parse before any allocation-heavy run starts
  return sc;
}

Scenario load_scenario(const std::string& config_path) {
  std::ifstream in(config_path);
  if (!in) throw std::invalid_argument("config error: cannot open " + config_path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string scenario_hash(const std::string& text) {
  // FNV-1a 64
  unsigned long long h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", h);
  return buf;
}

RunRecord run_scenario(const Scenario& sc, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  RunRecord rec;
  rec.scenario_hash = scenario_hash(sc.config_text);

  State st = sc.initial_state();
  check_state_admissible(sc.model, st);

  const bool has_s = family_has_entropy(sc.model.family);
  const bool splits_defined = sc.model.family == ModelFamily::euler ||
                              sc.model.family == ModelFamily::euler_rotating_gravity ||
                              sc.model.family == ModelFamily::shallow_water_rotating;

  std::ostringstream ts;
  ts << "t";
  for (int k = 0; k < sc.model.n_components(); ++k)
    ts << ",mass" << (k == 0 ? "" : "_" + std::to_string(k + 1));
  ts << ",entropy,energy_total,energy_kinetic,energy_internal,energy_potential";
  for (int k = 0; k < sc.model.n_components(); ++k) {
    const std::string suffix = k == 0 ? "mass" : "mass_" + std::to_string(k + 1);
    ts << ",bulk_" << suffix << ",boundary_" << suffix << ",residual_" << suffix;
  }
  ts << ",bulk_entropy,boundary_entropy,residual_entropy";
  ts << ",bulk_energy,boundary_energy,residual_energy\n";

  Field phi = gravity_potential_field(sc.model, sc.grid);
  Field Z = topography_field(sc.model, sc.grid);

  auto emit_row = [&](const State& s) {
    ts << format_double(s.t);
    for (const auto& r : s.rho) ts << "," << format_double(volume_integral(r));
    ts << "," << format_double(has_s ? volume_integral(s.s) : 0.0);
    const double etot = volume_integral(energy_density(sc.model, s));
    Eigen::ArrayXd usq = s.u.comp[0] * s.u.comp[0];
    if (sc.grid->dim == 2) usq += s.u.comp[1] * s.u.comp[1];
    Eigen::ArrayXd rho_tot = s.rho[0].comp[0];
    for (size_t k = 1; k < s.rho.size(); ++k) rho_tot += s.rho[k].comp[0];
    const double ekin = (0.5 * rho_tot * usq).sum() * sc.grid->cell_volume();
    double epot = 0.0;
    if (sc.model.family == ModelFamily::euler_rotating_gravity)
      epot = (s.rho[0].comp[0] * phi.comp[0]).sum() * sc.grid->cell_volume();
    else if (sc.model.family == ModelFamily::shallow_water_rotating) {
      Eigen::ArrayXd surf = s.rho[0].comp[0] + Z.comp[0];
      epot = (0.5 * sc.model.g_const * surf * surf).sum() * sc.grid->cell_volume();
    }
    ts << "," << format_double(etot) << "," << format_double(ekin) << ","
       << format_double(etot - ekin - epot) << "," << format_double(epot);

    for (int k = 0; k < sc.model.n_components(); ++k) {
      BudgetReport r =
          quantity_budget(BudgetKind::mass, k, sc.model, s, sc.bulk, sc.closures);
      ts << "," << format_double(r.bulk) << "," << format_double(r.boundary) << ","
         << format_double(r.residual);
      auto& mr = rec.max_budget_residuals[r.quantity];
      mr = std::max(mr, std::abs(r.residual));
    }
    if (has_s) {
      BudgetReport r = quantity_budget(BudgetKind::entropy, 0, sc.model, s, sc.bulk, sc.closures);
      ts << "," << format_double(r.bulk) << "," << format_double(r.boundary) << ","
         << format_double(r.residual);
      auto& mr = rec.max_budget_residuals["entropy"];
      mr = std::max(mr, std::abs(r.residual));
    } else {
      ts << ",0,0,0";
    }
    {
      BudgetReport r = energy_budget(sc.model, s, sc.bulk, sc.closures, EnergyForm::generic);
      ts << "," << format_double(r.bulk) << "," << format_double(r.boundary) << ","
         << format_double(r.residual);
      auto& mr = rec.max_budget_residuals["energy"];
      mr = std::max(mr, std::abs(r.residual));
    }
    ts << "\n";
    (void)splits_defined;
  };

  auto snap_path = [&](int step, bool binary) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "snapshot_%06d.%s", step, binary ? "bin" : "csv");
    return (fs::path(out_dir) / buf).string();
  };

  const int nsteps =
      std::max(1, static_cast<int>(std::ceil(sc.t_end / sc.dt - 1e-12)));
  const double dt = sc.t_end / nsteps;
  StepControls ctl;
  ctl.cfl = sc.cfl;
  ctl.hard_cfl_error = sc.hard_cfl_error;

  std::ostringstream frames_index;
  frames_index << "step,t,path\n";
  auto snapshot = [&](const State& s, int step) {
    const std::string p = snap_path(step, false);
    write_snapshot_csv(p, sc.model, s);
    if (sc.binary_snapshots) write_snapshot_binary(snap_path(step, true), sc.model, s);
    frames_index << step << "," << format_double(s.t) << "," << p << "\n";
    return p;
  };

  emit_row(st);
  std::string last_snapshot = snapshot(st, 0);
  int step = 0;
  try {
    for (step = 1; step <= nsteps; ++step) {
      st = rk4_step(sc.model, st, sc.bulk, sc.closures, dt, ctl);
      emit_row(st);
      if (sc.snapshot_every > 0 && step % sc.snapshot_every == 0)
        last_snapshot = snapshot(st, step);
    }
    last_snapshot = snapshot(st, nsteps);
    rec.steps = nsteps;
  } catch (const std::exception& e) {
    rec.aborted = true;
    rec.abort_reason = e.what();
    rec.steps = step - 1;
  }
  rec.t_final = st.t;

  rec.timeseries_path = (fs::path(out_dir) / "timeseries.csv").string();
  write_file_atomic(rec.timeseries_path, ts.str());
  write_file_atomic((fs::path(out_dir) / "snapshots.csv").string(), frames_index.str());
  rec.final_snapshot_path = last_snapshot;

  json summary;
  summary["scenario_hash"] = rec.scenario_hash;
  summary["steps"] = rec.steps;
  summary["t_final"] = rec.t_final;
  summary["aborted"] = rec.aborted;
  if (rec.aborted) summary["abort_reason"] = rec.abort_reason;
  summary["final_snapshot"] = rec.final_snapshot_path;
  for (const auto& [k, v] : rec.max_budget_residuals)
    summary["max_budget_residuals"][k] = v;
  write_file_atomic((fs::path(out_dir) / "run_summary.json").string(), summary.dump(2) + "\n");
  return rec;
}

}  // namespace openfluid
