#include <doctest.h>

#include <cmath>

#include "openfluid/dynamics.hpp"
#include "openfluid/ops.hpp"

using namespace openfluid;

namespace {

std::vector<FluxClosure> closed_box(const Grid& g) {
  std::vector<FluxClosure> out;
  for (int p = 0; p < 2 * g.dim; ++p) {
    FluxClosure c;
    c.patch = p;
    out.push_back(c);
  }
  return out;
}

std::vector<FluxClosure> free_box(const Grid& g) {
  std::vector<FluxClosure> out;
  for (int p = 0; p < 2 * g.dim; ++p) {
    FluxClosure c;
    c.patch = p;
    c.mode = FluxMode::free_open;
    out.push_back(c);
  }
  return out;
}

State smooth_closed_state(GridPtr g, const ModelSpec& m) {
  State st = State::zeros(g, m);
  for (int j = 0; j < g->ny(); ++j)
    for (int i = 0; i < g->nx(); ++i) {
      const int c = g->flat(i, j);
      const double x = g->cell_x(i), y = g->cell_y(j);
      // u.n = 0 on the box boundary
      st.u.comp[0](c) = 0.2 * std::sin(M_PI * x) * std::cos(M_PI * y);
      if (g->dim == 2) st.u.comp[1](c) = -0.15 * std::cos(M_PI * x) * std::sin(M_PI * y);
      st.rho[0].comp[0](c) = 1.0 + 0.2 * std::cos(M_PI * x) * std::cos(M_PI * y);
      st.s.comp[0](c) = 0.5 * st.rho[0].comp[0](c);
    }
  return st;
}

}  // namespace

TEST_CASE("uniform state has zero tendencies") {
  auto g = make_grid(2, {{{0, 1}, {0, 1}}}, {8, 8});
  ModelSpec m = make_euler(StateEquation::ideal(1.0, 1.4));
  State st = State::zeros(g, m);
  st.rho[0].comp[0].setConstant(1.3);
  st.s.comp[0].setConstant(0.4);
  st.u.comp[0].setConstant(0.7);
  st.u.comp[1].setConstant(-0.2);
  Tendency td = compute_tendency(m, st, {}, free_box(*g), 0.0);
  CHECK(td.du_dt.max_abs() < 1e-12);
  CHECK(td.drho_dt[0].max_abs() < 1e-12);
  CHECK(td.ds_dt.max_abs() < 1e-12);
}

TEST_CASE("1d linear density advection: drho/dt = -0.1 exactly") {
  auto g = make_grid_1d(0, 1, 16);
  ModelSpec m = make_euler(StateEquation::barotropic(0.5, 2.0));
  State st = State::zeros(g, m);
  st.u.comp[0].setConstant(1.0);
  for (int i = 0; i < 16; ++i) st.rho[0].comp[0](i) = 1.0 + 0.1 * g->cell_x(i);
  Tendency td = compute_tendency(m, st, {}, free_box(*g), 0.0);
  CHECK((td.drho_dt[0].comp[0] + 0.1).abs().maxCoeff() < 1e-12);
}

TEST_CASE("mhd with constant u and B has dB/dt = 0") {
  auto g = make_grid(2, {{{0, 1}, {0, 1}}}, {8, 8});
  ModelSpec m = make_mhd(StateEquation::ideal(1.0, 1.4));
  State st = State::zeros(g, m);
  st.rho[0].comp[0].setConstant(1.0);
  st.s.comp[0].setConstant(0.3);
  st.u.comp[0].setConstant(0.4);
  st.u.comp[1].setConstant(-0.1);
  st.tensor->comp[0].setConstant(0.8);
  st.tensor->comp[1].setConstant(0.5);
  Tendency td = compute_tendency(m, st, {}, free_box(*g), 0.0);
  CHECK(td.dtensor_dt->max_abs() < 1e-12);
  CHECK(td.du_dt.max_abs() < 1e-12);
}

TEST_CASE("boundary rows after the ghost solve") {
  auto g = make_grid(2, {{{0, 1}, {0, 1}}}, {16, 16});
  ModelSpec m = make_euler(StateEquation::ideal(1.0, 1.4));
  State st = smooth_closed_state(g, m);

  SUBCASE("closed: u.n trace vanishes, flux rows at machine precision") {
    GhostState gs = apply_boundary_conditions(m, st, closed_box(*g), 0.0);
    auto rep = boundary_residual_report(m, gs, closed_box(*g));
    for (const auto& r : rep) {
      CHECK(r.mass < 1e-12);
      CHECK(r.entropy < 1e-12);
      CHECK(r.momentum < 1e-12);
    }
    auto traces = ghost_face_states(m, gs, g->all_faces());
    for (const auto& fs : traces) CHECK(std::abs(fs.un()) < 1e-13);
  }

  SUBCASE("inflow pins the prescribed state") {
    FluxClosure p;
    p.u0 = {Expression::parse("0.3"), Expression::parse("0.05")};
    p.rho0 = {Expression::parse("1.1 + 0.1*y")};
    p.s0 = Expression::parse("0.55");
    auto closures = closed_box(*g);
    closures[0] = make_flux_spec(FluxMode::inflow, p, "left", *g);
    GhostState gs = apply_boundary_conditions(m, st, closures, 0.0);
    auto traces = ghost_face_states(m, gs, g->patch_faces(0));
    for (const auto& fs : traces) {
      CHECK(fs.u[0] == doctest::Approx(0.3).epsilon(1e-12));
      CHECK(fs.u[1] == doctest::Approx(0.05).epsilon(1e-12));
      CHECK(fs.rho[0] == doctest::Approx(1.1 + 0.1 * fs.y).epsilon(1e-12));
      CHECK(fs.s == doctest::Approx(0.55).epsilon(1e-12));
    }
    auto rep = boundary_residual_report(m, gs, closures);
    CHECK(rep[0].mass < 1e-12);
    CHECK(rep[0].momentum < 1e-12);
  }

  SUBCASE("inviscid outflow pins only u.n = nu0") {
    State out_st = st;
    out_st.u.comp[0] += 0.5;  // push outflow through the right wall
    FluxClosure p;
    p.nu0 = Expression::parse("0.45");
    auto closures = closed_box(*g);
    closures[1] = make_flux_spec(FluxMode::outflow_inviscid, p, "right", *g);
    GhostState gs = apply_boundary_conditions(m, out_st, closures, 0.0);
    auto traces = ghost_face_states(m, gs, g->patch_faces(1));
    for (const auto& fs : traces) CHECK(fs.un() == doctest::Approx(0.45).epsilon(1e-12));
    auto rep = boundary_residual_report(m, gs, closures);
    CHECK(rep[1].mass < 1e-12);
    CHECK(rep[1].entropy < 1e-12);
    CHECK(rep[1].momentum < 1e-12);
  }

  SUBCASE("viscous outflow pins u = u0 and T = T0") {
    FluxClosure p;
    p.u0 = {Expression::parse("0.6"), Expression::parse("0")};
    p.T0 = Expression::parse("1.2");
    auto closures = closed_box(*g);
    closures[1] = make_flux_spec(FluxMode::outflow_viscous, p, "right", *g);
    GhostState gs = apply_boundary_conditions(m, st, closures, 0.0);
    auto traces = ghost_face_states(m, gs, g->patch_faces(1));
    for (const auto& fs : traces) {
      CHECK(fs.u[0] == doctest::Approx(0.6).epsilon(1e-12));
      CHECK(eps_s(m.eos, fs.rho[0], fs.s) == doctest::Approx(1.2).epsilon(1e-10));
    }
  }
}

TEST_CASE("korteweg boundary row: (grad rho).n = 0 to 1e-12") {
  auto g = make_grid_1d(0, 1, 32);
  ModelSpec m = make_korteweg(StateEquation::barotropic(0.5, 2.0), 0.05);
  State st = State::zeros(g, m);
  for (int i = 0; i < 32; ++i)
    st.rho[0].comp[0](i) = 1.0 + 0.3 * std::sin(2.0 * g->cell_x(i) + 0.3);
  GhostState gs = apply_boundary_conditions(m, st, closed_box(*g), 0.0);
  auto rep = boundary_residual_report(m, gs, closed_box(*g));
  for (const auto& r : rep) CHECK(r.grad_rho_n < 1e-12);
}

TEST_CASE("external stress enters the momentum row as -J + sigma.n") {
  auto g = make_grid(2, {{{0, 1}, {0, 1}}}, {8, 8});
  ModelSpec m = make_euler(StateEquation::ideal(1.0, 1.4));
  const double p_ext = 0.7;
  m.sigma_ext = {Expression::parse("0.7"), Expression::parse("0"), Expression::parse("0"),
                 Expression::parse("0.7")};
  State st = State::zeros(g, m);
  st.rho[0].comp[0].setConstant(1.0);
  st.s.comp[0].setConstant(0.2);

  // prescribed J = sigma.n with zero mass flux: residual at machine level
  std::vector<FluxClosure> closures;
  for (int p = 0; p < 4; ++p) {
    FluxClosure c;
    c.mode = FluxMode::prescribed;
    c.patch = p;
    const char* jx = p == 0 ? "-0.7" : (p == 1 ? "0.7" : "0");
    const char* jy = p == 2 ? "-0.7" : (p == 3 ? "0.7" : "0");
    c.J_presc = {Expression::parse(jx), Expression::parse(jy)};
    closures.push_back(c);
  }
  GhostState gs = apply_boundary_conditions(m, st, closures, 0.0);
  auto rep = boundary_residual_report(m, gs, closures);
  for (const auto& r : rep) CHECK(r.momentum < 1e-12);

  // with J = 0 instead, the reported defect is |sigma.n| = p_ext
  GhostState gs2 = apply_boundary_conditions(m, st, closed_box(*g), 0.0);
  auto rep2 = boundary_residual_report(m, gs2, closed_box(*g));
  for (const auto& r : rep2) CHECK(r.momentum == doctest::Approx(p_ext).epsilon(1e-10));
}

TEST_CASE("rk4 step basics") {
  auto g = make_grid(2, {{{0, 1}, {0, 1}}}, {8, 8});
  ModelSpec m = make_euler(StateEquation::ideal(1.0, 1.4));

  SUBCASE("zero-tendency state is a fixed point") {
    State st = State::zeros(g, m);
    st.rho[0].comp[0].setConstant(1.0);
    st.s.comp[0].setConstant(0.4);
    State st2 = rk4_step(m, st, {}, closed_box(*g), 1e-3);
    CHECK((st2.rho[0].comp[0] - st.rho[0].comp[0]).abs().maxCoeff() < 1e-15);
    CHECK(st2.u.max_abs() < 1e-15);
  }
  SUBCASE("dt above the cfl bound raises") {
    State st = smooth_closed_state(g, m);
    CHECK_THROWS_AS(rk4_step(m, st, {}, closed_box(*g), 1.0), std::runtime_error);
    StepControls soft;
    soft.hard_cfl_error = false;
    CHECK_NOTHROW(rk4_step(m, st, {}, closed_box(*g), 5e-3, soft));
  }
}

TEST_CASE("time integration is 4th order in dt at fixed dx") {
  auto g = make_grid_1d(0, 1, 24);
  ModelSpec m = make_euler(StateEquation::barotropic(0.5, 2.0));
  State st0 = State::zeros(g, m);
  for (int i = 0; i < 24; ++i) {
    const double x = g->cell_x(i);
    st0.u.comp[0](i) = 0.5 + 0.1 * std::sin(2 * M_PI * x);
    st0.rho[0].comp[0](i) = 1.0 + 0.2 * std::cos(2 * M_PI * x);
  }
  FluxClosure pin;
  pin.u0 = {Expression::parse("0.5")};
  pin.rho0 = {Expression::parse("1.2")};
  pin.s0 = Expression::parse("0");
  std::vector<FluxClosure> closures = {make_flux_spec(FluxMode::inflow, pin, "left", *g)};
  FluxClosure out;
  out.nu0 = Expression::parse("0.5");
  closures.push_back(make_flux_spec(FluxMode::outflow_inviscid, out, "right", *g));

  auto advance = [&](double dt, int n) {
    State st = st0;
    StepControls ctl;
    ctl.hard_cfl_error = false;
    for (int k = 0; k < n; ++k) st = rk4_step(m, st, {}, closures, dt, ctl);
    return st;
  };
  const double T = 0.04;
  State a = advance(T / 4, 4);
  State b = advance(T / 8, 8);
  State c = advance(T / 16, 16);
  const double e1 = (a.rho[0].comp[0] - b.rho[0].comp[0]).abs().maxCoeff();
  const double e2 = (b.rho[0].comp[0] - c.rho[0].comp[0]).abs().maxCoeff();
  CHECK(e1 / e2 > 12.0);  // ~16 for a 4th-order scheme
}

TEST_CASE("closed box conserves mass and entropy to round-off") {
  auto g = make_grid(2, {{{0, 1}, {0, 1}}}, {16, 16});
  ModelSpec m = make_euler(StateEquation::ideal(1.0, 1.4));
  State st = smooth_closed_state(g, m);
  const double M0 = volume_integral(st.rho[0]);
  const double S0 = volume_integral(st.s);
  for (int k = 0; k < 25; ++k) st = rk4_step(m, st, {}, closed_box(*g), 2e-3);
  CHECK(std::abs(volume_integral(st.rho[0]) - M0) / M0 < 1e-13);
  CHECK(std::abs(volume_integral(st.s) - S0) / S0 < 1e-13);
}

TEST_CASE("momentum-form and velocity-form tendencies agree to round-off") {
  auto g = make_grid(2, {{{0, 1}, {0, 1}}}, {12, 12});
  for (ModelSpec m :
       {make_euler(StateEquation::ideal(1.0, 1.4)),
        make_rotating(StateEquation::ideal(1.0, 1.4),
                      {Expression::parse("-0.3*y"), Expression::parse("0.3*x")},
                      Expression::parse("0.1*x"))}) {
    State st = smooth_closed_state(g, m);
    BulkSourceSpec bulk;
    bulk.theta_rho = {Expression::parse("0.07")};  // exercises the theta_rho cross term
    Tendency td = compute_tendency(m, st, bulk, closed_box(*g), 0.0);
    Field R = coriolis_field(m, g);
    double worst = 0.0;
    for (int c = 0; c < 2; ++c) {
      Eigen::ArrayXd recon = st.rho[0].comp[0] * td.du_dt.comp[c] +
                             (st.u.comp[c] + R.comp[c]) * td.drho_dt[0].comp[0];
      worst = std::max(worst, (td.dm_dt.comp[c] - recon).abs().maxCoeff());
    }
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("rotating gauge shift leaves du/dt unchanged to round-off") {
  auto g = make_grid(2, {{{0, 1}, {0, 1}}}, {16, 16});
  StateEquation eos = StateEquation::ideal(1.0, 1.4);
  // f = 0.3 x^2 - 0.2 y^2 + 0.5 x: grad f = (0.6x + 0.5, -0.4y); each
  // component depends only on its own coordinate, so the discrete curl
  // of the shift vanishes identically
  ModelSpec m1 = make_rotating(eos, {Expression::parse("-0.4*y"), Expression::parse("0.4*x")},
                               Expression::parse("0.2*x"));
  ModelSpec m2 = make_rotating(
      eos, {Expression::parse("-0.4*y + 0.6*x + 0.5"), Expression::parse("0.4*x - 0.4*y")},
      Expression::parse("0.2*x"));
  State st = smooth_closed_state(g, m1);
  BulkSourceSpec b1, b2;
  b1.theta_rho = {Expression::parse("0.05 + 0.02*x")};
  b2.theta_rho = b1.theta_rho;
  b1.b = {Expression::parse("0.1"), Expression::parse("-0.05")};
  // compensated momentum source: b' = b + theta_rho grad f
  b2.b = {Expression::parse("0.1 + (0.05 + 0.02*x)*(0.6*x + 0.5)"),
          Expression::parse("-0.05 + (0.05 + 0.02*x)*(-0.4*y)")};

  Tendency t1 = compute_tendency(m1, st, b1, closed_box(*g), 0.0);
  Tendency t2 = compute_tendency(m2, st, b2, closed_box(*g), 0.0);
  const double scale = t1.du_dt.max_abs();
  for (int c = 0; c < 2; ++c)
    CHECK((t1.du_dt.comp[c] - t2.du_dt.comp[c]).abs().maxCoeff() < 1e-11 * (1.0 + scale));
}

TEST_CASE("mhd: div B drift stays at the discretization level") {
  auto g = make_grid(2, {{{0, 1}, {0, 1}}}, {24, 24});
  ModelSpec m = make_mhd(StateEquation::ideal(1.0, 1.4));
  State st = State::zeros(g, m);
  for (int j = 0; j < g->ny(); ++j)
    for (int i = 0; i < g->nx(); ++i) {
      const int c = g->flat(i, j);
      const double x = g->cell_x(i), y = g->cell_y(j);
      st.rho[0].comp[0](c) = 1.0 + 0.1 * std::cos(M_PI * x);
      st.s.comp[0](c) = 0.4;
      st.u.comp[0](c) = 0.1 * std::sin(M_PI * x) * std::cos(M_PI * y);
      st.u.comp[1](c) = -0.1 * std::cos(M_PI * x) * std::sin(M_PI * y);
      // B = curl A for A = 0.05 sin(pi x) sin(pi y): divergence-free
      st.tensor->comp[0](c) = 0.05 * M_PI * std::sin(M_PI * x) * std::cos(M_PI * y);
      st.tensor->comp[1](c) = -0.05 * M_PI * std::cos(M_PI * x) * std::sin(M_PI * y);
    }
  Field B0(g, {1, 0}, FieldKind::function);
  B0.comp = st.tensor->comp;
  const double div0 = divergence(B0).max_abs();
  for (int k = 0; k < 20; ++k) st = rk4_step(m, st, {}, closed_box(*g), 1e-3);
  Field B1(g, {1, 0}, FieldKind::function);
  B1.comp = st.tensor->comp;
  const double div1 = divergence(B1).max_abs();
  const double h = g->dx[0];
  CHECK(div1 <= div0 + 10.0 * h * h * 0.02 + 1e-10);
}

TEST_CASE("2d mixed-patch open channel runs and closes its budgets") {
  auto g = make_grid(2, {{{0, 1}, {0, 0.5}}}, {32, 16});
  ModelSpec m = make_euler(StateEquation::ideal(1.0, 1.4));
  State st = State::zeros(g, m);
  for (int j = 0; j < g->ny(); ++j)
    for (int i = 0; i < g->nx(); ++i) {
      const int c = g->flat(i, j);
      const double x = g->cell_x(i);
      const double env = std::pow(0.5 - 0.5 * std::cos(2 * M_PI * x), 3);
      st.u.comp[0](c) = 1.5 + 0.05 * env;
      st.rho[0].comp[0](c) = 1.0 + 0.1 * env;
      st.s.comp[0](c) = 0.1 * env;
    }
  FluxClosure pin;
  pin.u0 = {Expression::parse("1.5"), Expression::parse("0")};
  pin.rho0 = {Expression::parse("1")};
  pin.s0 = Expression::parse("0");
  std::vector<FluxClosure> closures = {make_flux_spec(FluxMode::inflow, pin, "left", *g)};
  FluxClosure fo;
  fo.mode = FluxMode::free_open;
  fo.patch = 1;
  closures.push_back(fo);
  FluxClosure bottom, top;
  bottom.patch = 2;
  top.patch = 3;
  closures.push_back(bottom);
  closures.push_back(top);

  for (int k = 0; k < 40; ++k) st = rk4_step(m, st, {}, closures, 2e-3);
  CHECK(st.all_finite());
  CHECK(st.rho[0].comp[0].minCoeff() > 0.5);
}

TEST_CASE("prescribed closure reconstructs the boundary state from the fluxes") {
  auto g = make_grid_1d(0, 1, 24);
  ModelSpec m = make_euler(StateEquation::ideal(1.0, 1.4));
  State st = State::zeros(g, m);
  for (int i = 0; i < 24; ++i) {
    st.u.comp[0](i) = 0.5;
    st.rho[0].comp[0](i) = 1.0;
    st.s.comp[0](i) = 0.4;
  }
  // fluxes of the outflow state (u, rho, s) = (0.75, 1.2, 0.6) at the right
  FluxClosure presc;
  presc.mode = FluxMode::prescribed;
  presc.patch = 1;
  presc.J_presc = {Expression::parse("-0.675"), Expression::parse("0")};
  presc.j_rho_presc = {Expression::parse("-0.9")};
  presc.j_s_presc = Expression::parse("-0.45");
  std::vector<FluxClosure> closures(1);
  closures[0].patch = 0;
  closures.push_back(presc);

  GhostState gs = apply_boundary_conditions(m, st, closures, 0.0);
  auto traces = ghost_face_states(m, gs, g->patch_faces(1));
  CHECK(traces[0].u[0] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(traces[0].rho[0] == doctest::Approx(1.2).epsilon(1e-12));
  CHECK(traces[0].s == doctest::Approx(0.6).epsilon(1e-12));
  auto rep = boundary_residual_report(m, gs, closures);
  CHECK(rep[1].momentum < 1e-12);
  CHECK(rep[1].mass < 1e-12);
  CHECK(rep[1].entropy < 1e-12);

  // j_rho != 0 with an implied vanishing u.n is rejected
  FluxClosure bad = presc;
  bad.J_presc = {Expression::parse("0"), Expression::parse("0.4")};  // J/j_rho tangent
  std::vector<FluxClosure> bad_closures(1);
  bad_closures[0].patch = 0;
  bad_closures.push_back(bad);
  CHECK_THROWS_AS(apply_boundary_conditions(m, st, bad_closures, 0.0), std::invalid_argument);
}
