#include <doctest.h>

#include <cmath>

#include "openfluid/brackets.hpp"
#include "openfluid/ops.hpp"

using namespace openfluid;

namespace {

std::vector<FluxClosure> closures_of(const Grid& g, FluxMode mode) {
  std::vector<FluxClosure> out;
  for (int p = 0; p < 2 * g.dim; ++p) {
    FluxClosure c;
    c.mode = mode;
    c.patch = p;
    out.push_back(c);
  }
  return out;
}

State closed_state(GridPtr g, const ModelSpec& m) {
  State st = State::zeros(g, m);
  for (int j = 0; j < g->ny(); ++j)
    for (int i = 0; i < g->nx(); ++i) {
      const int c = g->flat(i, j);
      const double x = g->cell_x(i), y = g->cell_y(j);
      st.u.comp[0](c) = 0.25 * std::sin(M_PI * x) * std::cos(M_PI * y);
      st.u.comp[1](c) = -0.2 * std::cos(M_PI * x) * std::sin(M_PI * y);
      st.rho[0].comp[0](c) = 1.0 + 0.2 * std::cos(M_PI * x) * std::cos(M_PI * y);
      st.s.comp[0](c) = 0.4 * st.rho[0].comp[0](c);
    }
  return st;
}

State open_state(GridPtr g, const ModelSpec& m) {
  State st = State::zeros(g, m);
  for (int j = 0; j < g->ny(); ++j)
    for (int i = 0; i < g->nx(); ++i) {
      const int c = g->flat(i, j);
      const double x = g->cell_x(i), y = g->cell_y(j);
      st.u.comp[0](c) = 0.5 + 0.15 * std::sin(2 * x + y);
      st.u.comp[1](c) = 0.1 * std::cos(x);
      st.rho[0].comp[0](c) = 1.1 + 0.25 * std::cos(x * y);
      st.s.comp[0](c) = 0.5 + 0.1 * std::sin(x);
    }
  return st;
}

}  // namespace

TEST_CASE("functional derivatives") {
  auto g = make_grid(2, {{{0, 1}, {0, 1}}}, {10, 10});
  ModelSpec m = make_euler(StateEquation::ideal(1.0, 1.4));
  State st = open_state(g, m);
  MState ms = to_mstate(m, st);

  SUBCASE("total mass: df/drho = 1, others 0") {
    FunctionalPartials fp = functional_derivative(DiscreteFunctional::total_mass(), ms);
    CHECK((fp.df_drho[0].comp[0] - 1.0).abs().maxCoeff() < 1e-14);
    CHECK(fp.df_dm.max_abs() < 1e-14);
    CHECK(fp.df_ds.max_abs() < 1e-14);
  }
  SUBCASE("momentum component: df/dm = e_i") {
    FunctionalPartials fp = functional_derivative(DiscreteFunctional::momentum(1), ms);
    CHECK(fp.df_dm.comp[0].abs().maxCoeff() < 1e-14);
    CHECK((fp.df_dm.comp[1] - 1.0).abs().maxCoeff() < 1e-14);
  }
  SUBCASE("kinetic energy analytic partials match the fd fallback") {
    DiscreteFunctional kin = DiscreteFunctional::kinetic_energy();
    FunctionalPartials fp = functional_derivative(kin, ms);
    DiscreteFunctional kin_fd = kin;
    kin_fd.partials = nullptr;  // force finite differences
    FunctionalPartials fd = functional_derivative(kin_fd, ms);
    CHECK((fp.df_dm.comp[0] - fd.df_dm.comp[0]).abs().maxCoeff() < 1e-6);
    CHECK((fp.df_drho[0].comp[0] - fd.df_drho[0].comp[0]).abs().maxCoeff() < 1e-6);
  }
  SUBCASE("evaluator: mass functional equals the mass integral") {
    CHECK(evaluate_functional(DiscreteFunctional::total_mass(), ms) ==
          doctest::Approx(volume_integral(st.rho[0])));
  }
}

TEST_CASE("lie-poisson bracket: antisymmetry and transport identities") {
  auto g = make_grid(2, {{{0, 1}, {0, 1}}}, {16, 16});
  ModelSpec m = make_euler(StateEquation::ideal(1.0, 1.4));
  State st = closed_state(g, m);
  auto cat = DiscreteFunctional::catalogue(m, 2);

  SUBCASE("{f,f} = 0 and {f,h} = -{h,f} for catalogue pairs") {
    double scale = 0.0;
    for (const auto& f : cat) {
      BracketValue v = lie_poisson_bracket(f, f, m, st);
      scale = std::max(scale, std::abs(v.total));
      CHECK(std::abs(v.total) < 1e-10 * (1.0 + scale));
    }
    for (size_t a = 0; a < cat.size(); ++a)
      for (size_t b = a + 1; b < cat.size(); ++b) {
        BracketValue fb = lie_poisson_bracket(cat[a], cat[b], m, st);
        BracketValue bf = lie_poisson_bracket(cat[b], cat[a], m, st);
        CHECK(std::abs(fb.total + bf.total) <
              1e-10 * (1.0 + std::abs(fb.total) + std::abs(bf.total)));
      }
  }

  SUBCASE("mass against the hamiltonian: boundary ~ 0, bulk ~ -int div(rho u)") {
    BracketValue v = lie_poisson_bracket(DiscreteFunctional::total_mass(),
                                         DiscreteFunctional::hamiltonian(m), m, st);
    const double h = g->dx[0];
    CHECK(std::abs(v.total) < 1e-12);  // partial fields of mass are constant
    CHECK(std::abs(v.boundary) < 5.0 * h * h);
    Field flux = Field::vector(g, FieldKind::density);
    flux.comp[0] = st.rho[0].comp[0] * st.u.comp[0];
    flux.comp[1] = st.rho[0].comp[0] * st.u.comp[1];
    const double div_int = component_integral(divergence(flux), 0);
    CHECK(std::abs(v.bulk - (-div_int)) < 5.0 * h * h);
  }

  SUBCASE("entropy functional: bulk cancels the divergence integral") {
    State ost = open_state(g, m);
    BracketValue v = lie_poisson_bracket(DiscreteFunctional::total_entropy(),
                                         DiscreteFunctional::hamiltonian(m), m, ost);
    Field flux = Field::vector(g, FieldKind::density);
    flux.comp[0] = ost.s.comp[0] * ost.u.comp[0];
    flux.comp[1] = ost.s.comp[0] * ost.u.comp[1];
    const double div_int = component_integral(divergence(flux), 0);
    CHECK(std::abs(v.total) < 1e-12);
    CHECK(std::abs(v.bulk + div_int) < 5.0 * g->dx[0] * g->dx[0]);
  }
}

TEST_CASE("extended evolution identity") {
  auto g = make_grid(2, {{{0, 1}, {0, 1}}}, {24, 24});
  ModelSpec m = make_euler(StateEquation::ideal(1.0, 1.4));
  const double h = g->dx[0];

  SUBCASE("closed energy conservation: R(h) = 0 and ddt = O(dx^2)") {
    State st = closed_state(g, m);
    EvolutionCheck ec = extended_evolution_rate(DiscreteFunctional::hamiltonian(m), m, st, {},
                                                closures_of(*g, FluxMode::closed));
    CHECK(std::abs(ec.rate) < 5.0 * h * h);
    CHECK(ec.residual < 10.0 * h * h);
  }

  SUBCASE("mass with theta_rho = 0.1 on closed walls: rate = 0.1") {
    State st = closed_state(g, m);
    BulkSourceSpec bulk;
    bulk.theta_rho = {Expression::parse("0.1")};
    EvolutionCheck ec = extended_evolution_rate(DiscreteFunctional::total_mass(), m, st, bulk,
                                                closures_of(*g, FluxMode::closed));
    CHECK(ec.rate == doctest::Approx(0.1).epsilon(1e-10));
    CHECK(ec.residual < 1e-12);
  }

  SUBCASE("momentum balance matches the pressure-gradient integral") {
    State st = closed_state(g, m);
    EvolutionCheck ec = extended_evolution_rate(DiscreteFunctional::momentum(0), m, st, {},
                                                closures_of(*g, FluxMode::closed));
    // independent evaluation: d/dt int m_x = int d_x(h - m.dh/dm - rho dh/drho - s dh/ds)
    MState ms = to_mstate(m, st);
    HamiltonianEval he = hamiltonian_density(m, ms.m, ms.rho, ms.s, std::nullopt);
    DiscreteFunctional H = DiscreteFunctional::hamiltonian(m);
    FunctionalPartials hp = functional_derivative(H, ms);
    Field integrand = Field::scalar(g, FieldKind::density);
    integrand.comp[0] = he.density.comp[0] - ms.m.comp[0] * hp.df_dm.comp[0] -
                        ms.m.comp[1] * hp.df_dm.comp[1] -
                        ms.rho[0].comp[0] * hp.df_drho[0].comp[0] -
                        ms.s.comp[0] * hp.df_ds.comp[0];
    Field gi = gradient(integrand.with_kind(FieldKind::function));
    const double expect = component_integral(gi, 0);
    CHECK(std::abs(ec.rate - expect) < 10.0 * h * h);
  }

  SUBCASE("open flow: residual O(dx^2) for the whole catalogue") {
    State st = open_state(g, m);
    BulkSourceSpec bulk;
    bulk.b = {Expression::parse("0.05*sin(x)"), Expression::parse("0.02")};
    bulk.theta_rho = {Expression::parse("0.1")};
    bulk.theta_s = Expression::parse("0.03");
    std::vector<FluxClosure> closures = closures_of(*g, FluxMode::free_open);
    for (const auto& f : DiscreteFunctional::catalogue(m, 2)) {
      EvolutionCheck ec = extended_evolution_rate(f, m, st, bulk, closures);
      const double scale = 1.0 + std::abs(ec.ddt) + std::abs(ec.rate);
      CHECK(ec.residual < 15.0 * h * h * scale);
    }
  }

  SUBCASE("case (A): closed fluxes kill the boundary bracket") {
    State st = closed_state(g, m);
    for (const auto& f : DiscreteFunctional::catalogue(m, 2)) {
      EvolutionCheck ec = extended_evolution_rate(f, m, st, {},
                                                  closures_of(*g, FluxMode::closed));
      CHECK(std::abs(ec.lp.boundary) < 1e-11);
      CHECK(std::abs(ec.boundary_sources) < 1e-14);
    }
  }

  SUBCASE("case (B): free-open fluxes cancel the boundary bracket facewise") {
    State st = open_state(g, m);
    for (const auto& f : DiscreteFunctional::catalogue(m, 2)) {
      EvolutionCheck ec = extended_evolution_rate(f, m, st, {},
                                                  closures_of(*g, FluxMode::free_open));
      const double scale = 1.0 + std::abs(ec.lp.boundary);
      CHECK(std::abs(ec.lp.boundary + ec.boundary_sources) < 1e-12 * scale);
    }
  }
}

TEST_CASE("rotating-model bracket keeps the catalogue honest") {
  auto g = make_grid(2, {{{0, 1}, {0, 1}}}, {16, 16});
  ModelSpec m = make_rotating(StateEquation::ideal(1.0, 1.4),
                              {Expression::parse("-0.3*y"), Expression::parse("0.3*x")},
                              Expression::parse("0.1*x"));
  State st = closed_state(g, m);
  auto cat = DiscreteFunctional::catalogue(m, 2);
  for (size_t a = 0; a < cat.size(); ++a)
    for (size_t b = a; b < cat.size(); ++b) {
      BracketValue fb = lie_poisson_bracket(cat[a], cat[b], m, st);
      BracketValue bf = lie_poisson_bracket(cat[b], cat[a], m, st);
      CHECK(std::abs(fb.total + bf.total) <
            1e-10 * (1.0 + std::abs(fb.total) + std::abs(bf.total)));
    }
  // the hamiltonian functional reproduces h(m - rho R) through the catalogue
  MState ms = to_mstate(m, st);
  HamiltonianEval he = hamiltonian_density(m, ms.m, ms.rho, ms.s, std::nullopt);
  const double direct = volume_integral(he.density);
  CHECK(evaluate_functional(DiscreteFunctional::hamiltonian(m), ms) ==
        doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("multicomponent bracket: antisymmetry and per-component evolution") {
  auto g = make_grid_1d(0, 1, 32);
  ModelSpec m = make_multicomponent(StateEquation::ideal(1.0, 1.4), {{0.5, 2.0}, {0.3, 1.8}});
  State st = State::zeros(g, m);
  for (int i = 0; i < 32; ++i) {
    const double x = g->cell_x(i);
    st.u.comp[0](i) = 0.3 + 0.1 * std::sin(2 * M_PI * x);
    st.rho[0].comp[0](i) = 1.0 + 0.2 * std::cos(M_PI * x);
    st.rho[1].comp[0](i) = 0.6 + 0.1 * std::sin(M_PI * x);
    st.s.comp[0](i) = 0.3;
  }
  auto cat = DiscreteFunctional::catalogue(m, 1);
  CHECK(cat.size() == 6);  // mass, mass_2, entropy, momentum_x, kinetic, hamiltonian
  for (size_t a = 0; a < cat.size(); ++a)
    for (size_t b = a; b < cat.size(); ++b) {
      BracketValue fb = lie_poisson_bracket(cat[a], cat[b], m, st);
      BracketValue bf = lie_poisson_bracket(cat[b], cat[a], m, st);
      CHECK(std::abs(fb.total + bf.total) <
            1e-10 * (1.0 + std::abs(fb.total) + std::abs(bf.total)));
    }

  BulkSourceSpec bulk;
  bulk.theta_rho = {Expression::parse("0.04"), Expression::parse("0.01")};
  std::vector<FluxClosure> closures(2);
  closures[0].patch = 0;
  closures[1].patch = 1;
  EvolutionCheck ec = extended_evolution_rate(cat[1], m, st, bulk, closures);
  CHECK(ec.rate == doctest::Approx(0.01).epsilon(1e-9));  // d/dt of the second mass
  CHECK(ec.residual < 1e-11);
}
