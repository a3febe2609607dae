#include <doctest.h>

#include <random>
#include <stdexcept>

#include "openfluid/thermo.hpp"

using namespace openfluid;

namespace {

// central finite differences of the internal energy, the independent
// oracle for the closed-form p and T
double fd_eps_rho(const StateEquation& eq, double rho, double s, double h = 1e-6) {
  return (internal_energy(eq, rho + h, s) - internal_energy(eq, rho - h, s)) / (2 * h);
}
double fd_eps_s(const StateEquation& eq, double rho, double s, double h = 1e-6) {
  return (internal_energy(eq, rho, s + h) - internal_energy(eq, rho, s - h)) / (2 * h);
}

}  // namespace

TEST_CASE("barotropic pressure: eps = rho^2/2 gives p = rho^2/2 at rho=2 -> 2") {
  StateEquation eq = StateEquation::barotropic(0.5, 2.0);
  CHECK(pressure(eq, 2.0, 0.0) == doctest::Approx(2.0));
  // oracle: p = eps_rho * rho - eps via finite differences
  const double p_fd = fd_eps_rho(eq, 2.0, 0.0) * 2.0 - internal_energy(eq, 2.0, 0.0);
  CHECK(pressure(eq, 2.0, 0.0) == doctest::Approx(p_fd).epsilon(1e-8));
}

TEST_CASE("ideal gas closed form vs finite differences at random states") {
  StateEquation eq = StateEquation::ideal(1.2, 1.4, 1.5, 0.9, 0.1);
  const double R = eq.c_v * (eq.gamma - 1.0);
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> Urho(0.4, 2.5), Us(-0.6, 0.6);
  for (int k = 0; k < 100; ++k) {
    const double rho = Urho(rng);
    const double s = Us(rng) * rho;
    ThermoPoint tp = thermo_quantities(eq, rho, s);
    CHECK(tp.p == doctest::Approx(rho * R * tp.T).epsilon(1e-12));
    const double p_fd = fd_eps_rho(eq, rho, s) * rho + fd_eps_s(eq, rho, s) * s -
                        internal_energy(eq, rho, s);
    CHECK(tp.p == doctest::Approx(p_fd).epsilon(1e-6));
    CHECK(tp.T == doctest::Approx(fd_eps_s(eq, rho, s)).epsilon(1e-6));
    // rho g + s T = eps + p to near round-off
    CHECK(std::abs(rho * tp.g + s * tp.T - tp.eps - tp.p) <
          1e-12 * (std::abs(tp.eps) + std::abs(tp.p)));
  }
}

TEST_CASE("barotropic has T = 0 and g = h") {
  StateEquation eq = StateEquation::barotropic(0.7, 1.8);
  ThermoPoint tp = thermo_quantities(eq, 1.3, 0.4);
  CHECK(tp.T == doctest::Approx(0.0));
  CHECK(tp.g == doctest::Approx(tp.h_enth));
}

TEST_CASE("ideal gas hits the reference temperature at the reference state") {
  StateEquation eq = StateEquation::ideal(1.0, 1.4, 2.5, 1.3, 0.2);
  ThermoPoint tp = thermo_quantities(eq, eq.rho_r, eq.sigma_r * eq.rho_r);
  CHECK(tp.T == doctest::Approx(eq.T_r));
}

TEST_CASE("degenerate density raises") {
  StateEquation eq = StateEquation::ideal(1.0, 1.4);
  CHECK_THROWS_AS(pressure(eq, eq.rho_floor / 2.0, 0.0), std::domain_error);
}

TEST_CASE("entropy inversion from (rho, T)") {
  StateEquation eq = StateEquation::ideal(0.9, 1.3, 1.1, 1.2, -0.1);
  const double rho = 1.7, s = 0.35;
  const double T = eps_s(eq, rho, s);
  CHECK(entropy_from_rho_T(eq, rho, T) == doctest::Approx(s).epsilon(1e-10));

  StateEquation baro = StateEquation::barotropic(1.0, 2.0);
  CHECK_THROWS_AS(entropy_from_rho_T(baro, 1.0, 0.5), std::domain_error);
}

TEST_CASE("gamma and c_v validation") {
  CHECK_THROWS_AS(StateEquation::ideal(1.0, 0.9), std::invalid_argument);
  CHECK_THROWS_AS(StateEquation::ideal(-1.0, 1.4), std::invalid_argument);
  CHECK_THROWS_AS(StateEquation::barotropic(1.0, 1.0), std::invalid_argument);
}
