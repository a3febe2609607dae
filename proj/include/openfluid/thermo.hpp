#pragma once

#include <string>

namespace openfluid {

enum class EosFamily { barotropic, ideal_gas };

/// State equation epsilon(rho, s) for the internal energy density.
///
/// barotropic: epsilon = kappa_b * rho^gamma (no entropy dependence).
/// ideal gas:  epsilon = c_v * rho * T with
///             T = T_r (rho/rho_r)^(gamma-1) exp((s/rho - sigma_r)/c_v),
/// the usual gamma-law written in terms of the entropy density, so that
/// p = rho R T with R = c_v (gamma - 1).
struct StateEquation {
  EosFamily family = EosFamily::ideal_gas;
  double gamma = 1.4;
  double kappa_b = 1.0;  // barotropic prefactor
  double c_v = 1.0;
  double T_r = 1.0;
  double rho_r = 1.0;
  double sigma_r = 0.0;  // specific-entropy reference
  double rho_floor = 1e-10;

  static StateEquation barotropic(double kappa_b, double gamma, double rho_floor = 1e-10);
  static StateEquation ideal(double c_v, double gamma, double T_r = 1.0, double rho_r = 1.0,
                             double sigma_r = 0.0, double rho_floor = 1e-10);
};

/// Pressure, temperature, Gibbs potential and enthalpy at one state.
/// Satisfies rho*g + s*T = epsilon + p identically.
struct ThermoPoint {
  double eps = 0.0;
  double p = 0.0;
  double T = 0.0;
  double g = 0.0;
  double h_enth = 0.0;
};

/// Throws std::domain_error when rho < rho_floor.
void check_admissible(const StateEquation& eq, double rho);

double internal_energy(const StateEquation& eq, double rho, double s);
double eps_rho(const StateEquation& eq, double rho, double s);  // d eps / d rho
double eps_s(const StateEquation& eq, double rho, double s);    // d eps / d s (= T)

/// p = eps_rho * rho + eps_s * s - eps.
double pressure(const StateEquation& eq, double rho, double s);

ThermoPoint thermo_quantities(const StateEquation& eq, double rho, double s);

/// Isentropic sound speed (used by the CFL guard).
double sound_speed(const StateEquation& eq, double rho, double s);

/// Inverts the state equation for the entropy density at given (rho, T).
/// Closed form for the ideal gas; bisection on s otherwise (tol 1e-12).
/// Throws std::domain_error when the family has no temperature (barotropic).
double entropy_from_rho_T(const StateEquation& eq, double rho, double T);

}  // namespace openfluid
