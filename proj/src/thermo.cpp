#include "openfluid/thermo.hpp"

#include <cmath>
#include <stdexcept>

namespace openfluid {

StateEquation StateEquation::barotropic(double kappa_b, double gamma, double rho_floor) {
  if (!(gamma > 1.0)) throw std::invalid_argument("state equation requires gamma > 1");
  StateEquation eq;
  eq.family = EosFamily::barotropic;
  eq.kappa_b = kappa_b;
  eq.gamma = gamma;
  eq.rho_floor = rho_floor;
  return eq;
}

StateEquation StateEquation::ideal(double c_v, double gamma, double T_r, double rho_r,
                                   double sigma_r, double rho_floor) {
  if (!(gamma > 1.0)) throw std::invalid_argument("state equation requires gamma > 1");
  if (!(c_v > 0.0)) throw std::invalid_argument("state equation requires c_v > 0");
  StateEquation eq;
  eq.family = EosFamily::ideal_gas;
  eq.c_v = c_v;
  eq.gamma = gamma;
  eq.T_r = T_r;
  eq.rho_r = rho_r;
  eq.sigma_r = sigma_r;
  eq.rho_floor = rho_floor;
  return eq;
}

void check_admissible(const StateEquation& eq, double rho) {
  if (!(rho >= eq.rho_floor))
    throw std::domain_error("degenerate state: rho = " + std::to_string(rho) +
                            " below floor " + std::to_string(eq.rho_floor));
}

namespace {

double ideal_T(const StateEquation& eq, double rho, double s) {
  const double sigma = s / rho;
  return eq.T_r * std::pow(rho / eq.rho_r, eq.gamma - 1.0) *
         std::exp((sigma - eq.sigma_r) / eq.c_v);
}

}  // namespace

double internal_energy(const StateEquation& eq, double rho, double s) {
  check_admissible(eq, rho);
  switch (eq.family) {
    case EosFamily::barotropic:
      return eq.kappa_b * std::pow(rho, eq.gamma);
    case EosFamily::ideal_gas:
      return eq.c_v * rho * ideal_T(eq, rho, s);
  }
  return 0.0;
}

double eps_rho(const StateEquation& eq, double rho, double s) {
  check_admissible(eq, rho);
  switch (eq.family) {
    case EosFamily::barotropic:
      return eq.kappa_b * eq.gamma * std::pow(rho, eq.gamma - 1.0);
    case EosFamily::ideal_gas: {
      const double T = ideal_T(eq, rho, s);
      return eq.c_v * T * eq.gamma - (s / rho) * T;
    }
  }
  return 0.0;
}

double eps_s(const StateEquation& eq, double rho, double s) {
  check_admissible(eq, rho);
  switch (eq.family) {
    case EosFamily::barotropic:
      return 0.0;
    case EosFamily::ideal_gas:
      return ideal_T(eq, rho, s);
  }
  return 0.0;
}

double pressure(const StateEquation& eq, double rho, double s) {
  return eps_rho(eq, rho, s) * rho + eps_s(eq, rho, s) * s - internal_energy(eq, rho, s);
}

ThermoPoint thermo_quantities(const StateEquation& eq, double rho, double s) {
  ThermoPoint tp;
  tp.eps = internal_energy(eq, rho, s);
  tp.T = eps_s(eq, rho, s);
  tp.p = eps_rho(eq, rho, s) * rho + tp.T * s - tp.eps;
  tp.g = (tp.eps + tp.p - s * tp.T) / rho;
  tp.h_enth = (tp.eps + tp.p) / rho;
  return tp;
}

double sound_speed(const StateEquation& eq, double rho, double s) {
  check_admissible(eq, rho);
  switch (eq.family) {
    case EosFamily::barotropic: {
      // c^2 = dp/drho, p = kappa (gamma-1) rho^gamma
      const double c2 = eq.kappa_b * eq.gamma * (eq.gamma - 1.0) * std::pow(rho, eq.gamma - 1.0);
      return std::sqrt(std::max(c2, 0.0));
    }
    case EosFamily::ideal_gas: {
      const double p = pressure(eq, rho, s);
      return std::sqrt(std::max(eq.gamma * p / rho, 0.0));
    }
  }
  return 0.0;
}

double entropy_from_rho_T(const StateEquation& eq, double rho, double T) {
  check_admissible(eq, rho);
  if (eq.family == EosFamily::ideal_gas) {
    const double sigma =
        eq.sigma_r + eq.c_v * std::log(T / (eq.T_r * std::pow(rho / eq.rho_r, eq.gamma - 1.0)));
    return sigma * rho;
  }
  // Generic monotone-in-s families: bisection on eps_s(rho, s) = T.
  if (eps_s(eq, rho, 1.0) == eps_s(eq, rho, -1.0))
    throw std::domain_error("state equation has no temperature dependence; cannot invert s(rho,T)");
  double lo = -1.0, hi = 1.0;
  while (eps_s(eq, rho, lo) > T) lo *= 2.0;
  while (eps_s(eq, rho, hi) < T) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (eps_s(eq, rho, mid) < T)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-12 * (1.0 + std::abs(mid))) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace openfluid
