#pragma once

#include <functional>
#include <string>

#include "openfluid/dynamics.hpp"
#include "openfluid/model.hpp"
#include "openfluid/sources.hpp"

namespace openfluid {

/// Functional f = sum over cells of a pointwise density f(m, rho_k, s)
/// times cell volume. The density may reference the cell coordinates
/// (model parameter fields such as R and phi) but never neighbors.
class DiscreteFunctional {
public:
  struct Partials {
    double dm[2] = {0, 0};
    Eigen::VectorXd drho;
    double ds = 0;
  };
  using Density = std::function<double(double x, double y, const double m[2],
                                       const Eigen::VectorXd& rho, double s)>;
  using PartialFn = std::function<void(double x, double y, const double m[2],
                                       const Eigen::VectorXd& rho, double s, Partials& out)>;

  std::string name;
  Density density;
  PartialFn partials;  // null => central finite-difference fallback

  static DiscreteFunctional total_mass(int component = 0);
  static DiscreteFunctional total_entropy();
  static DiscreteFunctional momentum(int axis);
  static DiscreteFunctional kinetic_energy();
  static DiscreteFunctional hamiltonian(const ModelSpec& model);

  /// The standard test catalogue for a model.
  static std::vector<DiscreteFunctional> catalogue(const ModelSpec& model, int dim);
};

/// State in the momentum representation used by the bracket.
struct MState {
  GridPtr grid;
  Field m;  // 1-form density
  std::vector<Field> rho;
  Field s;
};
MState to_mstate(const ModelSpec& model, const State& st);

double evaluate_functional(const DiscreteFunctional& f, const MState& ms);

/// Pointwise partial-derivative fields of the functional density.
struct FunctionalPartials {
  Field df_dm;  // vector function
  std::vector<Field> df_drho;
  Field df_ds;
};
FunctionalPartials functional_derivative(const DiscreteFunctional& f, const MState& ms);

struct BracketValue {
  double bulk = 0;
  double boundary = 0;
  double total = 0;  // = bulk + boundary; the antisymmetric single expression
};

/// Lie-Poisson bracket with its bulk/boundary split. The total is the
/// manifestly antisymmetric expression; the boundary part is the
/// n-contracted face integral; bulk = total - boundary.
BracketValue lie_poisson_bracket(const DiscreteFunctional& f, const DiscreteFunctional& h,
                                 const ModelSpec& model, const State& st);

struct EvolutionCheck {
  std::string functional;
  BracketValue lp;
  double bulk_sources = 0;      // integral of b.df/dm + theta pairings
  double boundary_sources = 0;  // integral of J.df/dm + j pairings
  double rate = 0;              // lp.total + bulk + boundary
  double ddt = 0;               // chain rule through the dynamics tendency
  double residual = 0;          // |ddt - rate|
};

/// Checks d/dt f = {f,h}_LP + bulk + boundary for the model Hamiltonian,
/// with fluxes realized by the closures on the current state.
EvolutionCheck extended_evolution_rate(const DiscreteFunctional& f, const ModelSpec& model,
                                       const State& st, const BulkSourceSpec& bulk,
                                       const std::vector<FluxClosure>& closures);

}  // namespace openfluid
