#include "openfluid/field.hpp"

#include <cmath>
#include <stdexcept>

namespace openfluid {

int n_components(TensorRank r, int dim) {
  if (r.order() > 2 || r.p < 0 || r.q < 0)
    throw std::invalid_argument("tensor rank capped at p+q <= 2");
  int n = 1;
  for (int k = 0; k < r.order(); ++k) n *= dim;
  return n;
}

Field::Field(GridPtr g, TensorRank r, FieldKind k) : grid(std::move(g)), rank(r), kind(k) {
  comp.assign(n_components(rank, grid->dim), Eigen::ArrayXd::Zero(grid->n_cells()));
}

Field Field::zeros(GridPtr grid, TensorRank rank, FieldKind kind) {
  return Field(std::move(grid), rank, kind);
}

Field Field::from_expression(GridPtr grid, FieldKind kind, const Expression& e, double t) {
  Field f(grid, {0, 0}, kind);
  for (int j = 0; j < grid->ny(); ++j)
    for (int i = 0; i < grid->nx(); ++i)
      f.comp[0](grid->flat(i, j)) = e(grid->cell_x(i), grid->cell_y(j), t);
  return f;
}

Field Field::vector_from_expressions(GridPtr grid, FieldKind kind,
                                     const std::vector<Expression>& comps, double t) {
  Field f(grid, {1, 0}, kind);
  if (static_cast<int>(comps.size()) < grid->dim)
    throw std::invalid_argument("need one expression per vector component");
  for (int c = 0; c < grid->dim; ++c)
    for (int j = 0; j < grid->ny(); ++j)
      for (int i = 0; i < grid->nx(); ++i)
        f.comp[c](grid->flat(i, j)) = comps[c](grid->cell_x(i), grid->cell_y(j), t);
  return f;
}

Field Field::with_kind(FieldKind k) const {
  Field f = *this;
  f.kind = k;
  return f;
}

Field Field::with_rank(TensorRank r) const {
  if (n_components(r, grid->dim) != n_comp())
    throw std::invalid_argument("with_rank: component count mismatch");
  Field f = *this;
  f.rank = r;
  return f;
}

void require_compatible(const Field& a, const Field& b, const char* what) {
  if (a.grid.get() != b.grid.get())
    throw std::invalid_argument(std::string(what) + ": grid mismatch");
  if (!(a.rank == b.rank))
    throw std::invalid_argument(std::string(what) + ": rank mismatch");
  if (a.kind != b.kind)
    throw std::invalid_argument(std::string(what) + ": kind mismatch");
}

Field& Field::operator+=(const Field& o) {
  require_compatible(*this, o, "field +=");
  for (int c = 0; c < n_comp(); ++c) comp[c] += o.comp[c];
  return *this;
}

Field& Field::operator-=(const Field& o) {
  require_compatible(*this, o, "field -=");
  for (int c = 0; c < n_comp(); ++c) comp[c] -= o.comp[c];
  return *this;
}

Field& Field::operator*=(double a) {
  for (int c = 0; c < n_comp(); ++c) comp[c] *= a;
  return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double a, Field f) { return f *= a; }

double Field::max_abs() const {
  double m = 0.0;
  for (const auto& c : comp) m = std::max(m, c.abs().maxCoeff());
  return m;
}

bool Field::all_finite() const {
  for (const auto& c : comp)
    if (!c.isFinite().all()) return false;
  return true;
}

BoundaryField::BoundaryField(GridPtr g, std::vector<int> ids, int ncomp)
    : grid(std::move(g)), face_ids(std::move(ids)) {
  if (face_ids.empty()) throw std::invalid_argument("boundary field over empty face set");
  comp.assign(ncomp, Eigen::ArrayXd::Zero(static_cast<int>(face_ids.size())));
}

}  // namespace openfluid
