#include "openfluid/ghost.hpp"

#include <stdexcept>

namespace openfluid {

ExtArray ExtArray::from_cells(const Grid& g, const Eigen::ArrayXd& cells) {
  ExtArray e(g.nx(), g.ny(), g.dim);
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) e.at(i, j) = cells(g.flat(i, j));
  return e;
}

Eigen::ArrayXd ExtArray::interior(const Grid& g) const {
  Eigen::ArrayXd out(g.n_cells());
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) out(g.flat(i, j)) = at(i, j);
  return out;
}

Eigen::ArrayXd partial_centered(const Grid& g, const ExtArray& f, int axis) {
  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(g.n_cells());
  if (axis >= g.dim) return out;
  const double inv2h = 1.0 / (2.0 * g.dx[axis]);
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      const double hi = axis == 0 ? f.at(i + 1, j) : f.at(i, j + 1);
      const double lo = axis == 0 ? f.at(i - 1, j) : f.at(i, j - 1);
      out(g.flat(i, j)) = (hi - lo) * inv2h;
    }
  return out;
}

ExtArray partial_ring(const Grid& g, const ExtArray& f, int axis) {
  ExtArray out(g.nx(), g.ny(), g.dim);
  if (axis >= g.dim) return out;
  const double inv2h = 1.0 / (2.0 * g.dx[axis]);
  const int jg = g.dim == 2 ? 1 : 0;
  for (int j = -jg; j < g.ny() + jg; ++j)
    for (int i = -1; i <= g.nx(); ++i) {
      const double hi = axis == 0 ? f.at(i + 1, j) : f.at(i, j + 1);
      const double lo = axis == 0 ? f.at(i - 1, j) : f.at(i, j - 1);
      out.at(i, j) = (hi - lo) * inv2h;
    }
  return out;
}

namespace {

// Walks the boundary cells of (axis, side) in patch-face order and hands
// the fill callback a depth accessor: depth 0 = nearest interior cell,
// increasing inward; negative depths are the ghosts.
template <class F>
void for_each_boundary_row(const Grid& g, ExtArray& f, int axis, int side, F&& fn) {
  const int nrows = axis == 0 ? g.ny() : g.nx();
  const int edge = side == 0 ? 0 : (axis == 0 ? g.nx() - 1 : g.ny() - 1);
  const int inward = side == 0 ? 1 : -1;
  for (int r = 0; r < nrows; ++r) {
    auto cell = [&, r](int depth) -> double& {
      if (axis == 0) return f.at(edge + inward * depth, r);
      return f.at(r, edge + inward * depth);
    };
    fn(r, cell);
  }
}

}  // namespace

void fill_extrapolate(const Grid& g, ExtArray& f, int axis, int side) {
  if (axis >= g.dim) return;
  for_each_boundary_row(g, f, axis, side, [&](int, auto cell) {
    const double f1 = cell(0), f2 = cell(1), f3 = cell(2);
    cell(-1) = 3.0 * f1 - 3.0 * f2 + f3;
    cell(-2) = 6.0 * f1 - 8.0 * f2 + 3.0 * f3;
  });
}

void fill_pin_value(const Grid& g, ExtArray& f, int axis, int side,
                    const std::vector<double>& v) {
  if (axis >= g.dim) return;
  for_each_boundary_row(g, f, axis, side, [&](int r, auto cell) {
    const double f1 = cell(0), f2 = cell(1);
    const double g1 = (8.0 * v[r] - 6.0 * f1 + f2) / 3.0;
    cell(-1) = g1;
    cell(-2) = 3.0 * g1 - 3.0 * f1 + f2;
  });
}

void fill_pin_normal_slope(const Grid& g, ExtArray& f, int axis, int side,
                           const std::vector<double>& slope) {
  if (axis >= g.dim) return;
  const double h = g.dx[axis];
  // cubic through the three nearest interior cells with the prescribed
  // outward slope at the face; keeps second derivatives of the extension
  // 2nd-order accurate (the Korteweg potential differentiates it twice)
  for_each_boundary_row(g, f, axis, side, [&](int r, auto cell) {
    const double f1 = cell(0), f2 = cell(1), f3 = cell(2);
    const double G = slope[r] * h;
    const double d = 4.0 * (G - 2.0 * f1 + 3.0 * f2 - f3) / 23.0;
    cell(-1) = f1 + G + 0.25 * d;
    cell(-2) = f2 + 3.0 * G + 6.75 * d;
  });
}

void fill_pin_value_and_slope(const Grid& g, ExtArray& f, int axis, int side,
                              const std::vector<double>& v, const std::vector<double>& slope) {
  if (axis >= g.dim) return;
  const double h = g.dx[axis];
  for_each_boundary_row(g, f, axis, side, [&](int r, auto cell) {
    const double f1 = cell(0), f2 = cell(1);
    // cubic through f2, f1 with value v and outward slope g at the face;
    // nodes at -1.5h, -0.5h, +0.5h, +1.5h measured outward
    const double gval = slope[r] * h;
    const double d = (9.0 * f1 - f2 - 8.0 * v[r] + 3.0 * gval) / 2.25;
    const double c = (f1 - v[r] + 0.5 * gval + 0.125 * d) / 0.25;
    cell(-1) = v[r] + 0.5 * gval + 0.25 * c + 0.125 * d;
    cell(-2) = v[r] + 1.5 * gval + 2.25 * c + 3.375 * d;
  });
}

void fill_odd_reflect(const Grid& g, ExtArray& f, int axis, int side) {
  if (axis >= g.dim) return;
  for_each_boundary_row(g, f, axis, side, [&](int, auto cell) {
    cell(-1) = -cell(0);
    cell(-2) = -cell(1);
  });
}

double trace_at_face(const Grid& g, const ExtArray& f, const Face& face) {
  const int i = face.ci, j = face.cj;
  double f1, f2, g1;
  if (face.axis == 0) {
    const int step = face.side == 1 ? -1 : 1;
    f1 = f.at(i, j);
    f2 = f.at(i + step, j);
    g1 = f.at(i - step, j);
  } else {
    const int step = face.side == 1 ? -1 : 1;
    f1 = f.at(i, j);
    f2 = f.at(i, j + step);
    g1 = f.at(i, j - step);
  }
  return (-f2 + 6.0 * f1 + 3.0 * g1) / 8.0;
}

double trace_normal_slope(const Grid& g, const ExtArray& f, const Face& face) {
  const int i = face.ci, j = face.cj;
  const double h = g.dx[face.axis];
  // 4-point face-centered derivative, exact on cubics (matches the
  // cubic Neumann ghost fill)
  double f1, f2, g1, g2;
  if (face.axis == 0) {
    const int step = face.side == 1 ? -1 : 1;
    f1 = f.at(i, j);
    f2 = f.at(i + step, j);
    g1 = f.at(i - step, j);
    g2 = f.at(i - 2 * step, j);
  } else {
    const int step = face.side == 1 ? -1 : 1;
    f1 = f.at(i, j);
    f2 = f.at(i, j + step);
    g1 = f.at(i, j - step);
    g2 = f.at(i, j - 2 * step);
  }
  return (27.0 * (g1 - f1) - (g2 - f2)) / (24.0 * h);
}

}  // namespace openfluid
