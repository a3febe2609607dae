#include "openfluid/ops.hpp"

#include <stdexcept>

namespace openfluid {

Eigen::ArrayXd partial(const Grid& g, const Eigen::ArrayXd& f, int axis) {
  const int nx = g.nx(), ny = g.ny();
  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(f.size());
  if (axis >= g.dim) return out;
  const double h = g.dx[axis];
  if (axis == 0) {
    for (int j = 0; j < ny; ++j) {
      const int row = nx * j;
      out(row) = (-3.0 * f(row) + 4.0 * f(row + 1) - f(row + 2)) / (2.0 * h);
      for (int i = 1; i < nx - 1; ++i)
        out(row + i) = (f(row + i + 1) - f(row + i - 1)) / (2.0 * h);
      out(row + nx - 1) =
          (3.0 * f(row + nx - 1) - 4.0 * f(row + nx - 2) + f(row + nx - 3)) / (2.0 * h);
    }
  } else {
    for (int i = 0; i < nx; ++i) {
      out(i) = (-3.0 * f(i) + 4.0 * f(i + nx) - f(i + 2 * nx)) / (2.0 * h);
      for (int j = 1; j < ny - 1; ++j)
        out(i + nx * j) = (f(i + nx * (j + 1)) - f(i + nx * (j - 1))) / (2.0 * h);
      out(i + nx * (ny - 1)) = (3.0 * f(i + nx * (ny - 1)) - 4.0 * f(i + nx * (ny - 2)) +
                                f(i + nx * (ny - 3))) /
                               (2.0 * h);
    }
  }
  return out;
}

Field gradient(const Field& f) {
  if (f.rank.order() != 0) throw std::invalid_argument("gradient: rank-(0,0) field required");
  Field g(f.grid, {1, 0}, f.kind);
  for (int c = 0; c < f.grid->dim; ++c) g.comp[c] = partial(*f.grid, f.comp[0], c);
  return g;
}

Field divergence(const Field& v) {
  if (v.rank.p < 1) throw std::invalid_argument("divergence: needs a contravariant index");
  const Grid& g = *v.grid;
  const int dim = g.dim;
  TensorRank out_rank{v.rank.p - 1, v.rank.q};
  Field out(v.grid, out_rank, v.kind);
  const int rest = out.n_comp();  // stride of the leading slot
  for (int r = 0; r < rest; ++r) {
    Eigen::ArrayXd sum = Eigen::ArrayXd::Zero(g.n_cells());
    for (int c = 0; c < dim; ++c) sum += partial(g, v.comp[c * rest + r], c);
    out.comp[r] = sum;
  }
  return out;
}

Field curl2d(const Field& v) {
  if (v.grid->dim != 2) throw std::invalid_argument("curl2d: dim=2 required");
  if (v.rank.order() != 1) throw std::invalid_argument("curl2d: vector field required");
  Field out(v.grid, {0, 0}, v.kind);
  out.comp[0] = partial(*v.grid, v.comp[1], 0) - partial(*v.grid, v.comp[0], 1);
  return out;
}

Field cross2d(const Field& a, const Field& b) {
  if (a.grid->dim != 2) throw std::invalid_argument("cross2d: dim=2 required");
  Field out(a.grid, {0, 0}, a.kind);
  out.comp[0] = a.comp[0] * b.comp[1] - a.comp[1] * b.comp[0];
  return out;
}

Field curl2d_of_scalar(const Field& f) {
  if (f.grid->dim != 2) throw std::invalid_argument("curl2d_of_scalar: dim=2 required");
  Field out(f.grid, {1, 0}, f.kind);
  out.comp[0] = partial(*f.grid, f.comp[0], 1);
  out.comp[1] = -partial(*f.grid, f.comp[0], 0);
  return out;
}

Field lie_derivative_momentum(const Field& u, const Field& m) {
  if (u.kind != FieldKind::function || m.kind != FieldKind::density)
    throw std::invalid_argument("lie_derivative_momentum: u must be a function, m a density");
  if (u.rank.order() != 1 || m.rank.order() != 1)
    throw std::invalid_argument("lie_derivative_momentum: vector/1-form fields required");
  const Grid& g = *u.grid;
  const int dim = g.dim;

  std::vector<Eigen::ArrayXd> du(dim * dim);  // du[c*dim+d] = d_c u^d
  for (int c = 0; c < dim; ++c)
    for (int d = 0; d < dim; ++d) du[c * dim + d] = partial(g, u.comp[d], c);
  Eigen::ArrayXd divu = Eigen::ArrayXd::Zero(g.n_cells());
  for (int c = 0; c < dim; ++c) divu += du[c * dim + c];

  Field out(m.grid, m.rank, FieldKind::density);
  for (int i = 0; i < dim; ++i) {
    Eigen::ArrayXd acc = m.comp[i] * divu;
    for (int c = 0; c < dim; ++c) acc += u.comp[c] * partial(g, m.comp[i], c);
    for (int j = 0; j < dim; ++j) acc += m.comp[j] * du[i * dim + j];  // (grad u)^T m
    out.comp[i] = acc;
  }
  return out;
}

Field lie_derivative_tensor(const Field& u, const Field& t) {
  if (u.kind != FieldKind::function)
    throw std::invalid_argument("lie_derivative_tensor: u must be a function");
  if (t.rank.order() > 2) throw std::invalid_argument("lie_derivative_tensor: p+q <= 2");
  const Grid& g = *u.grid;
  const int dim = g.dim;
  const int nc = t.n_comp();

  std::vector<Eigen::ArrayXd> du(dim * dim);
  for (int c = 0; c < dim; ++c)
    for (int d = 0; d < dim; ++d) du[c * dim + d] = partial(g, u.comp[d], c);

  // transport part
  Field out(t.grid, t.rank, t.kind);
  if (t.kind == FieldKind::function) {
    for (int k = 0; k < nc; ++k) {
      Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(g.n_cells());
      for (int c = 0; c < dim; ++c) acc += u.comp[c] * partial(g, t.comp[k], c);
      out.comp[k] = acc;
    }
  } else {
    for (int k = 0; k < nc; ++k) {
      Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(g.n_cells());
      for (int c = 0; c < dim; ++c) {
        Eigen::ArrayXd flux = u.comp[c] * t.comp[k];
        acc += partial(g, flux, c);
      }
      out.comp[k] = acc;
    }
  }

  // hat(t) : grad u, evaluated cellwise
  for (int cell = 0; cell < g.n_cells(); ++cell) {
    PointTensor tp = tensor_at(t, cell);
    PointTensor h = hat(tp);
    // h layout: [a-group, c, b-group, d]
    const int p = t.rank.p, q = t.rank.q;
    for (int k = 0; k < nc; ++k) {
      // decode k into a-group (p idx) and b-group (q idx)
      std::vector<int> idx(p + q);
      int rem = k;
      for (int s = p + q - 1; s >= 0; --s) {
        idx[s] = rem % dim;
        rem /= dim;
      }
      double acc = 0.0;
      std::vector<int> hid(p + q + 2);
      for (int s = 0; s < p; ++s) hid[s] = idx[s];
      for (int s = 0; s < q; ++s) hid[p + 1 + s] = idx[p + s];
      for (int c = 0; c < dim; ++c)
        for (int d = 0; d < dim; ++d) {
          hid[p] = c;
          hid[p + q + 1] = d;
          acc += h.at(hid) * du[c * dim + d](cell);
        }
      out.comp[k](cell) += acc;
    }
  }
  return out;
}

double volume_integral(const Field& d) {
  if (d.kind != FieldKind::density)
    throw std::invalid_argument("volume_integral: density field required");
  if (!d.is_scalar()) throw std::invalid_argument("volume_integral: scalar field required");
  return d.comp[0].sum() * d.grid->cell_volume();
}

double component_integral(const Field& f, int c) {
  return f.comp[c].sum() * f.grid->cell_volume();
}

double boundary_integral(const BoundaryField& bf) {
  if (bf.n_comp() != 1) throw std::invalid_argument("boundary_integral: scalar field required");
  double sum = 0.0;
  for (int k = 0; k < bf.n_faces(); ++k) sum += bf.comp[0](k) * bf.face(k).da;
  return sum;
}

BoundaryField boundary_trace(const Field& f, const std::vector<int>& face_ids) {
  const Grid& g = *f.grid;
  BoundaryField bf(f.grid, face_ids, f.n_comp());
  for (int k = 0; k < bf.n_faces(); ++k) {
    const Face& fc = bf.face(k);
    // three interior cells walking inward from the face
    const int step = fc.side == 1 ? -1 : 1;
    int i1 = fc.ci, j1 = fc.cj;
    int i2 = i1, j2 = j1, i3 = i1, j3 = j1;
    if (fc.axis == 0) {
      i2 += step;
      i3 += 2 * step;
    } else {
      j2 += step;
      j3 += 2 * step;
    }
    for (int c = 0; c < f.n_comp(); ++c) {
      const double v1 = f.comp[c](g.flat(i1, j1));
      const double v2 = f.comp[c](g.flat(i2, j2));
      const double v3 = f.comp[c](g.flat(i3, j3));
      bf.comp[c](k) = (15.0 * v1 - 10.0 * v2 + 3.0 * v3) / 8.0;
    }
  }
  return bf;
}

BoundaryField boundary_trace(const Field& f, const std::string& patch_label) {
  return boundary_trace(f, f.grid->patch_faces(f.grid->patch_index(patch_label)));
}

Field multiply(const Field& scalar, const Field& f) {
  if (!scalar.is_scalar()) throw std::invalid_argument("multiply: scalar first argument");
  Field out(f.grid, f.rank, f.kind);
  for (int c = 0; c < f.n_comp(); ++c) out.comp[c] = scalar.comp[0] * f.comp[c];
  return out;
}

Field dot(const Field& a, const Field& b) {
  if (a.rank.order() != 1 || b.rank.order() != 1)
    throw std::invalid_argument("dot: vector fields required");
  Field out(a.grid, {0, 0}, FieldKind::function);
  Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(a.grid->n_cells());
  for (int c = 0; c < a.grid->dim; ++c) acc += a.comp[c] * b.comp[c];
  out.comp[0] = acc;
  return out;
}

Field contract_full(const Field& t, const Field& u) {
  if (t.rank.p != u.rank.q || t.rank.q != u.rank.p)
    throw std::invalid_argument("contract_full: conjugate ranks required");
  Field out(t.grid, {0, 0}, FieldKind::function);
  Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(t.grid->n_cells());
  for (int cell = 0; cell < t.grid->n_cells(); ++cell)
    acc(cell) = full_contract(tensor_at(t, cell), tensor_at(u, cell));
  out.comp[0] = acc;
  return out;
}

}  // namespace openfluid
