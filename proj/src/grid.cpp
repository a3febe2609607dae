#include "openfluid/grid.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace openfluid {

int Grid::patch_index(const std::string& name) const {
  for (size_t k = 0; k < patch_names.size(); ++k)
    if (patch_names[k] == name) return static_cast<int>(k);
  throw std::invalid_argument("unknown patch label '" + name + "'");
}

std::vector<int> Grid::patch_faces(int patch) const {
  std::vector<int> out;
  for (size_t f = 0; f < faces.size(); ++f)
    if (faces[f].patch == patch) out.push_back(static_cast<int>(f));
  return out;
}

std::vector<int> Grid::all_faces() const {
  std::vector<int> out(faces.size());
  for (size_t f = 0; f < faces.size(); ++f) out[f] = static_cast<int>(f);
  return out;
}

double Grid::boundary_measure() const {
  double m = 0.0;
  for (const Face& f : faces) m += f.da;
  return m;
}

GridPtr make_grid(int dim, const std::array<std::array<double, 2>, 2>& extents,
                  const std::array<int, 2>& cells,
                  const std::vector<std::string>& patch_labels) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("dim must be 1 or 2");
  auto g = std::make_shared<Grid>();
  g->dim = dim;
  for (int a = 0; a < dim; ++a) {
    g->lo[a] = extents[a][0];
    g->hi[a] = extents[a][1];
    if (!(g->hi[a] > g->lo[a]))
      throw std::invalid_argument("non-positive extent on axis " + std::to_string(a));
    g->cells[a] = cells[a];
    if (cells[a] < 4)
      throw std::invalid_argument("stencil needs >= 4 cells per axis, got " +
                                  std::to_string(cells[a]));
    g->dx[a] = (g->hi[a] - g->lo[a]) / cells[a];
  }
  if (dim == 1) {
    g->cells[1] = 1;
    g->dx[1] = 1.0;
    g->lo[1] = g->hi[1] = 0.0;
  }

  const int npatch = 2 * dim;
  if (patch_labels.empty()) {
    g->patch_names = dim == 1 ? std::vector<std::string>{"left", "right"}
                              : std::vector<std::string>{"left", "right", "bottom", "top"};
  } else {
    if (static_cast<int>(patch_labels.size()) != npatch)
      throw std::invalid_argument("expected " + std::to_string(npatch) + " patch labels");
    std::set<std::string> uniq(patch_labels.begin(), patch_labels.end());
    if (static_cast<int>(uniq.size()) != npatch)
      throw std::invalid_argument("patch labels must be distinct");
    g->patch_names = patch_labels;
  }

  // Patch slots: 0=left(x lo), 1=right(x hi), 2=bottom(y lo), 3=top(y hi).
  if (dim == 1) {
    Face l;
    l.patch = 0; l.axis = 0; l.side = 0; l.ci = 0; l.cj = 0;
    l.x = g->lo[0]; l.nx = -1.0; l.da = 1.0;
    Face r;
    r.patch = 1; r.axis = 0; r.side = 1; r.ci = g->cells[0] - 1; r.cj = 0;
    r.x = g->hi[0]; r.nx = 1.0; r.da = 1.0;
    g->faces = {l, r};
  } else {
    for (int j = 0; j < g->cells[1]; ++j) {
      Face f;
      f.patch = 0; f.axis = 0; f.side = 0; f.ci = 0; f.cj = j;
      f.x = g->lo[0]; f.y = g->cell_y(j); f.nx = -1.0; f.ny = 0.0; f.da = g->dx[1];
      g->faces.push_back(f);
    }
    for (int j = 0; j < g->cells[1]; ++j) {
      Face f;
      f.patch = 1; f.axis = 0; f.side = 1; f.ci = g->cells[0] - 1; f.cj = j;
      f.x = g->hi[0]; f.y = g->cell_y(j); f.nx = 1.0; f.ny = 0.0; f.da = g->dx[1];
      g->faces.push_back(f);
    }
    for (int i = 0; i < g->cells[0]; ++i) {
      Face f;
      f.patch = 2; f.axis = 1; f.side = 0; f.ci = i; f.cj = 0;
      f.x = g->cell_x(i); f.y = g->lo[1]; f.nx = 0.0; f.ny = -1.0; f.da = g->dx[0];
      g->faces.push_back(f);
    }
    for (int i = 0; i < g->cells[0]; ++i) {
      Face f;
      f.patch = 3; f.axis = 1; f.side = 1; f.ci = i; f.cj = g->cells[1] - 1;
      f.x = g->cell_x(i); f.y = g->hi[1]; f.nx = 0.0; f.ny = 1.0; f.da = g->dx[0];
      g->faces.push_back(f);
    }
  }
  return g;
}

GridPtr make_grid_1d(double a, double b, int cells,
                     const std::vector<std::string>& patch_labels) {
  return make_grid(1, {{{a, b}, {0.0, 1.0}}}, {cells, 1}, patch_labels);
}

}  // namespace openfluid
