#pragma once

#include <Eigen/Core>
#include <array>
#include <memory>
#include <string>
#include <vector>

namespace openfluid {

/// One boundary face: cell-face center on the domain boundary with
/// outward unit normal and area element.
struct Face {
  int patch = 0;     // index into Grid::patch_names
  int axis = 0;      // 0 = x, 1 = y
  int side = 0;      // 0 = low end, 1 = high end
  int ci = 0, cj = 0;  // adjacent interior cell
  double x = 0.0, y = 0.0;  // face center
  double nx = 0.0, ny = 0.0;
  double da = 1.0;
};

/// Uniform collocated grid on [a1,b1] (x [a2,b2]), cell-centered values.
/// Boundary faces are grouped into named patches: left/right in 1D,
/// left/right/bottom/top in 2D (or user-supplied labels in that slot
/// order). Second-order stencils need at least 4 cells per axis.
class Grid {
public:
  int dim = 1;
  std::array<double, 2> lo{0.0, 0.0};
  std::array<double, 2> hi{1.0, 1.0};
  std::array<int, 2> cells{1, 1};
  std::array<double, 2> dx{1.0, 1.0};
  std::vector<std::string> patch_names;
  std::vector<Face> faces;

  int nx() const { return cells[0]; }
  int ny() const { return cells[1]; }
  int n_cells() const { return cells[0] * cells[1]; }
  double cell_volume() const { return dim == 1 ? dx[0] : dx[0] * dx[1]; }

  int flat(int i, int j) const { return i + cells[0] * j; }
  double cell_x(int i) const { return lo[0] + (i + 0.5) * dx[0]; }
  double cell_y(int j) const { return dim == 1 ? 0.0 : lo[1] + (j + 0.5) * dx[1]; }

  int patch_index(const std::string& name) const;
  std::vector<int> patch_faces(int patch) const;
  std::vector<int> all_faces() const;

  /// Sum of face area elements (perimeter in 2D, 2 in 1D).
  double boundary_measure() const;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Builds a grid. `patch_labels` empty selects the defaults
/// (left/right[/bottom/top]); otherwise exactly 2*dim distinct labels
/// in that slot order. Throws std::invalid_argument on bad input.
GridPtr make_grid(int dim, const std::array<std::array<double, 2>, 2>& extents,
                  const std::array<int, 2>& cells,
                  const std::vector<std::string>& patch_labels = {});

/// 1D convenience overload.
GridPtr make_grid_1d(double a, double b, int cells,
                     const std::vector<std::string>& patch_labels = {});

}  // namespace openfluid
