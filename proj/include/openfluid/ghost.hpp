#pragma once

#include <functional>

#include "openfluid/field.hpp"

namespace openfluid {

/// Cell array extended by two ghost layers per boundary side of each
/// active axis (none along y in 1D). Interior indices run 0..nx-1,
/// ghosts at -2,-1 and nx,nx+1.
class ExtArray {
public:
  ExtArray() = default;
  ExtArray(int nx, int ny, int dim)
      : nx_(nx), ny_(ny), gy_(dim == 2 ? 2 : 0),
        a_(Eigen::ArrayXXd::Zero(nx + 4, ny + 2 * (dim == 2 ? 2 : 0))) {}

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int ghost_y() const { return gy_; }

  double& at(int i, int j) { return a_(i + 2, j + gy_); }
  double at(int i, int j) const { return a_(i + 2, j + gy_); }

  static ExtArray from_cells(const Grid& g, const Eigen::ArrayXd& cells);
  Eigen::ArrayXd interior(const Grid& g) const;

private:
  int nx_ = 0, ny_ = 1, gy_ = 0;
  Eigen::ArrayXXd a_;
};

/// Centered second-order partial at interior cells.
Eigen::ArrayXd partial_centered(const Grid& g, const ExtArray& f, int axis);
/// Centered partial evaluated one ring into the ghosts (indices -1..n),
/// for composed second derivatives; the outermost ring stays zero.
ExtArray partial_ring(const Grid& g, const ExtArray& f, int axis);

/// Ghost fill policies, applied side by side. `axis`/`side` identify the
/// boundary; values passed per tangential row in patch-face order.
void fill_extrapolate(const Grid& g, ExtArray& f, int axis, int side);
void fill_pin_value(const Grid& g, ExtArray& f, int axis, int side,
                    const std::vector<double>& v);
void fill_pin_normal_slope(const Grid& g, ExtArray& f, int axis, int side,
                           const std::vector<double>& slope);
void fill_pin_value_and_slope(const Grid& g, ExtArray& f, int axis, int side,
                              const std::vector<double>& v, const std::vector<double>& slope);
/// Odd reflection about a zero face value (closed-wall advective fluxes).
void fill_odd_reflect(const Grid& g, ExtArray& f, int axis, int side);

/// Quadratic-trace value at a boundary face (exact on pinned fills).
double trace_at_face(const Grid& g, const ExtArray& f, const Face& face);
/// Outward normal derivative of the quadratic trace at a face.
double trace_normal_slope(const Grid& g, const ExtArray& f, const Face& face);

}  // namespace openfluid
