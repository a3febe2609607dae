#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "openfluid/expression.hpp"
#include "openfluid/grid.hpp"

namespace openfluid {

/// Whether cell values transform as a tensor field or a tensor field
/// density; the distinction picks the Lie-derivative formula.
enum class FieldKind { function, density };

/// Tensor rank (p contravariant, q covariant), p+q <= 2.
struct TensorRank {
  int p = 0;
  int q = 0;
  int order() const { return p + q; }
  bool operator==(const TensorRank&) const = default;
};

inline constexpr TensorRank scalar_rank{0, 0};
inline constexpr TensorRank vector_rank{1, 0};
inline constexpr TensorRank one_form_rank{0, 1};

/// Number of components of a (p,q) tensor in `dim` dimensions.
int n_components(TensorRank r, int dim);

/// Cell-centered tensor field (or density) on a Grid. Components are
/// flattened contravariant-slots-first, row-major in the slot indices.
class Field {
public:
  Field() = default;
  Field(GridPtr grid, TensorRank rank, FieldKind kind);

  static Field zeros(GridPtr grid, TensorRank rank, FieldKind kind);
  static Field scalar(GridPtr grid, FieldKind kind) { return zeros(grid, {0, 0}, kind); }
  static Field vector(GridPtr grid, FieldKind kind) { return zeros(grid, {1, 0}, kind); }

  /// Fills a scalar field from an expression of (x, y).
  static Field from_expression(GridPtr grid, FieldKind kind, const Expression& e,
                               double t = 0.0);
  /// Fills a vector (rank (1,0)) field from per-component expressions.
  static Field vector_from_expressions(GridPtr grid, FieldKind kind,
                                       const std::vector<Expression>& comps,
                                       double t = 0.0);

  GridPtr grid;
  TensorRank rank;
  FieldKind kind = FieldKind::function;
  std::vector<Eigen::ArrayXd> comp;

  int n_comp() const { return static_cast<int>(comp.size()); }
  bool is_scalar() const { return rank.order() == 0; }

  double& at(int c, int cell) { return comp[c](cell); }
  double at(int c, int cell) const { return comp[c](cell); }

  Eigen::ArrayXd& operator[](int c) { return comp[c]; }
  const Eigen::ArrayXd& operator[](int c) const { return comp[c]; }

  /// Same data reinterpreted with the other kind (explicit conversion only).
  Field with_kind(FieldKind k) const;
  /// Same data reinterpreted at a different rank with equal component count.
  Field with_rank(TensorRank r) const;

  Field& operator+=(const Field& o);
  Field& operator-=(const Field& o);
  Field& operator*=(double a);

  double max_abs() const;
  bool all_finite() const;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double a, Field f);

/// Throws std::invalid_argument unless grids, ranks and kinds match.
void require_compatible(const Field& a, const Field& b, const char* what);

/// One value (scalar or small tensor) per boundary face of a face set.
class BoundaryField {
public:
  BoundaryField() = default;
  BoundaryField(GridPtr grid, std::vector<int> face_ids, int ncomp);

  GridPtr grid;
  std::vector<int> face_ids;
  std::vector<Eigen::ArrayXd> comp;

  int n_faces() const { return static_cast<int>(face_ids.size()); }
  int n_comp() const { return static_cast<int>(comp.size()); }
  const Face& face(int k) const { return grid->faces[face_ids[k]]; }
};

}  // namespace openfluid
