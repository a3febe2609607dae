#pragma once

#include "openfluid/field.hpp"
#include "openfluid/tensor_algebra.hpp"

namespace openfluid {

/// Second-order partial derivative of one component along `axis`:
/// centered in the interior, one-sided 3-point at boundary cells.
Eigen::ArrayXd partial(const Grid& g, const Eigen::ArrayXd& f, int axis);

/// gradient of a rank-(0,0) field; returns a rank-(1,0) field of the
/// same kind holding the partial derivatives.
Field gradient(const Field& f);

/// Divergence contracting the first contravariant index with the
/// derivative: (div t)^{a2..}_{b..} = d_c t^{c a2..}_{b..}.
Field divergence(const Field& v);

/// dim=2 only: d_x v_y - d_y v_x.
Field curl2d(const Field& v);

/// Pointwise 2D cross product of two vector fields (z-component).
Field cross2d(const Field& a, const Field& b);

/// dim=2 only: curl of an out-of-plane scalar, (d_y f, -d_x f).
Field curl2d_of_scalar(const Field& f);

/// Lie derivative of a 1-form density along u:
/// u . grad m + (grad u)^T m + m div u.
Field lie_derivative_momentum(const Field& u, const Field& m);

/// Lie derivative of a general (p,q) tensor field or density along u,
/// assembled from the generic hat contraction.
Field lie_derivative_tensor(const Field& u, const Field& t);

/// Midpoint-rule volume integral of a scalar density field.
double volume_integral(const Field& d);

/// Component-wise cell sum times cell volume (no kind check).
double component_integral(const Field& f, int c);

/// Sum of value * da over the faces of a scalar boundary field.
double boundary_integral(const BoundaryField& bf);

/// Quadratic extrapolation of cell values to face centers.
BoundaryField boundary_trace(const Field& f, const std::vector<int>& face_ids);
BoundaryField boundary_trace(const Field& f, const std::string& patch_label);

// Pointwise helpers used all over model/budget assembly.
Field multiply(const Field& scalar, const Field& f);       // scalar * tensor, kind of f
Field dot(const Field& a, const Field& b);                 // vector . vector -> scalar
Field contract_full(const Field& t, const Field& u);       // t : u -> scalar

}  // namespace openfluid
