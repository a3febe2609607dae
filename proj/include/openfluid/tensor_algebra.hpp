#pragma once

#include <vector>

#include "openfluid/field.hpp"

namespace openfluid {

/// Dense (p,q) tensor at a single point, components flattened
/// contravariant slots first, row-major over slot indices, each index
/// running over 0..dim-1. p+q is small (<= 3 after one hat).
struct PointTensor {
  int dim = 2;
  TensorRank rank{0, 0};
  std::vector<double> a;  // size dim^(p+q)

  PointTensor() = default;
  PointTensor(int d, TensorRank r) : dim(d), rank(r), a(size_of(d, r), 0.0) {}

  static int size_of(int d, TensorRank r) {
    int n = 1;
    for (int k = 0; k < r.order(); ++k) n *= d;
    return n;
  }

  double& at(const std::vector<int>& idx);
  double at(const std::vector<int>& idx) const;
  int flat(const std::vector<int>& idx) const;
};

/// The (p+1,q+1) tensor that linearizes the Lie derivative of a (p,q)
/// tensor in the velocity gradient:  hat(k)^{a..c}_{b..d} =
/// sum_r k^{a..}_{b1..d..bq} d^c_{br} - sum_r k^{a1..c..ap}_{b..} d^{ar}_d.
/// The new contravariant slot c is appended after a1..ap, the new
/// covariant slot d after b1..bq.
PointTensor hat(const PointTensor& k);

/// Full contraction of a (p,q) tensor with a (q,p) tensor:
/// t : u = t^{A}_{B} u^{B}_{A}.
double full_contract(const PointTensor& t, const PointTensor& u);

/// (t .:. hat_u)^c_d — contracts the first p upper and q lower slots of
/// a (p+1,q+1) tensor `hu` against a conjugate (q,p)-shaped tensor `t`,
/// leaving the appended slots (c, d) free. Returns a (1,1) tensor.
PointTensor therefore_contract(const PointTensor& t, const PointTensor& hu);

/// Transpose pairing: swaps the contravariant and covariant index groups,
/// turning a (p,q) tensor into its Euclidean-conjugate (q,p) layout.
PointTensor conjugate_transpose(const PointTensor& t);

/// Extracts the point tensor of field `f` at a flat cell index.
PointTensor tensor_at(const Field& f, int cell);
/// Writes a point tensor into field `f` at a flat cell index.
void set_tensor(Field& f, int cell, const PointTensor& t);

/// Advection-induced (1,1) stress of an advected tensor `adv` paired
/// with its conjugate derivative `dl` (= dl/d adv, (q,p) layout):
///   density branch:  sigma_pi    = adv .:. hat(dl)
///   function branch: sigma_kappa = (dl : adv) delta + adv .:. hat(dl)
PointTensor advective_stress(const PointTensor& adv, FieldKind adv_kind, const PointTensor& dl);

/// MHD momentum-flux block B (x) dl/dB.
PointTensor outer_stress(const PointTensor& B, const PointTensor& dl_dB);

}  // namespace openfluid
