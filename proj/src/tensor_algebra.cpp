#include "openfluid/tensor_algebra.hpp"

#include <stdexcept>

namespace openfluid {

int PointTensor::flat(const std::vector<int>& idx) const {
  int f = 0;
  for (int v : idx) f = f * dim + v;
  return f;
}

double& PointTensor::at(const std::vector<int>& idx) { return a[flat(idx)]; }
double PointTensor::at(const std::vector<int>& idx) const { return a[flat(idx)]; }

namespace {

// Iterates all multi-indices of length `len` over 0..dim-1.
template <class F>
void for_each_index(int dim, int len, F&& fn) {
  std::vector<int> idx(len, 0);
  for (;;) {
    fn(idx);
    int k = len - 1;
    while (k >= 0 && ++idx[k] == dim) idx[k--] = 0;
    if (k < 0) break;
  }
}

}  // namespace

PointTensor hat(const PointTensor& k) {
  const int p = k.rank.p, q = k.rank.q, dim = k.dim;
  PointTensor h(dim, {p + 1, q + 1});
  // index layout of h: [a1..ap, c, b1..bq, d]
  for_each_index(dim, p + q + 2, [&](const std::vector<int>& idx) {
    const int c = idx[p];
    const int d = idx[p + q + 1];
    double v = 0.0;
    std::vector<int> kid(p + q);
    for (int s = 0; s < p; ++s) kid[s] = idx[s];
    for (int s = 0; s < q; ++s) kid[p + s] = idx[p + 1 + s];
    // + sum over covariant slots: replace b_r by d, times delta^c_{b_r}
    for (int r = 0; r < q; ++r) {
      if (idx[p + 1 + r] == c) {
        std::vector<int> m = kid;
        m[p + r] = d;
        v += k.at(m);
      }
    }
    // - sum over contravariant slots: replace a_r by c, times delta^{a_r}_d
    for (int r = 0; r < p; ++r) {
      if (idx[r] == d) {
        std::vector<int> m = kid;
        m[r] = c;
        v -= k.at(m);
      }
    }
    h.at(idx) = v;
  });
  return h;
}

double full_contract(const PointTensor& t, const PointTensor& u) {
  if (t.dim != u.dim || t.rank.p != u.rank.q || t.rank.q != u.rank.p)
    throw std::invalid_argument("full_contract: rank mismatch");
  const int p = t.rank.p, q = t.rank.q, dim = t.dim;
  double sum = 0.0;
  for_each_index(dim, p + q, [&](const std::vector<int>& idx) {
    // t^{a1..ap}_{b1..bq} u^{b1..bq}_{a1..ap}
    std::vector<int> uid(p + q);
    for (int s = 0; s < q; ++s) uid[s] = idx[p + s];
    for (int s = 0; s < p; ++s) uid[q + s] = idx[s];
    sum += t.at(idx) * u.at(uid);
  });
  return sum;
}

PointTensor therefore_contract(const PointTensor& t, const PointTensor& hu) {
  // hu has rank (q+1, p+1) with layout [b1..bq, c, a1..ap, d] when it is
  // the hat of a (q,p) tensor; t has rank (p,q) with layout [a1..ap, b1..bq].
  const int p = t.rank.p, q = t.rank.q, dim = t.dim;
  if (hu.rank.p != q + 1 || hu.rank.q != p + 1)
    throw std::invalid_argument("therefore_contract: rank mismatch");
  PointTensor out(dim, {1, 1});
  for (int c = 0; c < dim; ++c)
    for (int d = 0; d < dim; ++d) {
      double sum = 0.0;
      for_each_index(dim, p + q, [&](const std::vector<int>& idx) {
        std::vector<int> hid(p + q + 2);
        for (int s = 0; s < q; ++s) hid[s] = idx[p + s];
        hid[q] = c;
        for (int s = 0; s < p; ++s) hid[q + 1 + s] = idx[s];
        hid[q + 1 + p] = d;
        sum += t.at(idx) * hu.at(hid);
      });
      out.a[c * dim + d] = sum;
    }
  return out;
}

PointTensor conjugate_transpose(const PointTensor& t) {
  const int p = t.rank.p, q = t.rank.q, dim = t.dim;
  PointTensor out(dim, {q, p});
  for_each_index(dim, p + q, [&](const std::vector<int>& idx) {
    std::vector<int> oid(p + q);
    for (int s = 0; s < q; ++s) oid[s] = idx[p + s];
    for (int s = 0; s < p; ++s) oid[q + s] = idx[s];
    out.at(oid) = t.at(idx);
  });
  return out;
}

PointTensor advective_stress(const PointTensor& adv, FieldKind adv_kind,
                             const PointTensor& dl) {
  PointTensor sigma = therefore_contract(adv, hat(dl));
  if (adv_kind == FieldKind::function) {
    const double trace_term = full_contract(adv, dl);
    for (int c = 0; c < adv.dim; ++c) sigma.a[c * adv.dim + c] += trace_term;
  }
  return sigma;
}

PointTensor outer_stress(const PointTensor& B, const PointTensor& dl_dB) {
  const int dim = B.dim;
  PointTensor sigma(dim, {1, 1});
  for (int c = 0; c < dim; ++c)
    for (int d = 0; d < dim; ++d) sigma.a[c * dim + d] = B.a[c] * dl_dB.a[d];
  return sigma;
}

PointTensor tensor_at(const Field& f, int cell) {
  PointTensor t(f.grid->dim, f.rank);
  for (int c = 0; c < f.n_comp(); ++c) t.a[c] = f.comp[c](cell);
  return t;
}

void set_tensor(Field& f, int cell, const PointTensor& t) {
  for (int c = 0; c < f.n_comp(); ++c) f.comp[c](cell) = t.a[c];
}

}  // namespace openfluid
