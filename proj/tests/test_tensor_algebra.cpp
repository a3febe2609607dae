#include <doctest.h>

#include <random>

#include "openfluid/dynamics.hpp"
#include "openfluid/ops.hpp"
#include "openfluid/tensor_algebra.hpp"

using namespace openfluid;

namespace {

PointTensor random_int_tensor(std::mt19937& rng, TensorRank r, int dim = 2) {
  std::uniform_int_distribution<int> Z(-4, 4);
  PointTensor t(dim, r);
  for (auto& v : t.a) v = Z(rng);
  return t;
}

}  // namespace

TEST_CASE("hat of a 1-form reproduces the momentum formula terms") {
  // m_hat^c_{b d} = m_d delta^c_b, so (m_hat : grad u)_b = m_d d_b u^d
  std::mt19937 rng(3);
  PointTensor m = random_int_tensor(rng, {0, 1});
  PointTensor h = hat(m);
  for (int b = 0; b < 2; ++b)
    for (int c = 0; c < 2; ++c)
      for (int d = 0; d < 2; ++d)
        CHECK(h.at({c, b, d}) == doctest::Approx(c == b ? m.a[d] : 0.0));
}

TEST_CASE("pi .:. kappa_hat + kappa .:. pi_hat = 0 exactly for all ranks") {
  std::mt19937 rng(11);
  const std::vector<TensorRank> ranks = {{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
  for (const auto& r : ranks)
    for (int trial = 0; trial < 20; ++trial) {
      PointTensor ka = random_int_tensor(rng, r);
      PointTensor pi = random_int_tensor(rng, {r.q, r.p});
      PointTensor s1 = therefore_contract(pi, hat(ka));
      PointTensor s2 = therefore_contract(ka, hat(pi));
      for (int c = 0; c < 4; ++c) CHECK(s1.a[c] + s2.a[c] == 0.0);
    }
}

TEST_CASE("full contraction pairs conjugate layouts") {
  std::mt19937 rng(5);
  PointTensor t = random_int_tensor(rng, {1, 1});
  PointTensor u = conjugate_transpose(t);
  double expect = 0.0;
  for (double v : t.a) expect += v * v;
  CHECK(full_contract(t, u) == doctest::Approx(expect));
}

TEST_CASE("stress table values from the spec examples") {
  auto g = make_grid(2, {{{0, 1}, {0, 1}}}, {4, 4});

  SUBCASE("pi vector density (1,2) with dl (3,4)") {
    Field pi(g, {1, 0}, FieldKind::density);
    pi.comp[0].setConstant(1.0);
    pi.comp[1].setConstant(2.0);
    Field dl(g, {0, 1}, FieldKind::function);
    dl.comp[0].setConstant(3.0);
    dl.comp[1].setConstant(4.0);
    Field s = assemble_stress(pi, dl);
    CHECK(s.comp[0](0) == doctest::Approx(3.0));   // sigma^x_x
    CHECK(s.comp[1](0) == doctest::Approx(4.0));   // sigma^x_y
    CHECK(s.comp[2](0) == doctest::Approx(6.0));   // sigma^y_x
    CHECK(s.comp[3](0) == doctest::Approx(8.0));   // sigma^y_y
  }
  SUBCASE("pi 1-form density (1,0) with dl (0,1): antisymmetric pairing") {
    Field pi(g, {0, 1}, FieldKind::density);
    pi.comp[0].setConstant(1.0);
    Field dl(g, {1, 0}, FieldKind::function);
    dl.comp[1].setConstant(1.0);
    Field s = assemble_stress(pi, dl);
    // sigma^c_d = -pi_d dl^c: only sigma^y_x = -1
    CHECK(s.comp[0](0) == doctest::Approx(0.0));
    CHECK(s.comp[1](0) == doctest::Approx(0.0));
    CHECK(s.comp[2](0) == doctest::Approx(-1.0));
    CHECK(s.comp[3](0) == doctest::Approx(0.0));
  }
  SUBCASE("mhd outer product for B=(1,0), dl_dB=-B") {
    Field B(g, {1, 0}, FieldKind::function);
    B.comp[0].setConstant(1.0);
    Field dl(g, {1, 0}, FieldKind::function);
    dl.comp[0] = -B.comp[0];
    dl.comp[1] = -B.comp[1];
    Field s = assemble_stress_mhd(B, dl);
    CHECK(s.comp[0](0) == doctest::Approx(-1.0));
    CHECK(s.comp[1](0) == doctest::Approx(0.0));
    CHECK(s.comp[2](0) == doctest::Approx(0.0));
    CHECK(s.comp[3](0) == doctest::Approx(0.0));
  }
}

TEST_CASE("lemma duality at the field level") {
  // volume_integral(L_u kappa : pi + L_u pi : kappa - div((pi:kappa)u)) = O(dx^2)
  auto run = [](int n) {
    auto g = make_grid(2, {{{0, 1}, {0, 1}}}, {n, n});
    Field u = Field::vector(g, FieldKind::function);
    Field ka(g, {1, 0}, FieldKind::function);
    Field pi(g, {0, 1}, FieldKind::density);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const double x = g->cell_x(i), y = g->cell_y(j);
        const int c = g->flat(i, j);
        u.comp[0](c) = 0.4 + 0.3 * std::sin(x + 0.5 * y);
        u.comp[1](c) = -0.2 + 0.1 * std::cos(x) * y;
        ka.comp[0](c) = 1.0 + 0.2 * x * y;
        ka.comp[1](c) = 0.5 * std::sin(y);
        pi.comp[0](c) = 0.7 + 0.1 * std::cos(2 * x);
        pi.comp[1](c) = 0.3 * x + 0.2 * y;
      }
    Field lka = lie_derivative_tensor(u, ka);
    Field lpi = lie_derivative_tensor(u, pi);
    Field term = contract_full(lka, pi) + contract_full(lpi, ka);
    Field pk = contract_full(pi, ka);
    Field flux = Field::vector(g, FieldKind::density);
    flux.comp[0] = pk.comp[0] * u.comp[0];
    flux.comp[1] = pk.comp[0] * u.comp[1];
    term -= divergence(flux).with_kind(FieldKind::function);
    return std::abs(component_integral(term, 0));
  };
  const double e1 = run(16), e2 = run(32);
  CHECK(e1 < 1e-2);
  CHECK(e1 / e2 > 3.0);
}
