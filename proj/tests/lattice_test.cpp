#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "lagforge/int_matrix.hpp"
#include "test_oracles.hpp"

using namespace lagforge::lattice;

namespace {

bool is_unimodular(const IntMatrix& m) {
  Integer d = m.determinant();
  return d == 1 || d == -1;
}

// row-style Hermite shape: positive pivots with strictly increasing columns,
// entries above each pivot in [0, pivot), zero rows last
bool hermite_shape_ok(const IntMatrix& h) {
  int last_pivot_col = -1;
  bool seen_zero_row = false;
  for (int i = 0; i < h.rows(); ++i) {
    int lead = -1;
    for (int j = 0; j < h.cols(); ++j)
      if (h.at(i, j) != 0) { lead = j; break; }
    if (lead < 0) { seen_zero_row = true; continue; }
    if (seen_zero_row) return false;
    if (lead <= last_pivot_col) return false;
    last_pivot_col = lead;
    if (h.at(i, lead) <= 0) return false;
    for (int r = 0; r < i; ++r)
      if (h.at(r, lead) < 0 || h.at(r, lead) >= h.at(i, lead)) return false;
  }
  return true;
}

IntMatrix random_matrix(std::mt19937_64& rng, int max_dim = 5, int max_abs = 9) {
  std::uniform_int_distribution<int> dim(1, max_dim);
  std::uniform_int_distribution<int> entry(-max_abs, max_abs);
  IntMatrix m(dim(rng), dim(rng));
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) m.at(i, j) = entry(rng);
  return m;
}

}  // namespace

TEST_CASE("hermite normal form: worked examples") {
  {
    IntMatrix m = IntMatrix::from_rows({{2, 4}, {1, 3}});
    auto [h, u] = hermite_normal_form(m);
    // hand derivation: swap, eliminate, reduce above the column-1 pivot
    CHECK(h == IntMatrix::from_rows({{1, 1}, {0, 2}}));
    CHECK(u * m == h);
    CHECK(is_unimodular(u));
    CHECK(hermite_shape_ok(h));
  }
  {
    IntMatrix m = IntMatrix::identity(3);
    auto [h, u] = hermite_normal_form(m);
    CHECK(h == IntMatrix::identity(3));
    CHECK(u == IntMatrix::identity(3));
  }
  {
    IntMatrix m(2, 1);  // zero matrix
    auto [h, u] = hermite_normal_form(m);
    CHECK(h.is_zero());
    CHECK(is_unimodular(u));
  }
}

TEST_CASE("smith normal form: worked examples") {
  {
    IntMatrix m = IntMatrix::from_rows({{1, 0}, {0, 1}, {-1, -1}});
    auto [s, u, v] = smith_normal_form(m);
    CHECK(s == IntMatrix::from_rows({{1, 0}, {0, 1}, {0, 0}}));
    CHECK(u * m * v == s);
    CHECK(is_unimodular(u));
    CHECK(is_unimodular(v));
  }
  {
    IntMatrix m = IntMatrix::from_rows({{2}});
    auto [s, u, v] = smith_normal_form(m);
    CHECK(s == IntMatrix::from_rows({{2}}));
  }
  {
    IntMatrix m = IntMatrix::from_rows({{6, 0}, {0, 4}});
    auto [s, u, v] = smith_normal_form(m);
    // oracle: D1 = gcd(6,4) = 2, D2 = |det| = 24 => factors (2, 12)
    auto inv = oracle::invariant_factors(m);
    REQUIRE(inv.size() == 2);
    CHECK(inv[0] == 2);
    CHECK(inv[1] == 12);
    CHECK(s == IntMatrix::from_rows({{2, 0}, {0, 12}}));
    CHECK(u * m * v == s);
  }
}

TEST_CASE("integer kernel: worked examples") {
  {
    IntMatrix m = IntMatrix::from_rows({{1, 1}});
    IntMatrix k = integer_kernel(m);
    REQUIRE(k.cols() == 1);
    CHECK(k.at(0, 0) == 1);
    CHECK(k.at(1, 0) == -1);
    CHECK((m * k).is_zero());
  }
  {
    IntMatrix k = integer_kernel(IntMatrix::identity(3));
    CHECK(k.cols() == 0);
  }
  {
    // relation lattice of the projective-plane normal fan
    IntMatrix m = IntMatrix::from_rows({{1, 0, -1}, {0, 1, -1}});
    IntMatrix k = integer_kernel(m);
    REQUIRE(k.cols() == 1);
    CHECK(k.at(0, 0) == 1);
    CHECK(k.at(1, 0) == 1);
    CHECK(k.at(2, 0) == 1);
  }
  {
    // saturation: kernel of [[2,2]] is still generated by (1,-1)
    IntMatrix m = IntMatrix::from_rows({{2, 2}});
    IntMatrix k = integer_kernel(m);
    REQUIRE(k.cols() == 1);
    CHECK(k.at(0, 0) == 1);
    CHECK(k.at(1, 0) == -1);
  }
}

TEST_CASE("cokernel structure: worked examples") {
  {
    IntMatrix m = IntMatrix::from_rows({{1, 0}, {0, 1}, {-1, -1}});
    auto g = cokernel_structure(m);
    CHECK(g.free_rank == 1);
    CHECK(g.torsion.empty());
    REQUIRE(g.projection.rows() == 1);
    CHECK(g.projection.at(0, 0) == 1);
    CHECK(g.projection.at(0, 1) == 1);
    CHECK(g.projection.at(0, 2) == 1);
    CHECK((g.projection * m).is_zero());
  }
  {
    IntMatrix m = IntMatrix::from_rows({{2}});
    auto g = cokernel_structure(m);
    CHECK(g.free_rank == 0);
    REQUIRE(g.torsion.size() == 1);
    CHECK(g.torsion[0] == 2);
  }
  {
    IntMatrix m = IntMatrix::from_rows({{1, 0}, {-1, 0}, {0, 1}, {0, -1}});
    auto g = cokernel_structure(m);
    CHECK(g.free_rank == 2);
    CHECK(g.torsion.empty());
    // the two free projection rows pair facets {0,1} and {2,3}
    CHECK((g.projection * m).is_zero());
    for (int k = 0; k < 2; ++k) {
      CHECK(g.projection.at(k, 0) == g.projection.at(k, 1));
      CHECK(g.projection.at(k, 2) == g.projection.at(k, 3));
    }
  }
}

TEST_CASE("integer right inverse") {
  IntMatrix nt = IntMatrix::from_rows({{1, 0, -1}, {0, 1, -1}});
  IntMatrix s = integer_right_inverse(nt);
  CHECK(nt * s == IntMatrix::identity(2));
  CHECK_THROWS_AS((void)integer_right_inverse(IntMatrix::from_rows({{2}})), lagforge::Error);
  CHECK_THROWS_AS((void)integer_right_inverse(IntMatrix::from_rows({{2, 4}})), lagforge::Error);
  IntMatrix ok = integer_right_inverse(IntMatrix::from_rows({{2, 3}}));
  CHECK((IntMatrix::from_rows({{2, 3}}) * ok) == IntMatrix::identity(1));
}

TEST_CASE("randomized identities against oracles") {
  std::mt19937_64 rng(20240817u);
  for (int iter = 0; iter < 300; ++iter) {
    IntMatrix m = random_matrix(rng);

    auto [h, u] = hermite_normal_form(m);
    CHECK(u * m == h);
    CHECK(is_unimodular(u));
    CHECK(hermite_shape_ok(h));

    auto [s, su, sv] = smith_normal_form(m);
    CHECK(su * m * sv == s);
    CHECK(is_unimodular(su));
    CHECK(is_unimodular(sv));
    int limit = std::min(m.rows(), m.cols());
    for (int i = 0; i < limit; ++i) {
      CHECK(s.at(i, i) >= 0);
      if (i + 1 < limit && s.at(i, i) != 0 && s.at(i + 1, i + 1) != 0)
        CHECK(s.at(i + 1, i + 1) % s.at(i, i) == 0);
      for (int j = 0; j < limit; ++j)
        if (i != j) CHECK(s.at(i, j) == 0);
    }
    // invariant factors agree with the determinant-divisor oracle
    auto inv = oracle::invariant_factors(m);
    std::vector<Integer> diag;
    for (int i = 0; i < limit; ++i)
      if (s.at(i, i) != 0) diag.push_back(s.at(i, i));
    REQUIRE(diag.size() == inv.size());
    for (std::size_t i = 0; i < inv.size(); ++i) CHECK(diag[i] == inv[i]);

    IntMatrix k = integer_kernel(m);
    CHECK((m * k).is_zero());
    int rank = oracle::rational_rank(m);
    CHECK(k.cols() == m.cols() - rank);
    if (k.cols() > 0) CHECK(maximal_minor_gcd(k) == 1);  // saturated

    auto g = cokernel_structure(m);
    CHECK(g.free_rank == m.rows() - rank);
    // free projection rows annihilate the image exactly
    IntMatrix pm = g.projection * m;
    for (int i = 0; i < g.free_rank; ++i)
      for (int j = 0; j < pm.cols(); ++j) CHECK(pm.at(i, j) == 0);
    // torsion rows annihilate modulo their factor
    for (std::size_t r = 0; r < g.row_moduli.size(); ++r) {
      if (g.row_moduli[r] == 0) continue;
      for (int j = 0; j < pm.cols(); ++j)
        CHECK(pm.at(static_cast<int>(r), j) % g.row_moduli[r] == 0);
    }
  }
}
