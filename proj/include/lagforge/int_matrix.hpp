#pragma once
// Exact integer linear algebra over arbitrary-precision integers: Hermite and
// Smith normal forms with transform accumulation, saturated integer kernels,
// and finitely generated abelian group (cokernel) structure.

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "lagforge/common.hpp"

namespace lagforge::lattice {

using Integer = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

class IntMatrix {
 public:
  IntMatrix() = default;
  IntMatrix(int rows, int cols);
  static IntMatrix identity(int n);
  static IntMatrix from_rows(std::initializer_list<std::initializer_list<long long>> rows);

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  Integer& at(int i, int j) { return a_[index(i, j)]; }
  const Integer& at(int i, int j) const { return a_[index(i, j)]; }

  IntMatrix transposed() const;
  IntMatrix operator*(const IntMatrix& rhs) const;
  bool operator==(const IntMatrix& rhs) const;

  bool is_zero() const;
  // Exact determinant (Bareiss fraction-free elimination); square matrices.
  Integer determinant() const;

  std::vector<Integer> row_vec(int i) const;
  std::vector<Integer> col_vec(int j) const;

  void swap_rows(int i, int j);
  void negate_row(int i);
  void addmul_row(int dst, int src, const Integer& k);  // row dst += k * row src
  void swap_cols(int i, int j);
  void negate_col(int j);
  void addmul_col(int dst, int src, const Integer& k);  // col dst += k * col src

  std::string to_string() const;

 private:
  std::size_t index(int i, int j) const;
  int rows_ = 0;
  int cols_ = 0;
  std::vector<Integer> a_;
};

// Row-style Hermite normal form: h = u * m with u unimodular, pivots
// positive, entries above each pivot reduced into [0, pivot), pivot columns
// strictly increasing, zero rows last.
struct HermiteResult {
  IntMatrix h;
  IntMatrix u;
};
HermiteResult hermite_normal_form(const IntMatrix& m);

// Smith normal form: s = u * m * v, both transforms unimodular, s diagonal
// with nonnegative invariant factors d1 | d2 | ... .
struct SmithResult {
  IntMatrix s;
  IntMatrix u;
  IntMatrix v;
};
SmithResult smith_normal_form(const IntMatrix& m);

// Columns form a basis of the saturated lattice {x : m x = 0}. May have zero
// columns when the kernel is trivial.
IntMatrix integer_kernel(const IntMatrix& m);

// Structure of Z^rows(m) / column-span(m).
struct AbelianGroupStructure {
  int free_rank = 0;
  std::vector<Integer> torsion;  // invariant factors >= 2, divisibility chain
  // (free_rank + torsion.size()) x rows(m); free rows first, then torsion
  // rows (each meaningful modulo its entry in row_moduli).
  IntMatrix projection;
  std::vector<Integer> row_moduli;  // 0 for free rows, the factor otherwise
};
AbelianGroupStructure cokernel_structure(const IntMatrix& m);

// For a wide matrix m (k x c, k <= c) surjective over Z, returns s (c x k)
// with m * s = identity(k). Throws a validation error when no integer right
// inverse exists.
IntMatrix integer_right_inverse(const IntMatrix& m);

// gcd of all maximal minors (0 when rank-deficient).
Integer maximal_minor_gcd(const IntMatrix& m);

Integer gcd_of(const std::vector<Integer>& v);
std::vector<Integer> primitive(const std::vector<Integer>& v);

}  // namespace lagforge::lattice
