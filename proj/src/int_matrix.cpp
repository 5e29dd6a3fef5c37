#include "lagforge/int_matrix.hpp"

#include <algorithm>
#include <sstream>

namespace lagforge::lattice {

namespace {

Integer abs_val(const Integer& x) { return x < 0 ? Integer(-x) : x; }

// floor division, divisor > 0
Integer floor_div(const Integer& a, const Integer& b) {
  Integer q = a / b;
  if (a % b != 0 && a < 0) q -= 1;
  return q;
}

void next_combination(std::vector<int>& c, int n) {
  // lexicographic successor of a k-combination of {0..n-1}; empties c at end
  int k = static_cast<int>(c.size());
  for (int i = k - 1; i >= 0; --i) {
    if (c[i] < n - k + i) {
      ++c[i];
      for (int j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
      return;
    }
  }
  c.clear();
}

}  // namespace

IntMatrix::IntMatrix(int rows, int cols) : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) fail_validation("matrix dimensions must be nonnegative");
  a_.assign(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), Integer(0));
}

std::size_t IntMatrix::index(int i, int j) const {
  if (i < 0 || i >= rows_ || j < 0 || j >= cols_) fail_validation("matrix index out of range");
  return static_cast<std::size_t>(i) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(j);
}

IntMatrix IntMatrix::identity(int n) {
  IntMatrix m(n, n);
  for (int i = 0; i < n; ++i) m.at(i, i) = 1;
  return m;
}

IntMatrix IntMatrix::from_rows(std::initializer_list<std::initializer_list<long long>> rows) {
  int r = static_cast<int>(rows.size());
  int c = r == 0 ? 0 : static_cast<int>(rows.begin()->size());
  IntMatrix m(r, c);
  int i = 0;
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != c) fail_validation("ragged row list");
    int j = 0;
    for (long long v : row) m.at(i, j++) = v;
    ++i;
  }
  return m;
}

IntMatrix IntMatrix::transposed() const {
  IntMatrix t(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) t.at(j, i) = at(i, j);
  return t;
}

IntMatrix IntMatrix::operator*(const IntMatrix& rhs) const {
  if (cols_ != rhs.rows_) fail_validation("matrix product shape mismatch");
  IntMatrix out(rows_, rhs.cols_);
  for (int i = 0; i < rows_; ++i)
    for (int k = 0; k < cols_; ++k) {
      const Integer& aik = at(i, k);
      if (aik == 0) continue;
      for (int j = 0; j < rhs.cols_; ++j) out.at(i, j) += aik * rhs.at(k, j);
    }
  return out;
}

bool IntMatrix::operator==(const IntMatrix& rhs) const {
  return rows_ == rhs.rows_ && cols_ == rhs.cols_ && a_ == rhs.a_;
}

bool IntMatrix::is_zero() const {
  for (const auto& x : a_)
    if (x != 0) return false;
  return true;
}

std::vector<Integer> IntMatrix::row_vec(int i) const {
  std::vector<Integer> v(static_cast<std::size_t>(cols_));
  for (int j = 0; j < cols_; ++j) v[static_cast<std::size_t>(j)] = at(i, j);
  return v;
}

std::vector<Integer> IntMatrix::col_vec(int j) const {
  std::vector<Integer> v(static_cast<std::size_t>(rows_));
  for (int i = 0; i < rows_; ++i) v[static_cast<std::size_t>(i)] = at(i, j);
  return v;
}

void IntMatrix::swap_rows(int i, int j) {
  if (i == j) return;
  for (int c = 0; c < cols_; ++c) std::swap(at(i, c), at(j, c));
}

void IntMatrix::negate_row(int i) {
  for (int c = 0; c < cols_; ++c) at(i, c) = -at(i, c);
}

void IntMatrix::addmul_row(int dst, int src, const Integer& k) {
  if (k == 0) return;
  for (int c = 0; c < cols_; ++c) at(dst, c) += k * at(src, c);
}

void IntMatrix::swap_cols(int i, int j) {
  if (i == j) return;
  for (int r = 0; r < rows_; ++r) std::swap(at(r, i), at(r, j));
}

void IntMatrix::negate_col(int j) {
  for (int r = 0; r < rows_; ++r) at(r, j) = -at(r, j);
}

void IntMatrix::addmul_col(int dst, int src, const Integer& k) {
  if (k == 0) return;
  for (int r = 0; r < rows_; ++r) at(r, dst) += k * at(r, src);
}

Integer IntMatrix::determinant() const {
  if (rows_ != cols_) fail_validation("determinant of non-square matrix");
  int n = rows_;
  if (n == 0) return 1;
  IntMatrix b = *this;
  Integer sign = 1;
  Integer prev = 1;
  for (int k = 0; k + 1 < n; ++k) {
    if (b.at(k, k) == 0) {
      int swap = -1;
      for (int i = k + 1; i < n; ++i)
        if (b.at(i, k) != 0) { swap = i; break; }
      if (swap < 0) return 0;
      b.swap_rows(k, swap);
      sign = -sign;
    }
    for (int i = k + 1; i < n; ++i) {
      for (int j = k + 1; j < n; ++j) {
        Integer num = b.at(i, j) * b.at(k, k) - b.at(i, k) * b.at(k, j);
        b.at(i, j) = num / prev;  // exact by Bareiss
      }
      b.at(i, k) = 0;
    }
    prev = b.at(k, k);
  }
  return sign * b.at(n - 1, n - 1);
}

std::string IntMatrix::to_string() const {
  std::ostringstream os;
  os << "[";
  for (int i = 0; i < rows_; ++i) {
    os << (i ? "; " : "");
    for (int j = 0; j < cols_; ++j) os << (j ? "," : "") << at(i, j);
  }
  os << "]";
  return os.str();
}

HermiteResult hermite_normal_form(const IntMatrix& m) {
  IntMatrix h = m;
  IntMatrix u = IntMatrix::identity(m.rows());
  int pivot_row = 0;
  for (int col = 0; col < m.cols() && pivot_row < m.rows(); ++col) {
    // gcd elimination below the pivot row
    for (;;) {
      int best = -1;
      for (int r = pivot_row; r < m.rows(); ++r) {
        if (h.at(r, col) == 0) continue;
        if (best < 0 || abs_val(h.at(r, col)) < abs_val(h.at(best, col))) best = r;
      }
      if (best < 0) break;
      bool lone = true;
      for (int r = pivot_row; r < m.rows(); ++r) {
        if (r == best || h.at(r, col) == 0) continue;
        Integer q = h.at(r, col) / h.at(best, col);  // truncated; remainder shrinks
        h.addmul_row(r, best, -q);
        u.addmul_row(r, best, -q);
        if (h.at(r, col) != 0) lone = false;
      }
      if (lone) {
        h.swap_rows(pivot_row, best);
        u.swap_rows(pivot_row, best);
        break;
      }
    }
    if (h.at(pivot_row, col) == 0) continue;  // column has no pivot
    if (h.at(pivot_row, col) < 0) {
      h.negate_row(pivot_row);
      u.negate_row(pivot_row);
    }
    for (int r = 0; r < pivot_row; ++r) {
      Integer q = floor_div(h.at(r, col), h.at(pivot_row, col));
      if (q != 0) {
        h.addmul_row(r, pivot_row, -q);
        u.addmul_row(r, pivot_row, -q);
      }
    }
    ++pivot_row;
  }
  return {h, u};
}

SmithResult smith_normal_form(const IntMatrix& m) {
  IntMatrix s = m;
  IntMatrix u = IntMatrix::identity(m.rows());
  IntMatrix v = IntMatrix::identity(m.cols());
  int t = 0;
  int limit = std::min(m.rows(), m.cols());
  while (t < limit) {
    // locate minimal nonzero entry of the trailing submatrix
    int pi = -1, pj = -1;
    for (int i = t; i < m.rows(); ++i)
      for (int j = t; j < m.cols(); ++j) {
        if (s.at(i, j) == 0) continue;
        if (pi < 0 || abs_val(s.at(i, j)) < abs_val(s.at(pi, pj))) { pi = i; pj = j; }
      }
    if (pi < 0) break;  // trailing submatrix zero
    s.swap_rows(t, pi); u.swap_rows(t, pi);
    s.swap_cols(t, pj); v.swap_cols(t, pj);

    bool cleared = true;
    for (int i = t + 1; i < m.rows(); ++i) {
      if (s.at(i, t) == 0) continue;
      Integer q = s.at(i, t) / s.at(t, t);
      s.addmul_row(i, t, -q);
      u.addmul_row(i, t, -q);
      if (s.at(i, t) != 0) cleared = false;
    }
    for (int j = t + 1; j < m.cols(); ++j) {
      if (s.at(t, j) == 0) continue;
      Integer q = s.at(t, j) / s.at(t, t);
      s.addmul_col(j, t, -q);
      v.addmul_col(j, t, -q);
      if (s.at(t, j) != 0) cleared = false;
    }
    if (!cleared) continue;

    // divisibility: the pivot must divide the rest of the trailing block
    bool fixed = false;
    for (int i = t + 1; i < m.rows() && !fixed; ++i)
      for (int j = t + 1; j < m.cols() && !fixed; ++j)
        if (s.at(i, j) % s.at(t, t) != 0) {
          s.addmul_row(t, i, 1);
          u.addmul_row(t, i, 1);
          fixed = true;
        }
    if (fixed) continue;

    if (s.at(t, t) < 0) {
      s.negate_row(t);
      u.negate_row(t);
    }
    ++t;
  }
  return {s, u, v};
}

IntMatrix integer_kernel(const IntMatrix& m) {
  HermiteResult hr = hermite_normal_form(m.transposed());
  std::vector<int> zero_rows;
  for (int i = 0; i < hr.h.rows(); ++i) {
    bool zero = true;
    for (int j = 0; j < hr.h.cols(); ++j)
      if (hr.h.at(i, j) != 0) { zero = false; break; }
    if (zero) zero_rows.push_back(i);
  }
  IntMatrix basis(static_cast<int>(zero_rows.size()), m.cols());
  for (int k = 0; k < basis.rows(); ++k)
    for (int j = 0; j < m.cols(); ++j) basis.at(k, j) = hr.u.at(zero_rows[static_cast<std::size_t>(k)], j);
  // canonical basis of the kernel lattice
  IntMatrix canon = hermite_normal_form(basis).h;
  IntMatrix out(m.cols(), basis.rows());
  for (int k = 0; k < basis.rows(); ++k)
    for (int j = 0; j < m.cols(); ++j) out.at(j, k) = canon.at(k, j);
  return out;
}

AbelianGroupStructure cokernel_structure(const IntMatrix& m) {
  SmithResult sr = smith_normal_form(m);
  int limit = std::min(m.rows(), m.cols());
  int rank = 0;
  for (int i = 0; i < limit; ++i)
    if (sr.s.at(i, i) != 0) ++rank;

  AbelianGroupStructure g;
  g.free_rank = m.rows() - rank;
  for (int i = 0; i < rank; ++i)
    if (sr.s.at(i, i) > 1) g.torsion.push_back(sr.s.at(i, i));

  // free rows of u (indices >= rank) span the dual of the free quotient;
  // canonicalize them as a lattice basis
  IntMatrix free_rows(g.free_rank, m.rows());
  for (int k = 0; k < g.free_rank; ++k)
    for (int j = 0; j < m.rows(); ++j) free_rows.at(k, j) = sr.u.at(rank + k, j);
  IntMatrix free_canon = hermite_normal_form(free_rows).h;

  int tcount = static_cast<int>(g.torsion.size());
  g.projection = IntMatrix(g.free_rank + tcount, m.rows());
  g.row_moduli.assign(static_cast<std::size_t>(g.free_rank + tcount), Integer(0));
  for (int k = 0; k < g.free_rank; ++k)
    for (int j = 0; j < m.rows(); ++j) g.projection.at(k, j) = free_canon.at(k, j);
  int trow = 0;
  for (int i = 0; i < rank; ++i) {
    if (sr.s.at(i, i) <= 1) continue;
    for (int j = 0; j < m.rows(); ++j) g.projection.at(g.free_rank + trow, j) = sr.u.at(i, j);
    g.row_moduli[static_cast<std::size_t>(g.free_rank + trow)] = sr.s.at(i, i);
    ++trow;
  }
  return g;
}

IntMatrix integer_right_inverse(const IntMatrix& m) {
  int k = m.rows(), c = m.cols();
  if (k > c) fail_validation("right inverse requires a wide matrix");
  SmithResult sr = smith_normal_form(m);
  for (int i = 0; i < k; ++i)
    if (sr.s.at(i, i) != 1)
      fail_validation("matrix is not surjective over the integers");
  IntMatrix y(c, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) y.at(i, j) = sr.u.at(i, j);
  return sr.v * y;
}

Integer maximal_minor_gcd(const IntMatrix& m) {
  int k = std::min(m.rows(), m.cols());
  if (k == 0) return 0;
  Integer g = 0;
  std::vector<int> rsel(static_cast<std::size_t>(k)), csel;
  for (int i = 0; i < k; ++i) rsel[static_cast<std::size_t>(i)] = i;
  while (!rsel.empty()) {
    csel.resize(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) csel[static_cast<std::size_t>(j)] = j;
    while (!csel.empty()) {
      IntMatrix sub(k, k);
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
          sub.at(i, j) = m.at(rsel[static_cast<std::size_t>(i)], csel[static_cast<std::size_t>(j)]);
      g = boost::multiprecision::gcd(g, abs_val(sub.determinant()));
      if (g == 1) return g;
      next_combination(csel, m.cols());
    }
    next_combination(rsel, m.rows());
  }
  return g;
}

Integer gcd_of(const std::vector<Integer>& v) {
  Integer g = 0;
  for (const auto& x : v) g = boost::multiprecision::gcd(g, abs_val(x));
  return g;
}

std::vector<Integer> primitive(const std::vector<Integer>& v) {
  Integer g = gcd_of(v);
  if (g == 0 || g == 1) return v;
  std::vector<Integer> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / g;
  return out;
}

}  // namespace lagforge::lattice
