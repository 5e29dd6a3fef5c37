#include "lagforge/polytope.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace lagforge {

namespace {

// visit all k-subsets of {0..n-1} in lexicographic order
template <typename Fn>
void for_each_combination(int n, int k, Fn&& fn) {
  if (k < 0 || k > n) return;
  std::vector<int> c(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) c[static_cast<std::size_t>(i)] = i;
  for (;;) {
    fn(static_cast<const std::vector<int>&>(c));
    int i = k - 1;
    while (i >= 0 && c[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) return;
    ++c[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) c[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j - 1)] + 1;
  }
}

using RatRow = std::vector<Rational>;

// in-place fraction-free-ish elimination; returns rank
int rat_rank(std::vector<RatRow> m) {
  if (m.empty()) return 0;
  std::size_t cols = m[0].size();
  int rank = 0;
  for (std::size_t col = 0; col < cols && rank < static_cast<int>(m.size()); ++col) {
    std::size_t pivot = static_cast<std::size_t>(rank);
    while (pivot < m.size() && m[pivot][col] == 0) ++pivot;
    if (pivot == m.size()) continue;
    std::swap(m[static_cast<std::size_t>(rank)], m[pivot]);
    const RatRow& pr = m[static_cast<std::size_t>(rank)];
    for (std::size_t i = static_cast<std::size_t>(rank) + 1; i < m.size(); ++i) {
      if (m[i][col] == 0) continue;
      Rational f = m[i][col] / pr[col];
      for (std::size_t j = col; j < cols; ++j) m[i][j] -= f * pr[j];
    }
    ++rank;
  }
  return rank;
}

// solve A x = b exactly for square A (rows of an IntMatrix selected by idx);
// returns false if A is singular
bool solve_square(const IntMatrix& normals, const std::vector<int>& idx,
                  const std::vector<Rational>& b, std::vector<Rational>& x) {
  int n = normals.cols();
  std::vector<RatRow> aug(static_cast<std::size_t>(n), RatRow(static_cast<std::size_t>(n) + 1));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j)
      aug[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = Rational(normals.at(idx[static_cast<std::size_t>(i)], j));
    aug[static_cast<std::size_t>(i)][static_cast<std::size_t>(n)] = b[static_cast<std::size_t>(i)];
  }
  for (int col = 0; col < n; ++col) {
    int pivot = -1;
    for (int i = col; i < n; ++i)
      if (aug[static_cast<std::size_t>(i)][static_cast<std::size_t>(col)] != 0) { pivot = i; break; }
    if (pivot < 0) return false;
    std::swap(aug[static_cast<std::size_t>(col)], aug[static_cast<std::size_t>(pivot)]);
    for (int i = 0; i < n; ++i) {
      if (i == col || aug[static_cast<std::size_t>(i)][static_cast<std::size_t>(col)] == 0) continue;
      Rational f = aug[static_cast<std::size_t>(i)][static_cast<std::size_t>(col)] / aug[static_cast<std::size_t>(col)][static_cast<std::size_t>(col)];
      for (int j = col; j <= n; ++j)
        aug[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] -= f * aug[static_cast<std::size_t>(col)][static_cast<std::size_t>(j)];
    }
  }
  x.assign(static_cast<std::size_t>(n), Rational(0));
  for (int i = 0; i < n; ++i)
    x[static_cast<std::size_t>(i)] = aug[static_cast<std::size_t>(i)][static_cast<std::size_t>(n)] / aug[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
  return true;
}

Rational facet_value(const DelzantPolytope& p, int facet, const std::vector<Rational>& x) {
  Rational v = p.offsets[static_cast<std::size_t>(facet)];
  for (int j = 0; j < p.dimension; ++j) v += Rational(p.normals.at(facet, j)) * x[static_cast<std::size_t>(j)];
  return v;
}

void check_dims(const DelzantPolytope& p) {
  if (p.dimension < 1) fail_validation("polytope dimension must be at least 1");
  if (p.normals.cols() != p.dimension)
    fail_validation("normal matrix has " + std::to_string(p.normals.cols()) +
                    " columns, expected dimension " + std::to_string(p.dimension));
  if (static_cast<int>(p.offsets.size()) != p.normals.rows())
    fail_validation("offset count does not match facet count");
}

void check_structure(const DelzantPolytope& p) {
  check_dims(p);
  if (p.normals.rows() < p.dimension + 1)
    fail_validation("a bounded polytope needs at least n+1 facets");
}

// affine dimension of a point set (rank of differences to the first point)
int affine_dim(const std::vector<const VertexData*>& pts, int n) {
  if (pts.empty()) return -1;
  std::vector<RatRow> diffs;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    RatRow d(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j)
      d[static_cast<std::size_t>(j)] = pts[i]->coordinates[static_cast<std::size_t>(j)] - pts[0]->coordinates[static_cast<std::size_t>(j)];
    diffs.push_back(std::move(d));
  }
  return diffs.empty() ? 0 : rat_rank(std::move(diffs));
}

IntMatrix row_subset(const IntMatrix& m, const std::vector<int>& rows) {
  IntMatrix out(static_cast<int>(rows.size()), m.cols());
  for (int i = 0; i < out.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) out.at(i, j) = m.at(rows[static_cast<std::size_t>(i)], j);
  return out;
}

}  // namespace

bool is_bounded(const DelzantPolytope& p) {
  check_dims(p);
  int n = p.dimension;
  int r = p.normals.rows();
  {
    std::vector<RatRow> rows(static_cast<std::size_t>(r), RatRow(static_cast<std::size_t>(n)));
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < n; ++j) rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = Rational(p.normals.at(i, j));
    if (rat_rank(std::move(rows)) < n) return false;  // nonzero lineality
  }
  // the recession cone is pointed; any nonzero ray lies on an extreme ray,
  // which is cut out by some n-1 normals
  bool ray_found = false;
  for_each_combination(r, n - 1, [&](const std::vector<int>& subset) {
    if (ray_found) return;
    IntMatrix k = lattice::integer_kernel(row_subset(p.normals, subset));
    if (k.cols() != 1) return;
    for (int sign = 0; sign < 2 && !ray_found; ++sign) {
      bool feasible = true;
      for (int i = 0; i < r && feasible; ++i) {
        Integer dot = 0;
        for (int j = 0; j < n; ++j) dot += p.normals.at(i, j) * k.at(j, 0);
        if (sign) dot = -dot;
        if (dot < 0) feasible = false;
      }
      if (feasible) ray_found = true;
    }
  });
  return !ray_found;
}

std::vector<VertexData> vertices(const DelzantPolytope& p) {
  check_dims(p);
  if (!is_bounded(p)) fail_infeasible("polytope is unbounded");
  int n = p.dimension;
  int r = p.normals.rows();

  std::vector<VertexData> out;
  auto seen = [&](const std::vector<Rational>& x) {
    for (const auto& v : out)
      if (v.coordinates == x) return true;
    return false;
  };

  for_each_combination(r, n, [&](const std::vector<int>& subset) {
    std::vector<Rational> rhs(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) rhs[static_cast<std::size_t>(i)] = -p.offsets[static_cast<std::size_t>(subset[static_cast<std::size_t>(i)])];
    std::vector<Rational> x;
    if (!solve_square(p.normals, subset, rhs, x)) return;
    for (int i = 0; i < r; ++i)
      if (facet_value(p, i, x) < 0) return;
    if (seen(x)) return;
    VertexData v;
    v.coordinates = x;
    for (int i = 0; i < r; ++i)
      if (facet_value(p, i, x) == 0) v.active_facets.push_back(i);
    out.push_back(std::move(v));
  });

  if (out.empty()) fail_infeasible("feasible region is empty");
  std::sort(out.begin(), out.end(), [](const VertexData& a, const VertexData& b) {
    return a.coordinates < b.coordinates;
  });
  return out;
}

ValidationReport validate_delzant(const DelzantPolytope& p) {
  check_structure(p);
  ValidationReport report;
  auto add = [&](const std::string& name, bool pass, const std::string& detail) {
    report.checks.push_back({name, pass, detail});
  };

  {
    bool ok = true;
    std::string detail;
    for (int i = 0; i < p.normals.rows(); ++i) {
      auto row = p.normals.row_vec(i);
      Integer g = lattice::gcd_of(row);
      if (g != 1) {
        ok = false;
        detail = "facet " + std::to_string(i) + " normal has gcd " + g.str();
        break;
      }
    }
    add("primitivity", ok, ok ? "all normals primitive" : detail);
  }

  bool bounded = is_bounded(p);
  add("boundedness", bounded, bounded ? "recession cone is trivial" : "recession cone contains a ray");

  std::vector<VertexData> verts;
  if (bounded) {
    try {
      verts = vertices(p);
    } catch (const Error&) {
      // empty feasible region; geometric checks below fail with that detail
    }
  }
  const std::string blocked = bounded ? "feasible region is empty" : "not evaluated: polytope unbounded";

  {
    std::vector<const VertexData*> all;
    for (const auto& v : verts) all.push_back(&v);
    bool ok = !verts.empty() && affine_dim(all, p.dimension) == p.dimension;
    add("full_dimension", ok,
        ok ? "vertex hull spans R^n" : (verts.empty() ? blocked : "vertex hull is lower-dimensional"));
  }

  {
    bool ok = !verts.empty();
    std::string detail = blocked;
    for (int i = 0; ok && i < p.normals.rows(); ++i) {
      std::vector<const VertexData*> on_facet;
      for (const auto& v : verts)
        if (std::binary_search(v.active_facets.begin(), v.active_facets.end(), i)) on_facet.push_back(&v);
      if (affine_dim(on_facet, p.dimension) != p.dimension - 1) {
        ok = false;
        detail = "facet " + std::to_string(i) + " supports no (n-1)-face";
      }
    }
    add("irredundancy", ok, ok ? "every inequality supports a facet" : detail);
  }

  bool simple = !verts.empty();
  {
    std::string detail = blocked;
    for (const auto& v : verts)
      if (static_cast<int>(v.active_facets.size()) != p.dimension) {
        simple = false;
        std::ostringstream os;
        os << "vertex (";
        for (std::size_t j = 0; j < v.coordinates.size(); ++j)
          os << (j ? "," : "") << rational_to_string(v.coordinates[j]);
        os << ") lies on " << v.active_facets.size() << " facets";
        detail = os.str();
        break;
      }
    add("simplicity", simple, simple ? "every vertex lies on exactly n facets" : detail);
  }

  {
    bool ok = simple;
    std::string detail = simple ? "" : (verts.empty() ? blocked : "not evaluated: polytope is not simple");
    for (const auto& v : verts) {
      if (!ok) break;
      if (static_cast<int>(v.active_facets.size()) != p.dimension) continue;
      Integer det = row_subset(p.normals, v.active_facets).determinant();
      if (det != 1 && det != -1) {
        ok = false;
        std::string at;
        for (const auto& q : v.coordinates) at += (at.empty() ? "(" : ", ") + rational_to_string(q);
        detail = "active normals at vertex " + at + ") have determinant " + det.str();
      }
    }
    add("unimodularity", ok, ok ? "every vertex basis has determinant +-1" : detail);
  }

  report.pass = std::all_of(report.checks.begin(), report.checks.end(),
                            [](const CheckResult& c) { return c.pass; });
  return report;
}

std::vector<FaceIncidence> facet_incidence(const DelzantPolytope& p) {
  std::vector<VertexData> verts = vertices(p);
  int n = p.dimension;
  int r = p.normals.rows();
  std::vector<FaceIncidence> out;
  for (int k = 0; k <= n; ++k) {
    for_each_combination(r, k, [&](const std::vector<int>& subset) {
      FaceIncidence fi;
      fi.facets = subset;
      std::vector<const VertexData*> pts;
      for (const auto& v : verts) {
        bool all_active = true;
        for (int f : subset)
          if (!std::binary_search(v.active_facets.begin(), v.active_facets.end(), f)) { all_active = false; break; }
        if (all_active) pts.push_back(&v);
      }
      fi.nonempty = !pts.empty();
      fi.dimension = affine_dim(pts, n);
      out.push_back(std::move(fi));
    });
  }
  return out;
}

const FaceIncidence& find_face(const std::vector<FaceIncidence>& faces,
                               const std::vector<int>& subset) {
  std::vector<int> key = subset;
  std::sort(key.begin(), key.end());
  for (const auto& f : faces)
    if (f.facets == key) return f;
  fail_validation("face subset not present in incidence table");
}

Rational parse_rational(const std::string& text) {
  std::string s = text;
  s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }), s.end());
  if (s.empty()) fail_validation("empty rational literal");
  auto slash = s.find('/');
  try {
    if (slash == std::string::npos) return Rational(Integer(s));
    Integer num(s.substr(0, slash));
    Integer den(s.substr(slash + 1));
    if (den == 0) fail_validation("rational literal with zero denominator: " + text);
    return Rational(num, den);
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    fail_validation("malformed rational literal: " + text);
  }
}

std::string rational_to_string(const Rational& q) {
  if (boost::multiprecision::denominator(q) == 1)
    return boost::multiprecision::numerator(q).str();
  return boost::multiprecision::numerator(q).str() + "/" + boost::multiprecision::denominator(q).str();
}

double rational_to_double(const Rational& q) { return static_cast<double>(q); }

DelzantPolytope polytope_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("dimension") || !j.contains("normals") || !j.contains("offsets"))
    fail_validation("polytope JSON needs dimension, normals, offsets");
  DelzantPolytope p;
  p.dimension = j.at("dimension").get<int>();
  const auto& normals = j.at("normals");
  if (!normals.is_array() || normals.empty()) fail_validation("normals must be a nonempty array of rows");
  p.normals = IntMatrix(static_cast<int>(normals.size()), p.dimension >= 0 ? p.dimension : 0);
  for (int i = 0; i < p.normals.rows(); ++i) {
    const auto& row = normals.at(static_cast<std::size_t>(i));
    if (!row.is_array() || static_cast<int>(row.size()) != p.dimension)
      fail_validation("normal row " + std::to_string(i) + " has wrong length");
    for (int k = 0; k < p.dimension; ++k)
      p.normals.at(i, k) = Integer(row.at(static_cast<std::size_t>(k)).get<long long>());
  }
  for (const auto& entry : j.at("offsets")) {
    if (entry.is_string())
      p.offsets.push_back(parse_rational(entry.get<std::string>()));
    else if (entry.is_number_integer())
      p.offsets.push_back(Rational(entry.get<long long>()));
    else
      fail_validation("offsets must be rational strings");
  }
  check_dims(p);
  return p;
}

Json polytope_to_json(const DelzantPolytope& p) {
  Json j;
  j["dimension"] = p.dimension;
  Json rows = Json::array();
  for (int i = 0; i < p.normals.rows(); ++i) {
    Json row = Json::array();
    for (int k = 0; k < p.dimension; ++k)
      row.push_back(static_cast<long long>(p.normals.at(i, k)));
    rows.push_back(std::move(row));
  }
  j["normals"] = std::move(rows);
  Json offs = Json::array();
  for (const auto& q : p.offsets) offs.push_back(rational_to_string(q));
  j["offsets"] = std::move(offs);
  return j;
}

DelzantPolytope load_polytope_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_usage("cannot open polytope file: " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const std::exception& e) {
    fail_usage("polytope file is not valid JSON: " + std::string(e.what()));
  }
  return polytope_from_json(j);
}

}  // namespace lagforge
