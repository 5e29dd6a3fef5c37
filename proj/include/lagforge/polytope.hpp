#pragma once

#include <json.hpp>

#include <string>
#include <vector>

#include "lagforge/common.hpp"
#include "lagforge/int_matrix.hpp"

namespace lagforge {

using lattice::Integer;
using lattice::IntMatrix;
using lattice::Rational;

using Json = nlohmann::ordered_json;

// P = {x in R^n : <x, nu_i> + lambda_i >= 0}, facet i carries the inward
// primitive normal nu_i (row i of `normals`).  Facet indices are the canonical
// divisor labels everywhere downstream.
struct DelzantPolytope {
  int dimension = 0;
  IntMatrix normals;  // r x n
  std::vector<Rational> offsets;

  int facet_count() const { return normals.rows(); }
};

struct VertexData {
  std::vector<Rational> coordinates;
  std::vector<int> active_facets;  // sorted
};

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<CheckResult> checks;
  bool pass = false;  // all checks pass
};

struct FaceIncidence {
  std::vector<int> facets;  // sorted subset, |facets| <= n
  bool nonempty = false;
  int dimension = -1;  // -1 when empty
};

// Throws a validation error on structurally malformed input (dimension
// mismatch, r < n+1); geometric failures are reported, never thrown.
ValidationReport validate_delzant(const DelzantPolytope& p);

// Exact rational vertex enumeration over all n-subsets of facets.
// Throws infeasible on unbounded or empty feasible regions.
std::vector<VertexData> vertices(const DelzantPolytope& p);

// Recession cone test: bounded iff {v : Nv >= 0} = {0}.
bool is_bounded(const DelzantPolytope& p);

// Nonemptiness and dimension of every face P ∩ {facets in S active},
// for all subsets S with |S| <= n (including S = {} -> P itself).
std::vector<FaceIncidence> facet_incidence(const DelzantPolytope& p);

// Lookup helper over the list facet_incidence returns.
const FaceIncidence& find_face(const std::vector<FaceIncidence>& faces,
                               const std::vector<int>& subset);

// "p/q" or "p"; exact
Rational parse_rational(const std::string& text);
std::string rational_to_string(const Rational& q);
double rational_to_double(const Rational& q);

// Fixture schema: {"dimension": n, "normals": [[int,...],...], "offsets": ["p/q",...]}
DelzantPolytope polytope_from_json(const Json& j);
Json polytope_to_json(const DelzantPolytope& p);
DelzantPolytope load_polytope_file(const std::string& path);

}  // namespace lagforge
