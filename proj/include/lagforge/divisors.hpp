#pragma once

#include <map>
#include <utility>
#include <vector>

#include "lagforge/polytope.hpp"

namespace lagforge {

// Divisor class group of the toric space attached to P: the cokernel of
// m |-> (<m, nu_i>)_i.  Coordinates are the free rows of the projection
// followed by the torsion rows (empty for any validated P).
struct PicardData {
  lattice::AbelianGroupStructure group;

  // class vector of [D_i] in the chosen cokernel coordinates
  std::vector<Integer> class_of(int facet) const { return group.projection.col_vec(facet); }
  int class_length() const { return group.projection.rows(); }
};

// The divisor relation sum_i <a, nu_i> [D_i] = 0 split by coefficient sign.
// psi = prod z_i^{a_i} is the induced pencil; facet indices are 0-based.
struct PencilData {
  std::vector<Integer> direction;              // primitive representative of a
  std::vector<Integer> coefficients;           // a_i = <a, nu_i> per facet
  std::map<int, Integer> plus_exponents;       // i -> a_i for a_i > 0
  std::map<int, Integer> minus_exponents;      // i -> |a_i| for a_i < 0
  std::vector<int> zero_facets;                // a_i = 0
  std::vector<Integer> pencil_class;           // [D+] = [D-] in Pic coordinates
  std::vector<std::pair<int, int>> base_locus; // (plus facet, minus facet), face nonempty
  IntMatrix reduced_basis;                     // (n-1) x n; rows span the saturated annihilator of a
};

PicardData picard(const DelzantPolytope& p);

// a_i = <a, nu_i> for the primitive representative of a; checks that the
// relation vanishes in Pic.  a = 0 is an error.
std::vector<Integer> direction_relation(const DelzantPolytope& p,
                                        const std::vector<Integer>& a);

// Requires mixed signs among the a_i (guaranteed for bounded P, guarded anyway).
PencilData split_pencil(const DelzantPolytope& p, const std::vector<Integer>& a);

Json pencil_to_json(const PencilData& pencil);
Json picard_to_json(const PicardData& pic);

}  // namespace lagforge
