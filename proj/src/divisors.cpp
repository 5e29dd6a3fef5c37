#include "lagforge/divisors.hpp"

#include <algorithm>

namespace lagforge {

namespace {

std::vector<Integer> primitive_direction(const DelzantPolytope& p, const std::vector<Integer>& a) {
  if (static_cast<int>(a.size()) != p.dimension)
    fail_validation("direction has wrong dimension");
  if (std::all_of(a.begin(), a.end(), [](const Integer& x) { return x == 0; }))
    fail_validation("direction must be nonzero: no pencil");
  return lattice::primitive(a);
}

// image of (a_i)_i under the cokernel projection; zero iff the relation holds
bool vanishes_in_pic(const PicardData& pic, const std::vector<Integer>& coeffs) {
  const auto& proj = pic.group.projection;
  for (int row = 0; row < proj.rows(); ++row) {
    Integer acc = 0;
    for (int i = 0; i < proj.cols(); ++i) acc += proj.at(row, i) * coeffs[static_cast<std::size_t>(i)];
    const Integer& mod = pic.group.row_moduli[static_cast<std::size_t>(row)];
    if (mod == 0 ? acc != 0 : acc % mod != 0) return false;
  }
  return true;
}

}  // namespace

PicardData picard(const DelzantPolytope& p) {
  PicardData pic;
  pic.group = lattice::cokernel_structure(p.normals);
  return pic;
}

std::vector<Integer> direction_relation(const DelzantPolytope& p,
                                        const std::vector<Integer>& a) {
  std::vector<Integer> dir = primitive_direction(p, a);
  std::vector<Integer> coeffs(static_cast<std::size_t>(p.normals.rows()));
  for (int i = 0; i < p.normals.rows(); ++i) {
    Integer acc = 0;
    for (int j = 0; j < p.dimension; ++j) acc += dir[static_cast<std::size_t>(j)] * p.normals.at(i, j);
    coeffs[static_cast<std::size_t>(i)] = acc;
  }
  if (!vanishes_in_pic(picard(p), coeffs))
    fail_numeric("divisor relation does not vanish in the class group");
  return coeffs;
}

PencilData split_pencil(const DelzantPolytope& p, const std::vector<Integer>& a) {
  PencilData out;
  out.direction = primitive_direction(p, a);
  out.coefficients = direction_relation(p, out.direction);

  for (int i = 0; i < static_cast<int>(out.coefficients.size()); ++i) {
    const Integer& c = out.coefficients[static_cast<std::size_t>(i)];
    if (c > 0)
      out.plus_exponents[i] = c;
    else if (c < 0)
      out.minus_exponents[i] = -c;
    else
      out.zero_facets.push_back(i);
  }
  if (out.plus_exponents.empty() || out.minus_exponents.empty())
    fail_infeasible("direction yields no pencil: coefficients are not mixed-sign");

  PicardData pic = picard(p);
  auto side_class = [&](const std::map<int, Integer>& side) {
    std::vector<Integer> acc(static_cast<std::size_t>(pic.class_length()), Integer(0));
    for (const auto& [facet, mult] : side) {
      auto cls = pic.class_of(facet);
      for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += mult * cls[k];
    }
    return acc;
  };
  std::vector<Integer> plus_class = side_class(out.plus_exponents);
  std::vector<Integer> minus_class = side_class(out.minus_exponents);
  for (std::size_t k = 0; k < plus_class.size(); ++k) {
    const Integer& mod = pic.group.row_moduli[k];
    Integer diff = plus_class[k] - minus_class[k];
    if (mod == 0 ? diff != 0 : diff % mod != 0)
      fail_numeric("[D+] and [D-] disagree in the class group");
  }
  out.pencil_class = plus_class;

  auto faces = facet_incidence(p);
  for (const auto& [i, ci] : out.plus_exponents) {
    (void)ci;
    for (const auto& [j, cj] : out.minus_exponents) {
      (void)cj;
      if (find_face(faces, {std::min(i, j), std::max(i, j)}).nonempty)
        out.base_locus.emplace_back(i, j);
    }
  }

  IntMatrix dir_row(1, p.dimension);
  for (int j = 0; j < p.dimension; ++j) dir_row.at(0, j) = out.direction[static_cast<std::size_t>(j)];
  out.reduced_basis = lattice::integer_kernel(dir_row).transposed();
  return out;
}

Json picard_to_json(const PicardData& pic) {
  Json j;
  j["free_rank"] = pic.group.free_rank;
  Json torsion = Json::array();
  for (const auto& t : pic.group.torsion) torsion.push_back(t.str());
  j["torsion"] = std::move(torsion);
  Json classes = Json::array();
  for (int i = 0; i < pic.group.projection.cols(); ++i) {
    Json cls = Json::array();
    for (const auto& x : pic.class_of(i)) cls.push_back(x.str());
    classes.push_back(std::move(cls));
  }
  j["classes"] = std::move(classes);
  return j;
}

Json pencil_to_json(const PencilData& pencil) {
  Json j;
  auto int_array = [](const std::vector<Integer>& v) {
    Json arr = Json::array();
    for (const auto& x : v) arr.push_back(x.str());
    return arr;
  };
  j["direction"] = int_array(pencil.direction);
  j["coefficients"] = int_array(pencil.coefficients);
  auto side = [](const std::map<int, Integer>& m) {
    Json obj = Json::object();
    for (const auto& [facet, mult] : m) obj[std::to_string(facet)] = mult.str();
    return obj;
  };
  j["plus_exponents"] = side(pencil.plus_exponents);
  j["minus_exponents"] = side(pencil.minus_exponents);
  j["zero_facets"] = pencil.zero_facets;
  j["pencil_class"] = int_array(pencil.pencil_class);
  Json base = Json::array();
  for (const auto& [i, jdx] : pencil.base_locus) base.push_back(Json::array({i, jdx}));
  j["base_locus"] = std::move(base);
  Json basis = Json::array();
  for (int i = 0; i < pencil.reduced_basis.rows(); ++i)
    basis.push_back(int_array(pencil.reduced_basis.row_vec(i)));
  j["reduced_basis"] = std::move(basis);
  return j;
}

}  // namespace lagforge
