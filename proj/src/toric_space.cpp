#include "lagforge/toric_space.hpp"

#include <algorithm>
#include <cmath>

namespace lagforge {

namespace {

Eigen::MatrixXd to_dense(const IntMatrix& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) out(i, j) = static_cast<double>(m.at(i, j));
  return out;
}

}  // namespace

ReductionData reduction_setup(const DelzantPolytope& p, double area_scale) {
  if (!(area_scale > 0)) fail_validation("area scale must be positive");
  ReductionData rd;
  rd.polytope = p;
  rd.area_scale = area_scale;

  IntMatrix nt = p.normals.transposed();  // n x r
  rd.q = lattice::integer_kernel(nt).transposed();  // rows span ker(N^T), saturated
  if (!(rd.q * p.normals).is_zero()) fail_numeric("relation lattice does not annihilate the normals");
  rd.section = lattice::integer_right_inverse(nt);

  rd.normals_d = to_dense(p.normals);
  rd.q_d = to_dense(rd.q);
  rd.section_d = to_dense(rd.section);
  rd.offsets_d.resize(p.facet_count());
  for (int i = 0; i < p.facet_count(); ++i)
    rd.offsets_d(i) = rational_to_double(p.offsets[static_cast<std::size_t>(i)]);

  rd.level = area_scale * (rd.q_d * rd.offsets_d);
  rd.moment_solver =
      (rd.normals_d.transpose() * rd.normals_d).ldlt().solve(rd.normals_d.transpose());

  rd.bounded = is_bounded(p);
  if (rd.bounded) rd.incidence = facet_incidence(p);
  return rd;
}

double level_residual(const ReductionData& rd, const ToricPoint& p) {
  if (p.z.size() != rd.r()) fail_validation("point has wrong coordinate count");
  if (rd.q.rows() == 0) return 0.0;
  Eigen::VectorXd half_sq = 0.5 * p.z.cwiseAbs2().real();
  return ((rd.q_d * half_sq - rd.level).cwiseAbs().maxCoeff()) / std::max(1.0, rd.area_scale);
}

void check_point(const ReductionData& rd, const ToricPoint& p) {
  double res = level_residual(rd, p);
  if (res > rd.tol.level_rel)
    fail_numeric("point is off the reduction level set (relative residual " +
                 std::to_string(res) + ")");
  if (!rd.bounded) return;
  double scale = std::sqrt(2.0 * rd.area_scale);
  std::vector<int> zero_set;
  for (int i = 0; i < rd.r(); ++i)
    if (std::abs(p.z(i)) <= 1e-12 * scale) zero_set.push_back(i);
  if (zero_set.empty()) return;
  if (static_cast<int>(zero_set.size()) > rd.n() ||
      !find_face(rd.incidence, zero_set).nonempty)
    fail_validation("vanishing coordinates do not form a face: unstable point");
}

ToricPoint lift_from_moment(const ReductionData& rd, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& theta) {
  if (x.size() != rd.n() || theta.size() != rd.n())
    fail_validation("moment point and angles must have the polytope dimension");
  Eigen::VectorXd dist = rd.normals_d * x + rd.offsets_d;
  if (dist.minCoeff() <= 0)
    fail_infeasible("moment point must lie strictly inside the polytope");
  Eigen::VectorXd phase = rd.section_d * theta;
  ToricPoint p;
  p.z.resize(rd.r());
  for (int i = 0; i < rd.r(); ++i)
    p.z(i) = std::polar(std::sqrt(2.0 * rd.area_scale * dist(i)), phase(i));
  return p;
}

Eigen::VectorXd moment_map(const ReductionData& rd, const ToricPoint& p) {
  if (p.z.size() != rd.r()) fail_validation("point has wrong coordinate count");
  Eigen::VectorXd d = p.z.cwiseAbs2().real() / (2.0 * rd.area_scale);
  Eigen::VectorXd x = rd.moment_solver * (d - rd.offsets_d);
  double residual = (rd.normals_d * x + rd.offsets_d - d).cwiseAbs().maxCoeff();
  if (residual > rd.tol.moment)
    fail_numeric("moment system residual " + std::to_string(residual) +
                 ": point is not on a single reduction level");
  return x;
}

Eigen::VectorXd torus_angle(const ReductionData& rd, const ToricPoint& p) {
  Eigen::VectorXd args(rd.r());
  for (int i = 0; i < rd.r(); ++i) args(i) = std::arg(p.z(i));
  return rd.normals_d.transpose() * args;
}

TangentRep project_horizontal(const ReductionData& rd, const ToricPoint& p,
                              const Eigen::VectorXcd& v) {
  if (v.size() != rd.r()) fail_validation("tangent vector has wrong coordinate count");
  int k = rd.q.rows();
  if (k == 0) return {v, true};
  // real-orthogonal projection off span{w_j . z, i w_j . z}
  Eigen::MatrixXcd dirs(rd.r(), 2 * k);
  for (int j = 0; j < k; ++j) {
    Eigen::VectorXcd base = rd.q_d.row(j).transpose().cast<Complex>().cwiseProduct(p.z);
    dirs.col(2 * j) = base;
    dirs.col(2 * j + 1) = Complex(0, 1) * base;
  }
  Eigen::MatrixXd gram(2 * k, 2 * k);
  Eigen::VectorXd rhs(2 * k);
  for (int a = 0; a < 2 * k; ++a) {
    for (int b = 0; b < 2 * k; ++b) gram(a, b) = dirs.col(a).dot(dirs.col(b)).real();
    rhs(a) = dirs.col(a).dot(v).real();
  }
  Eigen::VectorXd coeff = gram.ldlt().solve(rhs);
  Eigen::VectorXcd out = v;
  for (int a = 0; a < 2 * k; ++a) out -= coeff(a) * dirs.col(a);
  return {out, true};
}

double omega_eval(const ReductionData& rd, const ToricPoint& p,
                  const TangentRep& u, const TangentRep& v) {
  (void)p;
  if (!u.horizontal || !v.horizontal)
    fail_validation("omega is only defined on horizontal representatives");
  if (u.v.size() != rd.r() || v.v.size() != rd.r())
    fail_validation("tangent vector has wrong coordinate count");
  return u.v.dot(v.v).imag();  // Eigen dot conjugates the left factor
}

ToricPoint subtorus_flow(const ReductionData& rd, const ToricPoint& p,
                         const std::vector<Integer>& b, double t) {
  if (static_cast<int>(b.size()) != rd.n()) fail_validation("flow direction has wrong dimension");
  if (std::all_of(b.begin(), b.end(), [](const Integer& x) { return x == 0; }))
    fail_validation("flow direction must be nonzero");
  ToricPoint out;
  out.z.resize(rd.r());
  for (int i = 0; i < rd.r(); ++i) {
    double w = 0;
    for (int j = 0; j < rd.n(); ++j)
      w += static_cast<double>(b[static_cast<std::size_t>(j)]) * rd.normals_d(i, j);
    out.z(i) = std::polar(1.0, t * w) * p.z(i);
  }
  return out;
}

ToricPoint gauge_act(const ReductionData& rd, const ToricPoint& p,
                     const Eigen::VectorXd& phi) {
  if (phi.size() != rd.q.rows()) fail_validation("gauge angle has wrong dimension");
  ToricPoint out;
  out.z.resize(rd.r());
  Eigen::VectorXd w = rd.q_d.transpose() * phi;
  for (int i = 0; i < rd.r(); ++i) out.z(i) = std::polar(1.0, w(i)) * p.z(i);
  return out;
}

ProjectivePoint pencil_map(const ReductionData& rd, const PencilData& pencil,
                           const ToricPoint& p) {
  if (p.z.size() != rd.r()) fail_validation("point has wrong coordinate count");
  // both monomials must carry the same reduction-torus weight, else the map
  // would depend on the gauge representative
  for (int j = 0; j < rd.q.rows(); ++j) {
    Integer weight = 0;
    for (const auto& [i, c] : pencil.plus_exponents) weight += c * rd.q.at(j, i);
    for (const auto& [i, c] : pencil.minus_exponents) weight -= c * rd.q.at(j, i);
    if (weight != 0) fail_validation("pencil data does not match this reduction");
  }
  auto monomial = [&](const std::map<int, Integer>& side) {
    Complex acc(1.0, 0.0);
    for (const auto& [i, c] : side) {
      long exp = static_cast<long>(c);
      for (long k = 0; k < exp; ++k) acc *= p.z(i);
    }
    return acc;
  };
  ProjectivePoint out{monomial(pencil.plus_exponents), monomial(pencil.minus_exponents)};
  double norm = std::hypot(std::abs(out.plus), std::abs(out.minus));
  if (std::abs(out.plus) <= rd.tol.base_locus && std::abs(out.minus) <= rd.tol.base_locus)
    fail_infeasible("point lies on the base locus of the pencil");
  out.plus /= norm;
  out.minus /= norm;
  return out;
}

double chordal_distance(const ProjectivePoint& a, const ProjectivePoint& b) {
  double na = std::hypot(std::abs(a.plus), std::abs(a.minus));
  double nb = std::hypot(std::abs(b.plus), std::abs(b.minus));
  return std::abs(a.plus * b.minus - a.minus * b.plus) / (na * nb);
}

}  // namespace lagforge
