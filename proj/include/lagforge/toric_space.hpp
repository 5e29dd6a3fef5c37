#pragma once

#include <Eigen/Dense>

#include <complex>
#include <vector>

#include "lagforge/divisors.hpp"
#include "lagforge/polytope.hpp"

namespace lagforge {

// Everything needed to work in the symplectic reduction C^r // T_Q at level
// kappa: Q spans the saturated relation lattice of the normals (QN = 0), the
// phase section sigma is an integer right inverse of N^T used to pin torus
// angles, and kappa = area_scale * Q * lambda.
struct ReductionData {
  DelzantPolytope polytope;
  double area_scale = kTwoPi;

  IntMatrix q;        // (r-n) x r, exact
  IntMatrix section;  // r x n, exact; N^T * section = I_n

  Eigen::VectorXd level;      // kappa
  Eigen::MatrixXd normals_d;  // r x n
  Eigen::VectorXd offsets_d;  // r
  Eigen::MatrixXd q_d;        // (r-n) x r
  Eigen::MatrixXd section_d;  // r x n
  Eigen::MatrixXd moment_solver;  // n x r, least-squares inverse of N

  // incidence table of the polytope when bounded (admissible zero sets);
  // empty for the r = n affine chart
  std::vector<FaceIncidence> incidence;
  bool bounded = false;

  Tolerances tol;

  int n() const { return polytope.dimension; }
  int r() const { return polytope.facet_count(); }
};

struct ToricPoint {
  Eigen::VectorXcd z;  // Cox coordinates, one per facet
};

struct TangentRep {
  Eigen::VectorXcd v;
  bool horizontal = false;
};

// (s+ : s-), scaled to unit magnitude on the pair
struct ProjectivePoint {
  Complex plus;
  Complex minus;
};

ReductionData reduction_setup(const DelzantPolytope& p, double area_scale = kTwoPi);

// max_j |Q_j . (|z|^2/2) - kappa_j|, relative to area_scale
double level_residual(const ReductionData& rd, const ToricPoint& p);

// level residual within tolerance and zero coordinates forming a face
void check_point(const ReductionData& rd, const ToricPoint& p);

// |z_i|^2/2 = area_scale * (<x, nu_i> + lambda_i), phases = sigma * theta;
// x must be strictly interior
ToricPoint lift_from_moment(const ReductionData& rd, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& theta);

// least-squares solve of <x, nu_i> + lambda_i = |z_i|^2 / (2 * area_scale);
// errors when the residual betrays an off-level point
Eigen::VectorXd moment_map(const ReductionData& rd, const ToricPoint& p);

// torus angle N^T arg(z), defined modulo 2*pi per coordinate
Eigen::VectorXd torus_angle(const ReductionData& rd, const ToricPoint& p);

// remove gauge-orbit components {i w_j . z} and level-normal components
// {w_j . z} (w_j rows of Q) in the real inner product on C^r
TangentRep project_horizontal(const ReductionData& rd, const ToricPoint& p,
                              const Eigen::VectorXcd& v);

// omega_0(u, v) = sum_i Im(conj(u_i) v_i); requires horizontal representatives
double omega_eval(const ReductionData& rd, const ToricPoint& p,
                  const TangentRep& u, const TangentRep& v);

// z_i -> exp(i t <b, nu_i>) z_i, the Hamiltonian circle generated by <b, mu>
ToricPoint subtorus_flow(const ReductionData& rd, const ToricPoint& p,
                         const std::vector<Integer>& b, double t);

// gauge action of the reduction torus: z_i -> exp(i sum_j phi_j Q_ji) z_i
ToricPoint gauge_act(const ReductionData& rd, const ToricPoint& p,
                     const Eigen::VectorXd& phi);

// psi = prod_plus z^a : prod_minus z^|a|; errors on the base locus
ProjectivePoint pencil_map(const ReductionData& rd, const PencilData& pencil,
                           const ToricPoint& p);

double chordal_distance(const ProjectivePoint& a, const ProjectivePoint& b);

}  // namespace lagforge
