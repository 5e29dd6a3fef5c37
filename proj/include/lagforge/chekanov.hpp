#pragma once

#include <iosfwd>

#include "lagforge/report.hpp"
#include "lagforge/toric_space.hpp"

namespace lagforge {

// Loop in the affine psi-chart (t = s+/s-).  Circles are the workhorse;
// closed polylines cover loops with prescribed corners (repeated circuits,
// figure loops).
struct LoopSpec {
  enum class Kind { circle, polyline };
  Kind kind = Kind::circle;
  Complex center{0.0, 0.0};
  double radius = 0.0;
  int orientation = 1;  // +1 counterclockwise
  int samples = 64;
  std::vector<Complex> vertices;  // polyline only; closed implicitly
};

// values of the reduced integrals <b_j, x>, j = 1..n-1
struct ReducedIntegralValues {
  Eigen::VectorXd c;
};

struct SingularValue {
  ProjectivePoint value;
  bool expected = true;  // images of D+ / D-; scan hits are flagged false
};

enum class LoopClass { clifford, chekanov, other };

struct LoopClassification {
  LoopClass kind = LoopClass::other;
  std::vector<long> winding;  // parallel to the singular-value list
};

// One torus T_{gamma,c}: S slices along the loop crossed with (n-1) fiber
// circles of U samples each.  Node layout: slice-major, then fiber axes in
// row-major order; node_index documents it.
struct TorusSample {
  ReductionData reduction;
  PencilData pencil;
  LoopSpec loop;
  Eigen::VectorXd c;

  int loop_count = 0;    // S
  int circle_count = 0;  // U per fiber axis

  std::vector<Integer> dual_direction;  // w with <a, w> = 1

  std::vector<Complex> base_values;           // t_k = gamma(k/S)
  std::vector<double> alpha;                  // continuous arg t_k
  std::vector<double> tau;                    // position along the c-line
  std::vector<Eigen::VectorXd> moment_points; // x(tau_k)

  std::vector<ToricPoint> points;
  std::vector<std::vector<TangentRep>> frames;  // n per node
  std::vector<double> omega_residual;           // max pair |omega| per node
  std::vector<double> fiber_residual;           // chordal(psi(p), t_k)
  std::vector<double> level_set_residual;       // max_j |<b_j, x> - c_j|

  long winding0 = 0;        // loop winding around the chart origin
  double closure_error = 0; // slice S vs slice 0 after one circuit
  double holonomy = 0;      // residual phase shift of the closed grid

  int fiber_axes() const { return reduction.n() - 1; }
  long node_count() const {
    long total = loop_count;
    for (int j = 0; j < fiber_axes(); ++j) total *= circle_count;
    return total;
  }
  long node_index(int k, const std::vector<int>& u) const {
    long idx = k;
    for (int j = 0; j < fiber_axes(); ++j) idx = idx * circle_count + u[static_cast<std::size_t>(j)];
    return idx;
  }
};

Complex loop_point(const LoopSpec& loop, double s01);
std::vector<Complex> sample_loop(const LoopSpec& loop);

// {0, infinity} (images of the degenerate pencil members) plus anything the
// degeneracy scan turns up, flagged unexpected
std::vector<SingularValue> singular_values(const ReductionData& rd, const PencilData& pencil);

// points on the circle {psi = t} ∩ {<b_j, x> = c_j}, fiber phase equally
// spaced; t must keep the declared margin from every singular value
std::vector<ToricPoint> solve_fiber_circle(const ReductionData& rd, const PencilData& pencil,
                                           Complex t, const ReducedIntegralValues& c,
                                           int resolution);

TorusSample build_torus(const ReductionData& rd, const PencilData& pencil,
                        const LoopSpec& loop, const ReducedIntegralValues& c,
                        int circle_resolution);

// recomputes tangent frames from the stored points (high-order central
// stencils on periodic axes, one-sided segment stencils for polylines), then
// summarizes
// max |omega(u_i, u_j)|; also rank-checks every frame
VerificationReport verify_lagrangian(TorusSample& t, double tol);

LoopClassification classify_loop(const LoopSpec& loop,
                                 const std::vector<SingularValue>& singulars);

// action periods along the n grid-axis loops, converted to the standard
// angle basis whenever the loop classes form one (|winding| = 1); the raw
// grid periods are returned otherwise
struct ActionPeriods {
  Eigen::VectorXd periods;
  bool standard_basis = false;
  double refinement_estimate = 0;  // |half-resolution difference|, max over axes
};
ActionPeriods action_periods(const TorusSample& t);

void export_torus_csv(const TorusSample& t, std::ostream& out);
Json torus_report_json(const TorusSample& t, const VerificationReport& verification);

}  // namespace lagforge
