#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>

#include "lagforge/int_matrix.hpp"
#include "lagforge/report.hpp"

namespace lagforge {

// Hard-instantiated ambient models.  Points live in model coordinates:
// C^m for affine, unit-sphere representatives in C^{m+1} for projective,
// unit Pluecker vectors in C^6 (with the quadric relation) for Gr(2,4).
struct AmbientModel {
  enum class Kind { affine, projective, grassmann };
  Kind kind = Kind::affine;
  int coords = 0;            // complex model coordinates
  IntMatrix torus_weights;   // available circle generators (rows)
};

AmbientModel ambient_affine(int m);
AmbientModel ambient_projective(int m);  // CP^m, coords = m + 1
AmbientModel ambient_grassmann24();      // Pluecker order p12,p13,p14,p23,p24,p34

// rank-k subtorus: integer weight rows in model coordinates + level values
struct SubtorusSpec {
  IntMatrix weights;   // k x coords
  Eigen::VectorXd c;   // k levels
};
void validate_subtorus(const AmbientModel& a, const SubtorusSpec& s);

// model primitives (all constraint-preserving, checked by tests)
Eigen::VectorXcd conjugate_point(const AmbientModel& a, const Eigen::VectorXcd& p);
Eigen::VectorXcd torus_act(const AmbientModel& a, const IntMatrix& weights,
                           const Eigen::VectorXd& theta, const Eigen::VectorXcd& p);
double moment_value(const AmbientModel& a, const std::vector<Integer>& w,
                    const Eigen::VectorXcd& p);
double model_constraint_residual(const AmbientModel& a, const Eigen::VectorXcd& p);
Eigen::VectorXcd model_horizontal(const AmbientModel& a, const Eigen::VectorXcd& p,
                                  const Eigen::VectorXcd& v);
double model_omega(const AmbientModel& a, const Eigen::VectorXcd& p,
                   const Eigen::VectorXcd& u, const Eigen::VectorXcd& v);
// gauge-normalized chart distance (plain for affine, phase-free for the rest)
double model_distance(const AmbientModel& a, const Eigen::VectorXcd& p,
                      const Eigen::VectorXcd& q);
// unit norm with the largest-modulus coordinate rotated positive real
Eigen::VectorXcd gauge_fix(const AmbientModel& a, const Eigen::VectorXcd& p);

// one chart of the real level locus: a d-dimensional grid of verified points;
// axes are either a full periodic parametrization or a local patch
struct RealChart {
  std::vector<Eigen::VectorXcd> points;  // row-major over shape
  std::vector<int> shape;                // d axis sizes
  double step = 0;                       // parameter spacing per axis
  bool periodic = false;
  long size() const {
    long n = 1;
    for (int s : shape) n *= s;
    return n;
  }
};

struct RealLevelSample {
  AmbientModel model;
  SubtorusSpec subtorus;
  std::vector<RealChart> charts;
  int dim = 0;  // manifold dimension of S_R
  long total_points() const {
    long n = 0;
    for (const auto& c : charts) n += c.size();
    return n;
  }
};

RealLevelSample real_level_set(const AmbientModel& a, const SubtorusSpec& s, int resolution,
                               std::uint64_t seed = 0);

struct CollisionRecord {
  long node_a = 0, node_b = 0;  // closest pair of the cluster
  double ambient_distance = 0;
  double parameter_distance = 0;
  int cluster_size = 0;
};

// sweep grid: for each chart point, a full k-torus of angles.  Node layout:
// charts in order, then the chart grid row-major, then angles row-major.
struct MironovCycleSample {
  AmbientModel model;
  SubtorusSpec subtorus;
  RealLevelSample base;
  int angular_resolution = 0;  // per sweep axis

  std::vector<Eigen::VectorXcd> points;
  std::vector<std::vector<Eigen::VectorXcd>> frames;  // dim() per node, projected
  std::vector<double> omega_residual;
  VerificationReport immersion_report;  // attached by the composite builders

  int k() const { return static_cast<int>(subtorus.weights.rows()); }
  int dim() const { return base.dim + k(); }
  long angle_count() const {
    long n = 1;
    for (int i = 0; i < k(); ++i) n *= angular_resolution;
    return n;
  }
  long node_count() const { return base.total_points() * angle_count(); }
  // node -> (chart, grid multi-index, angle multi-index)
  void decode(long node, int& chart, std::vector<int>& grid, std::vector<int>& angles) const;
  long encode(int chart, const std::vector<int>& grid, const std::vector<int>& angles) const;
};

MironovCycleSample torus_sweep(const AmbientModel& a, const SubtorusSpec& s,
                               const RealLevelSample& sr, int angular_resolution);

// recomputes frames from the stored points (analytic sweep fields + chart
// finite differences), then checks pairwise omega and frame rank
VerificationReport verify_lagrangian_immersion(MironovCycleSample& m, double tol,
                                               double rank_tol);

std::vector<CollisionRecord> self_intersection_scan(const MironovCycleSample& m,
                                                    double eps_ambient, double eps_param);

Eigen::VectorXcd plucker_embed(const Eigen::Matrix<Complex, 2, 4>& m);

// rank-1 sweep on Gr(2,4) for the weight-1 circle on the first C^4 factor;
// runs the immersion check and attaches the report
MironovCycleSample grassmann_cycle_level1(double c, int chart_resolution,
                                          int angular_resolution);

void export_cycle_csv(const MironovCycleSample& m, std::ostream& out);
Json cycle_report_json(const MironovCycleSample& m, const VerificationReport& verification);

}  // namespace lagforge
