#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lagforge/chekanov.hpp"
#include "lagforge/divisors.hpp"

using namespace lagforge;

namespace {

DelzantPolytope fixture(const std::string& name) {
  return load_polytope_file(std::string(LF_FIXTURE_DIR) + "/" + name);
}

struct Setup {
  ReductionData rd;
  PencilData pencil;
};

Setup conic_cp2() {
  DelzantPolytope p = fixture("cp2.json");
  return {reduction_setup(p), split_pencil(p, {Integer(1), Integer(1)})};
}

ReducedIntegralValues values1(double c) {
  ReducedIntegralValues v;
  v.c = Eigen::VectorXd::Constant(1, c);
  return v;
}

LoopSpec circle(Complex center, double radius, int samples, int orientation = 1) {
  LoopSpec loop;
  loop.kind = LoopSpec::Kind::circle;
  loop.center = center;
  loop.radius = radius;
  loop.samples = samples;
  loop.orientation = orientation;
  return loop;
}

double max_omega(const TorusSample& t) {
  return *std::max_element(t.omega_residual.begin(), t.omega_residual.end());
}

}  // namespace

TEST_CASE("singular values are the two degenerate members") {
  auto [rd, conic] = conic_cp2();
  auto sv = singular_values(rd, conic);
  REQUIRE(sv.size() == 2);
  CHECK(std::abs(sv[0].value.plus) == 0.0);
  CHECK(sv[0].expected);
  CHECK(std::abs(sv[1].value.minus) == 0.0);
  CHECK(sv[1].expected);

  DelzantPolytope p = fixture("cp2.json");
  auto lines = split_pencil(p, {Integer(1), Integer(0)});
  CHECK(singular_values(rd, lines).size() == 2);

  DelzantPolytope sq = fixture("square.json");
  auto ruling = split_pencil(sq, {Integer(0), Integer(1)});
  CHECK(singular_values(reduction_setup(sq), ruling).size() == 2);
}

TEST_CASE("fiber circle at t=1, c=0 matches the brute-force radial solve") {
  auto [rd, conic] = conic_cp2();
  double s = rd.area_scale;
  auto pts = solve_fiber_circle(rd, conic, Complex(1, 0), values1(0.0), 4);
  REQUIRE(pts.size() == 4);

  // brute-force oracle: along x = (tau, tau) scan |psi| = sqrt(d1 d2)/d3 for
  // the value 1; the minimizer should be the barycenter tau = 1/3
  double best_tau = -1, best_err = 1e30;
  for (int i = 1; i < 200000; ++i) {
    double tau = 0.5 * i / 200000;
    double d3 = 1 - 2 * tau;
    if (d3 <= 0) break;
    double err = std::abs(std::sqrt(tau * tau) / d3 - 1.0);
    if (err < best_err) {
      best_err = err;
      best_tau = tau;
    }
  }
  CHECK(best_tau == doctest::Approx(1.0 / 3.0).epsilon(1e-4));

  for (const auto& p : pts) {
    Eigen::VectorXd x = moment_map(rd, p);
    CHECK(x(0) == doctest::Approx(best_tau).epsilon(1e-4));
    CHECK(std::abs(x(0) - x(1)) < 1e-12);
    CHECK(std::abs(std::abs(p.z(0)) - std::abs(p.z(1))) < 1e-12);
    CHECK(chordal_distance(pencil_map(rd, conic, p),
                           ProjectivePoint{Complex(1 / std::sqrt(2.0), 0),
                                           Complex(1 / std::sqrt(2.0), 0)}) < 1e-12);
  }

  // fiber phase advances by pi/2 between consecutive points
  for (int l = 0; l < 4; ++l) {
    Complex ratio = pts[(l + 1) % 4].z(0) / pts[l].z(0);
    CHECK(std::abs(std::arg(ratio) - M_PI / 2) < 1e-12);
  }
  CHECK(std::abs(pts[0].z(0)) == doctest::Approx(std::sqrt(2 * s / 3)).epsilon(1e-10));
}

TEST_CASE("infeasible requests are refused with the right error kind") {
  auto [rd, conic] = conic_cp2();
  // too close to the singular value at 0 (margin 0.05)
  CHECK_THROWS_WITH_AS(solve_fiber_circle(rd, conic, Complex(0.01, 0), values1(0.0), 4),
                       doctest::Contains("margin"), Error);
  // and to the one at infinity
  CHECK_THROWS_AS(solve_fiber_circle(rd, conic, Complex(500.0, 0), values1(0.0), 4), Error);
  try {
    solve_fiber_circle(rd, conic, Complex(0.01, 0), values1(0.0), 4);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::infeasible);
  }

  // c on / beyond the attainable boundary: the slice x1 - x2 = c is empty
  CHECK_THROWS_AS(solve_fiber_circle(rd, conic, Complex(1, 0), values1(1.0), 4), Error);
  CHECK_THROWS_AS(solve_fiber_circle(rd, conic, Complex(1, 0), values1(1.5), 4), Error);
  try {
    solve_fiber_circle(rd, conic, Complex(1, 0), values1(1.0), 4);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::infeasible);
  }
  // interior c stays fine
  CHECK_NOTHROW(solve_fiber_circle(rd, conic, Complex(1, 0), values1(0.9), 4));
}

TEST_CASE("clifford build: moment image pinned to the x1=x2 segment") {
  auto [rd, conic] = conic_cp2();
  TorusSample t = build_torus(rd, conic, circle(Complex(0, 0), 1.0, 64), values1(0.0), 64);
  CHECK(t.winding0 == 1);
  CHECK(t.node_count() == 64 * 64);
  for (const auto& x : t.moment_points) {
    CHECK(std::abs(x(0) - x(1)) < 1e-12);
    CHECK(x(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
  }
  auto report = verify_lagrangian(t, rd.tol.lagrangian);
  CHECK(report.pass);
  CHECK(report.max_residual < 1e-6);
  CHECK(t.closure_error < rd.tol.closure);
  CHECK(report.extra.at("max_fiber_residual") < 1e-8);
  CHECK(report.extra.at("max_level_set_residual") < 1e-8);
  CHECK(report.extra.at("min_frame_sv_ratio") > rd.tol.rank);
}

TEST_CASE("chekanov build: contractible loop, residuals at the 1e-6 bar") {
  auto [rd, conic] = conic_cp2();
  TorusSample t = build_torus(rd, conic, circle(Complex(1, 0), 0.25, 64), values1(0.0), 64);
  CHECK(t.winding0 == 0);
  auto report = verify_lagrangian(t, rd.tol.lagrangian);
  CHECK(report.pass);
  CHECK(report.max_residual < 1e-6);
  CHECK(report.extra.at("max_fiber_residual") < 1e-8);
  CHECK(report.extra.at("max_level_set_residual") < 1e-8);

  // the moment image now sweeps an interval of the line x1 = x2 + tau a
  double lo = 1e30, hi = -1e30;
  for (const auto& x : t.moment_points) {
    lo = std::min(lo, x(0));
    hi = std::max(hi, x(0));
  }
  CHECK(hi - lo > 1e-3);
}

TEST_CASE("corrupted sample fails verification near the corruption") {
  auto [rd, conic] = conic_cp2();
  TorusSample t = build_torus(rd, conic, circle(Complex(0, 0), 1.0, 32), values1(0.0), 32);
  long corrupt = t.node_index(17, {11});
  t.points[static_cast<std::size_t>(corrupt)].z(0) *= std::polar(1.0, 1e-3);
  auto report = verify_lagrangian(t, rd.tol.lagrangian);
  CHECK_FALSE(report.pass);
  CHECK(report.max_residual > rd.tol.lagrangian);
  // the argmax sits within the stencil footprint of the corrupted node
  long bad_slice = report.argmax_index / 32;
  long bad_fiber = report.argmax_index % 32;
  auto wrap_gap = [](long a, long b, long m) {
    long d = std::abs(a - b) % m;
    return std::min(d, m - d);
  };
  CHECK(wrap_gap(bad_slice, 17, 32) <= 4);
  CHECK(wrap_gap(bad_fiber, 11, 32) <= 4);
}

TEST_CASE("incomplete sample is rejected") {
  auto [rd, conic] = conic_cp2();
  TorusSample t = build_torus(rd, conic, circle(Complex(0, 0), 1.0, 16), values1(0.0), 16);
  t.points.pop_back();
  CHECK_THROWS_AS(verify_lagrangian(t, rd.tol.lagrangian), Error);
  try {
    verify_lagrangian(t, rd.tol.lagrangian);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::validation);
  }
}

TEST_CASE("loop classification by winding") {
  auto [rd, conic] = conic_cp2();
  auto sv = singular_values(rd, conic);

  auto cls = classify_loop(circle(Complex(0, 0), 1.0, 64), sv);
  CHECK(cls.kind == LoopClass::clifford);
  REQUIRE(cls.winding.size() == 2);
  CHECK(cls.winding[0] == 1);
  CHECK(cls.winding[1] == -1);

  CHECK(classify_loop(circle(Complex(0, 0), 1.0, 64, -1), sv).kind == LoopClass::clifford);
  CHECK(classify_loop(circle(Complex(0, 0), 1.0, 64, -1), sv).winding[0] == -1);

  auto chk = classify_loop(circle(Complex(1, 0), 0.25, 64), sv);
  CHECK(chk.kind == LoopClass::chekanov);
  CHECK(chk.winding[0] == 0);
  CHECK(chk.winding[1] == 0);

  // refinement never changes the class
  CHECK(classify_loop(circle(Complex(0, 0), 1.0, 128), sv).kind == LoopClass::clifford);
  CHECK(classify_loop(circle(Complex(1, 0), 0.25, 128), sv).kind == LoopClass::chekanov);

  // double circuit around 0 as a closed polyline: winding 2 -> other
  LoopSpec twice;
  twice.kind = LoopSpec::Kind::polyline;
  twice.samples = 256;
  for (int pass = 0; pass < 2; ++pass)
    for (int corner = 0; corner < 4; ++corner) {
      double ang = 2 * M_PI * corner / 4;
      twice.vertices.push_back(std::polar(1.0, ang));
    }
  auto two = classify_loop(twice, sv);
  CHECK(two.kind == LoopClass::other);
  CHECK(two.winding[0] == 2);
  CHECK(two.winding[1] == -2);

  // too coarse to certify: samples straddle the near approach to 0
  CHECK_THROWS_AS(classify_loop(circle(Complex(1, 0), 1.2, 8), sv), Error);
  try {
    classify_loop(circle(Complex(1, 0), 1.2, 8), sv);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::numeric);
  }
  CHECK(classify_loop(circle(Complex(1, 0), 1.2, 64), sv).kind == LoopClass::clifford);
}

TEST_CASE("margin violations refuse the build") {
  auto [rd, conic] = conic_cp2();
  CHECK_THROWS_AS(build_torus(rd, conic, circle(Complex(1, 0), 1.0, 64), values1(0.0), 16),
                  Error);  // touches t = 0 up to sampling
  try {
    build_torus(rd, conic, circle(Complex(0.98, 0), 1.0, 64), values1(0.0), 16);
    FAIL("expected a margin violation");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::infeasible);
  }
  CHECK_THROWS_AS(build_torus(rd, conic, circle(Complex(0, 0), 0.0, 64), values1(0.0), 16),
                  Error);  // radius 0 forbidden
}

TEST_CASE("action periods: barycenter fiber has equal periods") {
  auto [rd, conic] = conic_cp2();
  double s = rd.area_scale;
  TorusSample t = build_torus(rd, conic, circle(Complex(0, 0), 1.0, 64), values1(0.0), 64);
  auto periods = action_periods(t);
  REQUIRE(periods.periods.size() == 2);
  CHECK(periods.standard_basis);
  CHECK(periods.periods(0) == doctest::Approx(2 * M_PI * s / 3).epsilon(1e-8));
  CHECK(periods.periods(1) == doctest::Approx(2 * M_PI * s / 3).epsilon(1e-8));
  CHECK(std::abs(periods.periods(0) - periods.periods(1)) < 1e-4);
  CHECK(periods.refinement_estimate < 1e-8);
}

TEST_CASE("action periods: moment fiber over (1/2, 1/4)") {
  auto [rd, conic] = conic_cp2();
  double s = rd.area_scale;
  // |psi| at x = (1/2, 1/4): sqrt(d1 d2)/d3 = sqrt(1/8)/(1/4) = sqrt 2
  TorusSample t =
      build_torus(rd, conic, circle(Complex(0, 0), std::sqrt(2.0), 64), values1(0.25), 64);
  for (const auto& x : t.moment_points) {
    CHECK(x(0) == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(x(1) == doctest::Approx(0.25).epsilon(1e-10));
  }
  auto periods = action_periods(t);
  REQUIRE(periods.standard_basis);
  Eigen::Vector2d got = periods.periods;
  std::sort(got.data(), got.data() + 2);
  CHECK(got(0) == doctest::Approx(2 * M_PI * s * 0.25).epsilon(1e-8));
  CHECK(got(1) == doctest::Approx(2 * M_PI * s * 0.5).epsilon(1e-8));
}

TEST_CASE("build commutes with the subtorus flow along the reduced basis") {
  auto [rd, conic] = conic_cp2();
  TorusSample t = build_torus(rd, conic, circle(Complex(0, 0), 1.0, 16), values1(0.0), 32);
  std::vector<Integer> b = conic.reduced_basis.row_vec(0);
  double step = 2 * M_PI * 5 / 32;  // five grid cells along the fiber axis
  double worst = 0;
  for (int k = 0; k < t.loop_count; ++k)
    for (int l = 0; l < t.circle_count; ++l) {
      ToricPoint moved =
          subtorus_flow(rd, t.points[static_cast<std::size_t>(t.node_index(k, {l}))], b, step);
      const ToricPoint& target =
          t.points[static_cast<std::size_t>(t.node_index(k, {(l + 5) % 32}))];
      worst = std::max(worst, (moved.z - target.z).cwiseAbs().maxCoeff());
    }
  CHECK(worst < 1e-12);
}

TEST_CASE("doubling the grid reduces the lagrangian residual") {
  auto [rd, conic] = conic_cp2();
  // constant-|t| loop: the grid is exactly exponential in both parameters, so
  // the symmetric stencil error is parallel to the true tangent and cancels
  // in omega; both resolutions sit at the rounding floor
  TorusSample coarse = build_torus(rd, conic, circle(Complex(0, 0), 1.0, 32), values1(0.0), 32);
  TorusSample fine = build_torus(rd, conic, circle(Complex(0, 0), 1.0, 64), values1(0.0), 64);
  CHECK(max_omega(coarse) < 1e-12);
  CHECK(max_omega(fine) < 1e-12);

  // varying |t|: genuine truncation error, monotone under refinement
  TorusSample coarse2 = build_torus(rd, conic, circle(Complex(1, 0), 0.25, 32), values1(0.0), 32);
  TorusSample fine2 = build_torus(rd, conic, circle(Complex(1, 0), 0.25, 64), values1(0.0), 64);
  CHECK(max_omega(fine2) < max_omega(coarse2) / 16);
}

TEST_CASE("polyline loops build and verify") {
  auto [rd, conic] = conic_cp2();
  LoopSpec square_loop;
  square_loop.kind = LoopSpec::Kind::polyline;
  square_loop.samples = 128;
  square_loop.vertices = {Complex(1.3, 1.3), Complex(-1.3, 1.3), Complex(-1.3, -1.3),
                          Complex(1.3, -1.3)};
  TorusSample t = build_torus(rd, conic, square_loop, values1(0.0), 32);
  CHECK(t.winding0 == 1);
  auto report = verify_lagrangian(t, 1e-4);  // one-sided stencils at the corners
  CHECK(report.pass);
  CHECK(report.extra.at("max_fiber_residual") < 1e-8);
  auto periods = action_periods(t);
  CHECK(periods.standard_basis);
}

TEST_CASE("three-dimensional fibers: anticanonical pencil on the 3-simplex") {
  DelzantPolytope p = fixture("cp3.json");
  ReductionData rd = reduction_setup(p);
  PencilData pencil = split_pencil(p, {Integer(1), Integer(1), Integer(1)});
  ReducedIntegralValues c;
  c.c = Eigen::VectorXd::Zero(2);
  TorusSample t = build_torus(rd, pencil, circle(Complex(0, 0), 1.0, 32), c, 32);
  CHECK(t.node_count() == 32L * 32 * 32);
  CHECK(t.fiber_axes() == 2);
  // |psi| = 1, c = 0 forces the barycenter of the simplex
  for (const auto& x : t.moment_points)
    for (int j = 0; j < 3; ++j) CHECK(x(j) == doctest::Approx(0.25).epsilon(1e-9));
  auto report = verify_lagrangian(t, rd.tol.lagrangian);
  CHECK(report.pass);
  CHECK(report.max_residual < 1e-6);
  auto periods = action_periods(t);
  REQUIRE(periods.periods.size() == 3);
  CHECK(periods.standard_basis);
  for (int j = 0; j < 3; ++j)
    CHECK(periods.periods(j) == doctest::Approx(2 * M_PI * rd.area_scale * 0.25).epsilon(1e-6));
}

TEST_CASE("csv export shape") {
  auto [rd, conic] = conic_cp2();
  TorusSample t = build_torus(rd, conic, circle(Complex(0, 0), 1.0, 16), values1(0.0), 16);
  std::ostringstream out;
  export_torus_csv(t, out);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "s,theta_1,re_z1,im_z1,re_z2,im_z2,re_z3,im_z3,omega_residual");
  int rows = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 16 * 16);
  CHECK(out.str() == [&] {
    std::ostringstream again;
    export_torus_csv(t, again);
    return again.str();
  }());
}

TEST_CASE("torus report carries the advertised fields") {
  auto [rd, conic] = conic_cp2();
  TorusSample t = build_torus(rd, conic, circle(Complex(1, 0), 0.25, 64), values1(0.0), 64);
  auto report = verify_lagrangian(t, rd.tol.lagrangian);
  Json j = torus_report_json(t, report);
  CHECK(j["classification"] == "chekanov");
  CHECK(j["winding_around_origin"] == 0);
  CHECK(j["verification"]["pass"] == true);
  CHECK(j["tolerances"]["margin"] == 0.05);
  CHECK(j["action_periods"].size() == 2);
  CHECK(j["periods_in_standard_basis"] == false);
  CHECK(j["phase_section"].size() == 3);
  CHECK(j.contains("holonomy"));
  CHECK(j.contains("closure_error"));
}
