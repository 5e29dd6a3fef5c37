#include "lagforge/chekanov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace lagforge {

namespace {

double wrap_pi(double a) {
  double w = std::remainder(a, 2 * M_PI);
  return w;
}

ProjectivePoint chart_point(Complex t) {
  double norm = std::hypot(std::abs(t), 1.0);
  return {t / norm, Complex(1.0 / norm, 0.0)};
}

Eigen::VectorXd to_vecd(const std::vector<Integer>& v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (Eigen::Index i = 0; i < out.size(); ++i)
    out(i) = static_cast<double>(v[static_cast<std::size_t>(i)]);
  return out;
}

// the level-set line {<b_j, x> = c_j} = {x0 + tau * a}; the monotone radial
// equation lives on the open tau-interval where the line crosses the interior
struct LineGeometry {
  Eigen::VectorXd x0;     // min-norm solution of B x = c
  Eigen::VectorXd dir;    // a
  Eigen::VectorXd d0;     // facet values at x0
  Eigen::VectorXd coeff;  // a_i = <a, nu_i>
  double tau_min = 0, tau_max = 0;
  double coeff_sum = 0;
  double log_shift = 0;  // (sum a_i) * log(2 * area_scale)
};

LineGeometry line_geometry(const ReductionData& rd, const PencilData& pencil,
                           const Eigen::VectorXd& c) {
  int n = rd.n();
  if (c.size() != n - 1) fail_validation("reduced integral values must have length n-1");
  LineGeometry lg;
  Eigen::MatrixXd b(n - 1, n);
  for (int i = 0; i < n - 1; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = static_cast<double>(pencil.reduced_basis.at(i, j));
  if (n == 1) {
    lg.x0 = Eigen::VectorXd::Zero(1);
  } else {
    lg.x0 = b.transpose() * (b * b.transpose()).ldlt().solve(c);
  }
  lg.dir = to_vecd(pencil.direction);
  lg.coeff = to_vecd(pencil.coefficients);
  lg.d0 = rd.normals_d * lg.x0 + rd.offsets_d;

  lg.tau_min = -std::numeric_limits<double>::infinity();
  lg.tau_max = std::numeric_limits<double>::infinity();
  for (int i = 0; i < rd.r(); ++i) {
    double a_i = lg.coeff(i);
    double bound = -lg.d0(i);
    if (a_i > 0)
      lg.tau_min = std::max(lg.tau_min, bound / a_i);
    else if (a_i < 0)
      lg.tau_max = std::min(lg.tau_max, bound / a_i);
    else if (lg.d0(i) <= 0)
      fail_infeasible("level values unattainable: facet " + std::to_string(i) +
                      " excludes the whole line");
  }
  if (!(lg.tau_min < lg.tau_max))
    fail_infeasible("level values outside the attainable range: empty slice of the polytope");
  lg.coeff_sum = lg.coeff.sum();
  lg.log_shift = lg.coeff_sum * std::log(2.0 * rd.area_scale);
  return lg;
}

double radial_target(const LineGeometry& lg, double abs_t) {
  return 2.0 * std::log(abs_t) - lg.log_shift;
}

// h(tau) = sum_i a_i log d_i(tau); strictly increasing on (tau_min, tau_max)
double h_eval(const LineGeometry& lg, double tau, double* deriv = nullptr) {
  double h = 0, dh = 0;
  for (Eigen::Index i = 0; i < lg.coeff.size(); ++i) {
    double a_i = lg.coeff(i);
    if (a_i == 0) continue;
    double d = lg.d0(i) + tau * a_i;
    h += a_i * std::log(d);
    dh += a_i * a_i / d;
  }
  if (deriv) *deriv = dh;
  return h;
}

double solve_tau(const LineGeometry& lg, double target, double seed,
                 bool have_seed) {
  double span = lg.tau_max - lg.tau_min;
  double pad = 1e-14 * span;
  double lo = lg.tau_min, hi = lg.tau_max;
  double tau = have_seed && seed > lo + pad && seed < hi - pad
                   ? seed
                   : 0.5 * (lg.tau_min + lg.tau_max);
  double h = 0;
  for (int iter = 0; iter < 120; ++iter) {
    double dh;
    h = h_eval(lg, tau, &dh);
    double err = h - target;
    if (std::abs(err) < 1e-12 * std::max(1.0, std::abs(target))) return tau;
    if (err < 0)
      lo = tau;
    else
      hi = tau;
    double next = tau - err / dh;
    if (!(next > lo + pad && next < hi - pad)) next = 0.5 * (lo + hi);
    if (std::abs(next - tau) < 1e-16 * std::max(1.0, std::abs(tau))) return next;
    tau = next;
  }
  std::ostringstream os;
  os << "radial solve did not converge: target " << target << ", bracket [" << lo << ", " << hi
     << "], last value " << h;
  fail_numeric(os.str());
}

ToricPoint synth_point(const ReductionData& rd, const Eigen::VectorXd& dist,
                       const Eigen::VectorXd& theta) {
  Eigen::VectorXd phase = rd.section_d * theta;
  ToricPoint p;
  p.z.resize(rd.r());
  for (int i = 0; i < rd.r(); ++i)
    p.z(i) = std::polar(std::sqrt(2.0 * rd.area_scale * dist(i)), phase(i));
  return p;
}

std::vector<Integer> dual_of(const PencilData& pencil) {
  IntMatrix a_row(1, static_cast<int>(pencil.direction.size()));
  for (int j = 0; j < a_row.cols(); ++j) a_row.at(0, j) = pencil.direction[static_cast<std::size_t>(j)];
  return lattice::integer_right_inverse(a_row).col_vec(0);
}

void check_loop_spec(const LoopSpec& loop) {
  if (loop.samples < 8) fail_validation("loop needs at least 8 samples");
  if (loop.kind == LoopSpec::Kind::circle) {
    if (!(loop.radius > 0)) fail_validation("circle loop radius must be positive");
    if (loop.orientation != 1 && loop.orientation != -1)
      fail_validation("loop orientation must be +1 or -1");
  } else {
    if (loop.vertices.size() < 3) fail_validation("polyline loop needs at least 3 vertices");
    double perimeter = 0;
    for (std::size_t i = 0; i < loop.vertices.size(); ++i)
      perimeter += std::abs(loop.vertices[(i + 1) % loop.vertices.size()] - loop.vertices[i]);
    if (!(perimeter > 0)) fail_validation("polyline loop has zero length");
  }
}

// cumulative arc-length fractions of the closed polyline, ending at 1
std::vector<double> polyline_breaks(const LoopSpec& loop) {
  std::size_t m = loop.vertices.size();
  std::vector<double> cum(m + 1, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    cum[i + 1] = cum[i] + std::abs(loop.vertices[(i + 1) % m] - loop.vertices[i]);
  for (auto& x : cum) x /= cum[m];
  cum[m] = 1.0;
  return cum;
}

int segment_of(const std::vector<double>& breaks, double s01) {
  int seg = static_cast<int>(std::upper_bound(breaks.begin(), breaks.end(), s01) -
                             breaks.begin()) - 1;
  return std::clamp(seg, 0, static_cast<int>(breaks.size()) - 2);
}

// symmetric central offsets: width 9 (order 8) when the axis has room
std::vector<int> central_offsets(int count) {
  int half = count >= 9 ? 4 : 1;
  std::vector<int> off;
  for (int o = -half; o <= half; ++o) off.push_back(o);
  return off;
}

// contiguous window of up to 9 same-segment indices around k (one-sided at
// segment ends), for the non-periodic polyline axis
std::vector<int> window_indices(int k, int seg_begin, int seg_end) {
  int width = std::min(9, seg_end - seg_begin);
  int begin = std::clamp(k - width / 2, seg_begin, seg_end - width);
  std::vector<int> idx;
  for (int i = 0; i < width; ++i) idx.push_back(begin + i);
  return idx;
}

// recompute tangent frames and per-node omega residuals from the stored grid
void compute_frames(TorusSample& t) {
  const ReductionData& rd = t.reduction;
  int n = rd.n();
  int s_count = t.loop_count;
  int u_count = t.circle_count;
  int fib = t.fiber_axes();
  double h_s = 1.0 / s_count;
  double h_u = 2 * M_PI / u_count;

  std::vector<double> breaks;
  std::vector<int> seg;
  if (t.loop.kind == LoopSpec::Kind::polyline) {
    breaks = polyline_breaks(t.loop);
    seg.resize(static_cast<std::size_t>(s_count));
    for (int k = 0; k < s_count; ++k) seg[static_cast<std::size_t>(k)] = segment_of(breaks, k * h_s);
    for (std::size_t b = 0; b + 1 < breaks.size(); ++b) {
      int members = 0;
      for (int sv : seg)
        if (sv == static_cast<int>(b)) ++members;
      if (members < 2)
        fail_numeric("polyline segment " + std::to_string(b) +
                     " holds fewer than 2 samples; refine the loop sampling");
    }
  }

  long total = t.node_count();
  t.frames.assign(static_cast<std::size_t>(total), {});
  t.omega_residual.assign(static_cast<std::size_t>(total), 0.0);

  parallel_for(static_cast<std::size_t>(s_count), [&](std::size_t ks) {
    int k = static_cast<int>(ks);

    // s-axis stencil for this slice
    std::vector<int> s_idx;
    std::vector<double> s_w;
    if (t.loop.kind == LoopSpec::Kind::circle) {
      for (int o : central_offsets(s_count)) {
        s_idx.push_back(((k + o) % s_count + s_count) % s_count);
        s_w.push_back(o * h_s);  // node positions first; weights below
      }
      s_w = fd_weights(0.0, s_w);
    } else {
      int sg = seg[static_cast<std::size_t>(k)];
      int seg_begin = k, seg_end = k;
      while (seg_begin > 0 && seg[static_cast<std::size_t>(seg_begin - 1)] == sg) --seg_begin;
      while (seg_end < s_count && seg[static_cast<std::size_t>(seg_end)] == sg) ++seg_end;
      s_idx = window_indices(k, seg_begin, seg_end);
      std::vector<double> nodes;
      for (int i : s_idx) nodes.push_back(i * h_s);
      s_w = fd_weights(k * h_s, nodes);
    }

    std::vector<int> u_off = central_offsets(u_count);
    std::vector<double> u_nodes;
    for (int o : u_off) u_nodes.push_back(o * h_u);
    std::vector<double> u_w = fd_weights(0.0, u_nodes);

    std::vector<int> u(static_cast<std::size_t>(fib), 0);
    for (;;) {
      long node = t.node_index(k, u);
      const ToricPoint& p = t.points[static_cast<std::size_t>(node)];
      std::vector<TangentRep> frame;
      frame.reserve(static_cast<std::size_t>(n));

      Eigen::VectorXcd ds = Eigen::VectorXcd::Zero(rd.r());
      for (std::size_t m = 0; m < s_idx.size(); ++m)
        ds += s_w[m] * t.points[static_cast<std::size_t>(t.node_index(s_idx[m], u))].z;
      frame.push_back(project_horizontal(rd, p, ds));

      for (int ax = 0; ax < fib; ++ax) {
        Eigen::VectorXcd du = Eigen::VectorXcd::Zero(rd.r());
        for (std::size_t m = 0; m < u_off.size(); ++m) {
          std::vector<int> uu = u;
          uu[static_cast<std::size_t>(ax)] =
              ((u[static_cast<std::size_t>(ax)] + u_off[m]) % u_count + u_count) % u_count;
          du += u_w[m] * t.points[static_cast<std::size_t>(t.node_index(k, uu))].z;
        }
        frame.push_back(project_horizontal(rd, p, du));
      }

      double worst = 0;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          worst = std::max(worst, std::abs(omega_eval(rd, p, frame[static_cast<std::size_t>(i)],
                                                      frame[static_cast<std::size_t>(j)])));
      t.omega_residual[static_cast<std::size_t>(node)] = worst;
      t.frames[static_cast<std::size_t>(node)] = std::move(frame);

      int ax = fib - 1;
      while (ax >= 0 && ++u[static_cast<std::size_t>(ax)] == u_count) {
        u[static_cast<std::size_t>(ax)] = 0;
        --ax;
      }
      if (ax < 0) break;
    }
  });
}

void refresh_constraint_residuals(TorusSample& t) {
  const ReductionData& rd = t.reduction;
  long total = t.node_count();
  t.fiber_residual.assign(static_cast<std::size_t>(total), 0.0);
  t.level_set_residual.assign(static_cast<std::size_t>(total), 0.0);
  Eigen::MatrixXd b(rd.n() - 1, rd.n());
  for (int i = 0; i < rd.n() - 1; ++i)
    for (int j = 0; j < rd.n(); ++j)
      b(i, j) = static_cast<double>(t.pencil.reduced_basis.at(i, j));

  parallel_for(static_cast<std::size_t>(t.loop_count), [&](std::size_t ks) {
    int k = static_cast<int>(ks);
    ProjectivePoint target = chart_point(t.base_values[static_cast<std::size_t>(k)]);
    std::vector<int> u(static_cast<std::size_t>(t.fiber_axes()), 0);
    for (;;) {
      long node = t.node_index(k, u);
      const ToricPoint& p = t.points[static_cast<std::size_t>(node)];
      t.fiber_residual[static_cast<std::size_t>(node)] =
          chordal_distance(pencil_map(rd, t.pencil, p), target);
      Eigen::VectorXd x = moment_map(rd, p);
      double worst = 0;
      if (rd.n() > 1) worst = (b * x - t.c).cwiseAbs().maxCoeff();
      t.level_set_residual[static_cast<std::size_t>(node)] = worst;

      int ax = t.fiber_axes() - 1;
      while (ax >= 0 && ++u[static_cast<std::size_t>(ax)] == t.circle_count) {
        u[static_cast<std::size_t>(ax)] = 0;
        --ax;
      }
      if (ax < 0) break;
    }
  });
}

void enforce_margin(const ReductionData& rd, const std::vector<Complex>& ts,
                    const std::vector<SingularValue>& singulars) {
  for (const auto& t : ts) {
    ProjectivePoint pt = chart_point(t);
    for (const auto& sv : singulars) {
      double d = chordal_distance(pt, sv.value);
      if (d < rd.tol.margin) {
        std::ostringstream os;
        os << "loop violates the singular-value margin: distance " << d << " < " << rd.tol.margin;
        fail_infeasible(os.str());
      }
    }
  }
}

}  // namespace

Complex loop_point(const LoopSpec& loop, double s01) {
  s01 -= std::floor(s01);
  if (loop.kind == LoopSpec::Kind::circle) {
    double ang = 2 * M_PI * loop.orientation * s01;
    return loop.center + loop.radius * Complex(std::cos(ang), std::sin(ang));
  }
  std::vector<double> breaks = polyline_breaks(loop);
  int seg = segment_of(breaks, s01);
  double t = (s01 - breaks[static_cast<std::size_t>(seg)]) /
             (breaks[static_cast<std::size_t>(seg) + 1] - breaks[static_cast<std::size_t>(seg)]);
  std::size_t m = loop.vertices.size();
  Complex a = loop.vertices[static_cast<std::size_t>(seg)];
  Complex b = loop.vertices[(static_cast<std::size_t>(seg) + 1) % m];
  return a + t * (b - a);
}

std::vector<Complex> sample_loop(const LoopSpec& loop) {
  check_loop_spec(loop);
  std::vector<Complex> out(static_cast<std::size_t>(loop.samples));
  for (int k = 0; k < loop.samples; ++k)
    out[static_cast<std::size_t>(k)] = loop_point(loop, static_cast<double>(k) / loop.samples);
  return out;
}

std::vector<SingularValue> singular_values(const ReductionData& rd, const PencilData& pencil) {
  std::vector<SingularValue> out;
  out.push_back({ProjectivePoint{Complex(0, 0), Complex(1, 0)}, true});   // psi = 0, image of D+
  out.push_back({ProjectivePoint{Complex(1, 0), Complex(0, 0)}, true});   // psi = inf, image of D-
  if (!rd.bounded) return out;

  // degeneracy scan: walk radial lines over a lattice of level values and
  // watch the solve Jacobian; it is bounded below by sum a_i^2 / diameter on
  // the interior, so anything small flags an unexpected critical value
  int n = rd.n();
  auto verts = vertices(rd.polytope);
  Eigen::MatrixXd b(n - 1, n);
  for (int i = 0; i < n - 1; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = static_cast<double>(pencil.reduced_basis.at(i, j));
  Eigen::VectorXd cmin = Eigen::VectorXd::Constant(n - 1, std::numeric_limits<double>::infinity());
  Eigen::VectorXd cmax = -cmin;
  for (const auto& v : verts) {
    Eigen::VectorXd x(n);
    for (int j = 0; j < n; ++j) x(j) = rational_to_double(v.coordinates[static_cast<std::size_t>(j)]);
    Eigen::VectorXd bc = b * x;
    cmin = cmin.cwiseMin(bc);
    cmax = cmax.cwiseMax(bc);
  }

  const int c_steps = 5, tau_steps = 50;
  std::vector<int> grid(static_cast<std::size_t>(n - 1), 0);
  for (;;) {
    Eigen::VectorXd c(n - 1);
    for (int j = 0; j < n - 1; ++j) {
      double f = (grid[static_cast<std::size_t>(j)] + 1.0) / (c_steps + 1.0);
      c(j) = cmin(j) + f * (cmax(j) - cmin(j));
    }
    try {
      LineGeometry lg = line_geometry(rd, pencil, c);
      for (int m = 1; m < tau_steps; ++m) {
        double tau = lg.tau_min + (lg.tau_max - lg.tau_min) * m / tau_steps;
        double dh;
        double h = h_eval(lg, tau, &dh);
        if (dh < 1e-8) {
          double abs_t = std::exp(0.5 * (h + lg.log_shift));
          out.push_back({chart_point(Complex(abs_t, 0)), false});
        }
      }
    } catch (const Error&) {
      // line misses the interior: nothing to scan on it
    }

    int ax = n - 2;
    while (ax >= 0 && ++grid[static_cast<std::size_t>(ax)] == c_steps) {
      grid[static_cast<std::size_t>(ax)] = 0;
      --ax;
    }
    if (ax < 0 || n == 1) break;
  }
  return out;
}

std::vector<ToricPoint> solve_fiber_circle(const ReductionData& rd, const PencilData& pencil,
                                           Complex t, const ReducedIntegralValues& c,
                                           int resolution) {
  if (resolution < 1) fail_validation("fiber resolution must be positive");
  enforce_margin(rd, {t}, singular_values(rd, pencil));
  LineGeometry lg = line_geometry(rd, pencil, c.c);
  double tau = solve_tau(lg, radial_target(lg, std::abs(t)), 0.0, false);
  Eigen::VectorXd dist = lg.d0 + tau * lg.coeff;
  Eigen::VectorXd w = to_vecd(dual_of(pencil));
  Eigen::VectorXd v1 = rd.n() > 1 ? Eigen::VectorXd(to_vecd(pencil.reduced_basis.row_vec(0)))
                                  : Eigen::VectorXd::Zero(1);
  double alpha = std::arg(t);
  std::vector<ToricPoint> out;
  for (int l = 0; l < resolution; ++l) {
    Eigen::VectorXd theta = alpha * w;
    if (rd.n() > 1) theta += (2 * M_PI * l / resolution) * v1;
    ToricPoint p = synth_point(rd, dist, theta);
    check_point(rd, p);
    if (chordal_distance(pencil_map(rd, pencil, p), chart_point(t)) > rd.tol.fiber)
      fail_numeric("fiber solve verification failed at phase index " + std::to_string(l));
    out.push_back(std::move(p));
  }
  return out;
}

TorusSample build_torus(const ReductionData& rd, const PencilData& pencil,
                        const LoopSpec& loop, const ReducedIntegralValues& c,
                        int circle_resolution) {
  check_loop_spec(loop);
  if (circle_resolution < 8) fail_validation("fiber circles need at least 8 samples");
  if (rd.n() < 2) fail_validation("torus construction needs dimension at least 2");

  TorusSample t;
  t.reduction = rd;
  t.pencil = pencil;
  t.loop = loop;
  t.c = c.c;
  t.loop_count = loop.samples;
  t.circle_count = circle_resolution;
  t.dual_direction = dual_of(pencil);

  auto singulars = singular_values(rd, pencil);
  t.base_values = sample_loop(loop);
  enforce_margin(rd, t.base_values, singulars);

  // continuous argument along the loop; also fixes the winding around 0
  t.alpha.resize(static_cast<std::size_t>(t.loop_count) + 1);
  t.alpha[0] = std::arg(t.base_values[0]);
  for (int k = 1; k <= t.loop_count; ++k) {
    Complex prev = t.base_values[static_cast<std::size_t>(k - 1)];
    Complex next = t.base_values[static_cast<std::size_t>(k % t.loop_count)];
    double inc = wrap_pi(std::arg(next) - std::arg(prev));
    if (std::abs(inc) > M_PI / 2)
      fail_numeric("argument step exceeds pi/2 between slices " + std::to_string(k - 1) +
                   " and " + std::to_string(k % t.loop_count) + "; refine the loop sampling");
    t.alpha[static_cast<std::size_t>(k)] = t.alpha[static_cast<std::size_t>(k - 1)] + inc;
  }
  t.winding0 = std::lround((t.alpha[static_cast<std::size_t>(t.loop_count)] - t.alpha[0]) / (2 * M_PI));

  LineGeometry lg = line_geometry(rd, pencil, t.c);
  t.tau.resize(static_cast<std::size_t>(t.loop_count));
  t.moment_points.resize(static_cast<std::size_t>(t.loop_count));
  for (int k = 0; k < t.loop_count; ++k) {
    double target = radial_target(lg, std::abs(t.base_values[static_cast<std::size_t>(k)]));
    t.tau[static_cast<std::size_t>(k)] =
        solve_tau(lg, target, k ? t.tau[static_cast<std::size_t>(k - 1)] : 0.0, k != 0);
    t.moment_points[static_cast<std::size_t>(k)] = lg.x0 + t.tau[static_cast<std::size_t>(k)] * lg.dir;
  }

  Eigen::VectorXd w = to_vecd(t.dual_direction);
  int fib = t.fiber_axes();
  std::vector<Eigen::VectorXd> v(static_cast<std::size_t>(fib));
  for (int j = 0; j < fib; ++j) v[static_cast<std::size_t>(j)] = to_vecd(pencil.reduced_basis.row_vec(j));

  t.points.resize(static_cast<std::size_t>(t.node_count()));
  parallel_for(static_cast<std::size_t>(t.loop_count), [&](std::size_t ks) {
    int k = static_cast<int>(ks);
    Eigen::VectorXd dist = lg.d0 + t.tau[ks] * lg.coeff;
    std::vector<int> u(static_cast<std::size_t>(fib), 0);
    for (;;) {
      Eigen::VectorXd theta = t.alpha[ks] * w;
      for (int j = 0; j < fib; ++j)
        theta += (2 * M_PI * u[static_cast<std::size_t>(j)] / t.circle_count) * v[static_cast<std::size_t>(j)];
      t.points[static_cast<std::size_t>(t.node_index(k, u))] = synth_point(rd, dist, theta);

      int ax = fib - 1;
      while (ax >= 0 && ++u[static_cast<std::size_t>(ax)] == t.circle_count) {
        u[static_cast<std::size_t>(ax)] = 0;
        --ax;
      }
      if (ax < 0) break;
    }
  });

  // closure: rebuild slice 0 with the after-circuit argument and compare
  {
    Eigen::VectorXd dist = lg.d0 + t.tau[0] * lg.coeff;
    double closure = 0, hol = 0;
    std::vector<int> u(static_cast<std::size_t>(fib), 0);
    for (;;) {
      Eigen::VectorXd theta = t.alpha[static_cast<std::size_t>(t.loop_count)] * w;
      for (int j = 0; j < fib; ++j)
        theta += (2 * M_PI * u[static_cast<std::size_t>(j)] / t.circle_count) * v[static_cast<std::size_t>(j)];
      ToricPoint wrapped = synth_point(rd, dist, theta);
      const ToricPoint& first = t.points[static_cast<std::size_t>(t.node_index(0, u))];
      closure = std::max(closure, (wrapped.z - first.z).cwiseAbs().maxCoeff() /
                                      std::sqrt(rd.area_scale));
      for (int i = 0; i < rd.r(); ++i)
        hol = std::max(hol, std::abs(wrap_pi(std::arg(wrapped.z(i)) - std::arg(first.z(i)))));
      int ax = fib - 1;
      while (ax >= 0 && ++u[static_cast<std::size_t>(ax)] == t.circle_count) {
        u[static_cast<std::size_t>(ax)] = 0;
        --ax;
      }
      if (ax < 0) break;
    }
    t.closure_error = closure;
    t.holonomy = hol;
    if (closure > rd.tol.closure)
      fail_numeric("continuation failed to close after one circuit: deviation " +
                   std::to_string(closure) + " at slice 0");
  }

  refresh_constraint_residuals(t);
  for (long i = 0; i < t.node_count(); ++i) {
    if (t.fiber_residual[static_cast<std::size_t>(i)] > rd.tol.fiber)
      fail_numeric("fiber constraint violated at node " + std::to_string(i));
    if (t.level_set_residual[static_cast<std::size_t>(i)] > rd.tol.level_set)
      fail_numeric("reduced-integral constraint violated at node " + std::to_string(i));
    check_point(rd, t.points[static_cast<std::size_t>(i)]);
  }

  compute_frames(t);
  return t;
}

VerificationReport verify_lagrangian(TorusSample& t, double tol) {
  if (t.points.size() != static_cast<std::size_t>(t.node_count()) || t.points.empty())
    fail_validation("incomplete torus sample");
  for (const auto& p : t.points)
    if (p.z.size() != t.reduction.r()) fail_validation("incomplete torus sample");

  compute_frames(t);
  refresh_constraint_residuals(t);
  VerificationReport report = make_residual_report(t.omega_residual, tol);

  // frame rank: the n tangents must stay independent everywhere
  int n = t.reduction.n();
  int r = t.reduction.r();
  double worst_ratio = std::numeric_limits<double>::infinity();
  long worst_node = -1;
  std::vector<double> ratios(t.points.size());
  parallel_for(t.points.size(), [&](std::size_t node) {
    Eigen::MatrixXd frame(2 * r, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < r; ++i) {
        frame(2 * i, j) = t.frames[node][static_cast<std::size_t>(j)].v(i).real();
        frame(2 * i + 1, j) = t.frames[node][static_cast<std::size_t>(j)].v(i).imag();
      }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(frame);
    ratios[node] = svd.singularValues()(n - 1) / svd.singularValues()(0);
  });
  for (std::size_t node = 0; node < ratios.size(); ++node)
    if (ratios[node] < worst_ratio) {
      worst_ratio = ratios[node];
      worst_node = static_cast<long>(node);
    }

  report.extra["min_frame_sv_ratio"] = worst_ratio;
  report.extra["min_frame_sv_node"] = static_cast<double>(worst_node);
  report.extra["max_fiber_residual"] =
      *std::max_element(t.fiber_residual.begin(), t.fiber_residual.end());
  report.extra["max_level_set_residual"] =
      *std::max_element(t.level_set_residual.begin(), t.level_set_residual.end());
  report.extra["closure_error"] = t.closure_error;
  report.extra["holonomy"] = t.holonomy;
  if (worst_ratio <= t.reduction.tol.rank) report.pass = false;
  return report;
}

LoopClassification classify_loop(const LoopSpec& loop,
                                 const std::vector<SingularValue>& singulars) {
  std::vector<Complex> ts = sample_loop(loop);
  LoopClassification out;
  out.winding.assign(singulars.size(), 0);
  long finite_sum = 0;
  for (std::size_t sidx = 0; sidx < singulars.size(); ++sidx) {
    const auto& sv = singulars[sidx];
    if (std::abs(sv.value.minus) == 0.0) continue;  // handle infinity afterwards
    Complex q = sv.value.plus / sv.value.minus;
    double total = 0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
      Complex a = ts[k] - q;
      Complex b = ts[(k + 1) % ts.size()] - q;
      double inc = wrap_pi(std::arg(b) - std::arg(a));
      if (std::abs(inc) > M_PI / 2)
        fail_numeric("winding increment exceeds pi/2; loop sampling too coarse to certify");
      total += inc;
    }
    out.winding[sidx] = std::lround(total / (2 * M_PI));
    finite_sum += out.winding[sidx];
  }
  for (std::size_t sidx = 0; sidx < singulars.size(); ++sidx)
    if (std::abs(singulars[sidx].value.minus) == 0.0) out.winding[sidx] = -finite_sum;

  bool plain = singulars.size() == 2;
  long wind0 = 0;
  if (plain) {
    bool has_zero = false, has_inf = false;
    for (std::size_t sidx = 0; sidx < 2; ++sidx) {
      const auto& sv = singulars[sidx];
      if (!sv.expected) plain = false;
      if (std::abs(sv.value.plus) == 0.0) {
        has_zero = true;
        wind0 = out.winding[sidx];
      } else if (std::abs(sv.value.minus) == 0.0) {
        has_inf = true;
      }
    }
    plain = plain && has_zero && has_inf;
  }
  if (plain && (wind0 == 1 || wind0 == -1))
    out.kind = LoopClass::clifford;
  else if (plain && wind0 == 0)
    out.kind = LoopClass::chekanov;
  else
    out.kind = LoopClass::other;
  return out;
}

ActionPeriods action_periods(const TorusSample& t) {
  if (t.points.size() != static_cast<std::size_t>(t.node_count()) || t.points.empty())
    fail_validation("incomplete torus sample");
  const ReductionData& rd = t.reduction;
  int n = rd.n();
  int fib = t.fiber_axes();

  Eigen::VectorXd w = to_vecd(t.dual_direction);
  Eigen::VectorXd sigma_w = rd.section_d * w;

  // loop along s at fiber origin: trapezoid in the measured moduli against
  // the exact phase increments d(phi) = sigma w d(alpha)
  auto s_loop_period = [&](int stride) {
    double acc = 0;
    std::vector<int> origin(static_cast<std::size_t>(fib), 0);
    for (int k = 0; k < t.loop_count; k += stride) {
      int k2 = (k + stride) % t.loop_count;
      double a1 = t.alpha[static_cast<std::size_t>(k)];
      double a2 = (k + stride <= t.loop_count)
                      ? t.alpha[static_cast<std::size_t>(k + stride)]
                      : t.alpha[static_cast<std::size_t>(t.loop_count)];
      const auto& z1 = t.points[static_cast<std::size_t>(t.node_index(k, origin))].z;
      const auto& z2 = t.points[static_cast<std::size_t>(t.node_index(k2, origin))].z;
      for (int i = 0; i < rd.r(); ++i) {
        double action_mid = 0.25 * (std::norm(z1(i)) + std::norm(z2(i)));
        acc += action_mid * sigma_w(i) * (a2 - a1);
      }
    }
    return acc;
  };

  Eigen::VectorXd raw(n);
  raw(0) = s_loop_period(1);
  for (int j = 0; j < fib; ++j) {
    Eigen::VectorXd sigma_v = rd.section_d * to_vecd(t.pencil.reduced_basis.row_vec(j));
    const auto& z0 = t.points[0].z;  // slice 0, fiber origin; moduli constant on the fiber
    double acc = 0;
    for (int i = 0; i < rd.r(); ++i) acc += 0.5 * std::norm(z0(i)) * sigma_v(i) * 2 * M_PI;
    raw(1 + j) = acc;
  }

  ActionPeriods out;
  IntMatrix m(n, n);
  for (int j = 0; j < n; ++j) m.at(0, j) = Integer(t.winding0) * t.dual_direction[static_cast<std::size_t>(j)];
  for (int i = 0; i < fib; ++i)
    for (int j = 0; j < n; ++j) m.at(1 + i, j) = t.pencil.reduced_basis.at(i, j);
  Integer det = m.determinant();
  if (det == 1 || det == -1) {
    Eigen::MatrixXd md(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) md(i, j) = static_cast<double>(m.at(i, j));
    out.periods = md.colPivHouseholderQr().solve(raw);
    out.standard_basis = true;
  } else {
    out.periods = raw;
    out.standard_basis = false;
  }
  if (t.loop_count % 2 == 0) {
    double half = s_loop_period(2);
    out.refinement_estimate = std::abs(raw(0) - half);
  }
  return out;
}

void export_torus_csv(const TorusSample& t, std::ostream& out) {
  int n = t.reduction.n();
  int r = t.reduction.r();
  out << "s";
  for (int j = 1; j < n; ++j) out << ",theta_" << j;
  for (int i = 1; i <= r; ++i) out << ",re_z" << i << ",im_z" << i;
  out << ",omega_residual\n";
  char buf[64];
  auto emit = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    out << buf;
  };
  std::vector<int> u(static_cast<std::size_t>(t.fiber_axes()), 0);
  for (int k = 0; k < t.loop_count; ++k) {
    std::fill(u.begin(), u.end(), 0);
    for (;;) {
      long node = t.node_index(k, u);
      emit(static_cast<double>(k) / t.loop_count);
      for (int j = 0; j < t.fiber_axes(); ++j) {
        out << ",";
        emit(2 * M_PI * u[static_cast<std::size_t>(j)] / t.circle_count);
      }
      const auto& z = t.points[static_cast<std::size_t>(node)].z;
      for (int i = 0; i < r; ++i) {
        out << ",";
        emit(z(i).real());
        out << ",";
        emit(z(i).imag());
      }
      out << ",";
      emit(t.omega_residual.empty() ? 0.0 : t.omega_residual[static_cast<std::size_t>(node)]);
      out << "\n";
      int ax = t.fiber_axes() - 1;
      while (ax >= 0 && ++u[static_cast<std::size_t>(ax)] == t.circle_count) {
        u[static_cast<std::size_t>(ax)] = 0;
        --ax;
      }
      if (ax < 0) break;
    }
  }
}

Json torus_report_json(const TorusSample& t, const VerificationReport& verification) {
  Json j;
  j["loop_samples"] = t.loop_count;
  j["circle_samples"] = t.circle_count;
  j["area_scale"] = round_sig(t.reduction.area_scale);
  j["winding_around_origin"] = t.winding0;
  j["closure_error"] = round_sig(t.closure_error);
  j["holonomy"] = round_sig(t.holonomy);

  Json tol;
  tol["fiber"] = t.reduction.tol.fiber;
  tol["level_set"] = t.reduction.tol.level_set;
  tol["lagrangian"] = t.reduction.tol.lagrangian;
  tol["margin"] = t.reduction.tol.margin;
  j["tolerances"] = std::move(tol);

  j["verification"] = verification.to_json();

  auto singulars = singular_values(t.reduction, t.pencil);
  auto cls = classify_loop(t.loop, singulars);
  j["classification"] = cls.kind == LoopClass::clifford
                            ? "clifford"
                            : (cls.kind == LoopClass::chekanov ? "chekanov" : "other");
  j["winding"] = cls.winding;

  auto periods = action_periods(t);
  Json pj = Json::array();
  for (Eigen::Index i = 0; i < periods.periods.size(); ++i)
    pj.push_back(round_sig(periods.periods(i)));
  j["action_periods"] = std::move(pj);
  j["periods_in_standard_basis"] = periods.standard_basis;
  j["period_refinement_estimate"] = round_sig(periods.refinement_estimate);

  // the phase-section matrix pins which torus coordinates the angles refer to
  Json section = Json::array();
  for (int i = 0; i < t.reduction.section.rows(); ++i) {
    Json row = Json::array();
    for (int jj = 0; jj < t.reduction.section.cols(); ++jj)
      row.push_back(static_cast<long long>(t.reduction.section.at(i, jj)));
    section.push_back(std::move(row));
  }
  j["phase_section"] = std::move(section);
  return j;
}

}  // namespace lagforge
