#include "lagforge/mironov.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <tuple>

namespace lagforge {

namespace {

constexpr int kPairs[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};

Complex quadric_value(const Eigen::VectorXcd& p) {
  return p(0) * p(5) - p(1) * p(4) + p(2) * p(3);
}

Eigen::VectorXd plucker_real(const Eigen::MatrixXd& m) {
  Eigen::VectorXd p(6);
  for (int i = 0; i < 6; ++i) {
    int a = kPairs[i][0], b = kPairs[i][1];
    p(i) = m(0, a) * m(1, b) - m(0, b) * m(1, a);
  }
  return p;
}

// state of one real sample while solving: a vector for affine/projective,
// an orthonormal 2x4 row frame for the grassmannian
struct RealState {
  Eigen::VectorXd x;
  Eigen::MatrixXd m;
};

int model_dof(const AmbientModel& a) {
  switch (a.kind) {
    case AmbientModel::Kind::affine: return a.coords;
    case AmbientModel::Kind::projective: return a.coords - 1;
    case AmbientModel::Kind::grassmann: return 4;
  }
  return 0;
}

Eigen::VectorXcd embed_state(const AmbientModel& a, const RealState& st) {
  if (a.kind == AmbientModel::Kind::grassmann)
    return plucker_real(st.m).cast<Complex>();
  return st.x.cast<Complex>();
}

RealState retract(const AmbientModel& a, const RealState& st, const Eigen::VectorXd& delta) {
  RealState out = st;
  if (a.kind == AmbientModel::Kind::affine) {
    out.x += delta;
  } else if (a.kind == AmbientModel::Kind::projective) {
    out.x += delta;
    double n = out.x.norm();
    if (n < 1e-9) fail_numeric("projective retraction collapsed to the origin");
    out.x /= n;
  } else {
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 4; ++c) out.m(r, c) += delta(4 * r + c);
    Eigen::VectorXd r0 = out.m.row(0), r1 = out.m.row(1);
    double n0 = r0.norm();
    if (n0 < 1e-9) fail_numeric("grassmann retraction degenerated");
    r0 /= n0;
    r1 -= r1.dot(r0) * r0;
    double n1 = r1.norm();
    if (n1 < 1e-9) fail_numeric("grassmann retraction degenerated");
    r1 /= n1;
    out.m.row(0) = r0;
    out.m.row(1) = r1;
  }
  return out;
}

// orthonormal basis of the model tangent space, columns in state coordinates
Eigen::MatrixXd model_tangent_basis(const AmbientModel& a, const RealState& st) {
  if (a.kind == AmbientModel::Kind::affine)
    return Eigen::MatrixXd::Identity(a.coords, a.coords);
  if (a.kind == AmbientModel::Kind::projective) {
    Eigen::MatrixXd col = st.x;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(col);
    Eigen::MatrixXd q = qr.householderQ();
    return q.rightCols(a.coords - 1);
  }
  // grassmann: horizontal directions B * M_perp, B over the 2x2 basis
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(st.m.transpose());
  Eigen::MatrixXd q = qr.householderQ();
  Eigen::MatrixXd perp = q.rightCols(2).transpose();  // 2x4, orthonormal, rows _|_ rows of m
  Eigen::MatrixXd basis(8, 4);
  basis.setZero();
  for (int r = 0; r < 2; ++r)
    for (int s = 0; s < 2; ++s) {
      int col = 2 * r + s;
      for (int c = 0; c < 4; ++c) basis(4 * r + c, col) = perp(s, c);
    }
  return basis;
}

Eigen::VectorXd to_weights(const std::vector<Integer>& w) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(w.size()));
  for (Eigen::Index i = 0; i < out.size(); ++i)
    out(i) = static_cast<double>(w[static_cast<std::size_t>(i)]);
  return out;
}

double level_value(const AmbientModel& a, const Eigen::VectorXd& w, const RealState& st) {
  if (a.kind == AmbientModel::Kind::affine) return 0.5 * w.dot(st.x.cwiseAbs2());
  if (a.kind == AmbientModel::Kind::projective) return w.dot(st.x.cwiseAbs2());
  return w.dot(plucker_real(st.m).cwiseAbs2());
}

// gradient of the level function in state coordinates (normal components are
// harmless: they are projected out against the model tangent basis)
Eigen::VectorXd level_gradient(const AmbientModel& a, const Eigen::VectorXd& w,
                               const RealState& st) {
  if (a.kind == AmbientModel::Kind::affine) return w.cwiseProduct(st.x);
  if (a.kind == AmbientModel::Kind::projective) return 2.0 * w.cwiseProduct(st.x);
  Eigen::VectorXd p = plucker_real(st.m);
  Eigen::MatrixXd wp = Eigen::MatrixXd::Zero(4, 4);  // antisymmetric w_{ab} p_{ab}
  for (int i = 0; i < 6; ++i) {
    int x = kPairs[i][0], y = kPairs[i][1];
    wp(x, y) = w(i) * p(i);
    wp(y, x) = -wp(x, y);
  }
  Eigen::VectorXd g(8);
  for (int c = 0; c < 4; ++c) {
    double g0 = 0, g1 = 0;
    for (int b = 0; b < 4; ++b) {
      g0 += wp(c, b) * st.m(1, b);
      g1 -= wp(c, b) * st.m(0, b);
    }
    g(c) = 2 * g0;
    g(4 + c) = 2 * g1;
  }
  return g;
}

Eigen::MatrixXd level_jacobian(const AmbientModel& a, const SubtorusSpec& s,
                               const RealState& st, const Eigen::MatrixXd& basis) {
  int k = s.weights.rows();
  Eigen::MatrixXd j(k, basis.cols());
  for (int i = 0; i < k; ++i)
    j.row(i) = level_gradient(a, to_weights(s.weights.row_vec(i)), st).transpose() * basis;
  return j;
}

Eigen::VectorXd level_residuals(const AmbientModel& a, const SubtorusSpec& s,
                                const RealState& st) {
  int k = s.weights.rows();
  Eigen::VectorXd r(k);
  for (int i = 0; i < k; ++i)
    r(i) = level_value(a, to_weights(s.weights.row_vec(i)), st) - s.c(i);
  return r;
}

bool newton_project(const AmbientModel& a, const SubtorusSpec& s, RealState& st) {
  if (s.weights.rows() == 0) return true;
  for (int iter = 0; iter < 60; ++iter) {
    Eigen::VectorXd r = level_residuals(a, s, st);
    if (r.cwiseAbs().maxCoeff() < 1e-13) return true;
    Eigen::MatrixXd basis = model_tangent_basis(a, st);
    Eigen::MatrixXd j = level_jacobian(a, s, st, basis);
    Eigen::MatrixXd gram = j * j.transpose();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    if (ldlt.info() != Eigen::Success) return false;
    Eigen::VectorXd step = -j.transpose() * ldlt.solve(r);
    if (!(step.norm() < 1e6) || gram.diagonal().minCoeff() < 1e-14) return false;
    st = retract(a, st, basis * step);
  }
  return false;
}

// orthonormal basis of ker(df) inside the model tangent space at st; empty
// when the level values are critical there (sigma_k too small)
Eigen::MatrixXd level_tangent_basis(const AmbientModel& a, const SubtorusSpec& s,
                                    const RealState& st) {
  Eigen::MatrixXd basis = model_tangent_basis(a, st);
  int k = s.weights.rows();
  if (k == 0) return basis;
  Eigen::MatrixXd j = level_jacobian(a, s, st, basis);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(j, Eigen::ComputeFullV);
  if (svd.singularValues()(k - 1) < 1e-6) return Eigen::MatrixXd(basis.rows(), 0);
  return basis * svd.matrixV().rightCols(basis.cols() - k);
}

RealState random_state(const AmbientModel& a, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  RealState st;
  if (a.kind == AmbientModel::Kind::grassmann) {
    st.m.resize(2, 4);
    for (;;) {
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 4; ++c) st.m(r, c) = gauss(rng);
      Eigen::VectorXd r0 = st.m.row(0), r1 = st.m.row(1);
      if (r0.norm() < 1e-3) continue;
      r0.normalize();
      r1 -= r1.dot(r0) * r0;
      if (r1.norm() < 1e-3) continue;
      r1.normalize();
      st.m.row(0) = r0;
      st.m.row(1) = r1;
      return st;
    }
  }
  st.x.resize(a.coords);
  for (;;) {
    for (int i = 0; i < a.coords; ++i) st.x(i) = gauss(rng);
    if (a.kind == AmbientModel::Kind::affine) {
      st.x *= 1.5;
      return st;
    }
    if (st.x.norm() > 1e-3) {
      st.x.normalize();
      return st;
    }
  }
}

void check_real_point(const AmbientModel& a, const SubtorusSpec& s, const RealState& st) {
  Eigen::VectorXcd p = embed_state(a, st);
  if (model_constraint_residual(a, p) > 1e-12)
    fail_numeric("sampled point violates the model constraints");
  if (s.weights.rows() > 0 && level_residuals(a, s, st).cwiseAbs().maxCoeff() > 1e-10)
    fail_numeric("sampled point missed the requested levels");
}

std::vector<int> unflatten(long flat, const std::vector<int>& shape) {
  std::vector<int> idx(shape.size(), 0);
  for (int ax = static_cast<int>(shape.size()) - 1; ax >= 0; --ax) {
    idx[static_cast<std::size_t>(ax)] = static_cast<int>(flat % shape[static_cast<std::size_t>(ax)]);
    flat /= shape[static_cast<std::size_t>(ax)];
  }
  return idx;
}

long flatten(const std::vector<int>& idx, const std::vector<int>& shape) {
  long flat = 0;
  for (std::size_t ax = 0; ax < shape.size(); ++ax) flat = flat * shape[ax] + idx[ax];
  return flat;
}

// FD stencil over one chart axis: node indices and weights for d/du at idx
void axis_stencil(const RealChart& chart, int axis, int at, std::vector<int>& idx,
                  std::vector<double>& w) {
  int count = chart.shape[static_cast<std::size_t>(axis)];
  idx.clear();
  std::vector<double> nodes;
  if (chart.periodic) {
    int half = count >= 9 ? 4 : 1;
    for (int o = -half; o <= half; ++o) {
      idx.push_back(((at + o) % count + count) % count);
      nodes.push_back(o * chart.step);
    }
    w = fd_weights(0.0, nodes);
    return;
  }
  int width = std::min(5, count);
  int begin = std::clamp(at - width / 2, 0, count - width);
  for (int i = 0; i < width; ++i) {
    idx.push_back(begin + i);
    nodes.push_back((begin + i) * chart.step);
  }
  w = fd_weights(at * chart.step, nodes);
}

void compute_cycle_frames(MironovCycleSample& m) {
  const AmbientModel& a = m.model;
  int k = m.k();
  int d = m.base.dim;
  long total = m.node_count();
  m.frames.assign(static_cast<std::size_t>(total), {});
  m.omega_residual.assign(static_cast<std::size_t>(total), 0.0);

  parallel_for(static_cast<std::size_t>(total), [&](std::size_t node) {
    int chart;
    std::vector<int> grid, angles;
    m.decode(static_cast<long>(node), chart, grid, angles);
    const Eigen::VectorXcd& z = m.points[node];

    std::vector<Eigen::VectorXcd> frame;
    frame.reserve(static_cast<std::size_t>(k + d));
    for (int i = 0; i < k; ++i) {
      Eigen::VectorXcd v(a.coords);
      for (int jj = 0; jj < a.coords; ++jj)
        v(jj) = Complex(0, static_cast<double>(m.subtorus.weights.at(i, jj))) * z(jj);
      frame.push_back(model_horizontal(a, z, v));
    }
    const RealChart& ch = m.base.charts[static_cast<std::size_t>(chart)];
    std::vector<int> sidx;
    std::vector<double> sw;
    for (int ax = 0; ax < d; ++ax) {
      axis_stencil(ch, ax, grid[static_cast<std::size_t>(ax)], sidx, sw);
      Eigen::VectorXcd v = Eigen::VectorXcd::Zero(a.coords);
      std::vector<int> g = grid;
      for (std::size_t t = 0; t < sidx.size(); ++t) {
        g[static_cast<std::size_t>(ax)] = sidx[t];
        v += sw[t] * m.points[static_cast<std::size_t>(m.encode(chart, g, angles))];
      }
      frame.push_back(model_horizontal(a, z, v));
    }

    double worst = 0;
    for (std::size_t i = 0; i < frame.size(); ++i)
      for (std::size_t jj = i + 1; jj < frame.size(); ++jj)
        worst = std::max(worst, std::abs(model_omega(a, z, frame[i], frame[jj])));
    m.omega_residual[node] = worst;
    m.frames[node] = std::move(frame);
  });
}

}  // namespace

AmbientModel ambient_affine(int m) {
  if (m < 1) fail_validation("affine model needs at least one coordinate");
  AmbientModel a;
  a.kind = AmbientModel::Kind::affine;
  a.coords = m;
  a.torus_weights = IntMatrix(m, m);
  for (int i = 0; i < m; ++i) a.torus_weights.at(i, i) = 1;
  return a;
}

AmbientModel ambient_projective(int m) {
  if (m < 1) fail_validation("projective model needs positive dimension");
  AmbientModel a;
  a.kind = AmbientModel::Kind::projective;
  a.coords = m + 1;
  a.torus_weights = IntMatrix(m + 1, m + 1);
  for (int i = 0; i <= m; ++i) a.torus_weights.at(i, i) = 1;
  return a;
}

AmbientModel ambient_grassmann24() {
  AmbientModel a;
  a.kind = AmbientModel::Kind::grassmann;
  a.coords = 6;
  a.torus_weights = IntMatrix(4, 6);
  for (int g = 0; g < 4; ++g)
    for (int i = 0; i < 6; ++i)
      a.torus_weights.at(g, i) = (kPairs[i][0] == g || kPairs[i][1] == g) ? 1 : 0;
  return a;
}

void validate_subtorus(const AmbientModel& a, const SubtorusSpec& s) {
  int k = s.weights.rows();
  if (s.weights.cols() != a.coords && k > 0)
    fail_validation("subtorus weight vectors must match the model coordinates");
  if (s.c.size() != k) fail_validation("level count must equal the subtorus rank");
  if (k == 0) return;
  if (lattice::integer_kernel(s.weights.transposed()).cols() != 0)
    fail_validation("subtorus weight vectors are linearly dependent");
  if (a.kind != AmbientModel::Kind::affine) {
    IntMatrix stacked(k + 1, a.coords);
    for (int i = 0; i < k; ++i)
      for (int jj = 0; jj < a.coords; ++jj) stacked.at(i, jj) = s.weights.at(i, jj);
    for (int jj = 0; jj < a.coords; ++jj) stacked.at(k, jj) = 1;
    if (lattice::integer_kernel(stacked.transposed()).cols() != 0)
      fail_validation("subtorus contains the trivial global-phase direction");
  }
  if (a.kind == AmbientModel::Kind::grassmann) {
    for (int i = 0; i < k; ++i) {
      Integer s05 = s.weights.at(i, 0) + s.weights.at(i, 5);
      Integer s14 = s.weights.at(i, 1) + s.weights.at(i, 4);
      Integer s23 = s.weights.at(i, 2) + s.weights.at(i, 3);
      if (s05 != s14 || s14 != s23)
        fail_validation("subtorus weights do not preserve the Pluecker quadric");
    }
  }
}

Eigen::VectorXcd conjugate_point(const AmbientModel& a, const Eigen::VectorXcd& p) {
  if (p.size() != a.coords) fail_validation("point has wrong coordinate count");
  return p.conjugate();
}

Eigen::VectorXcd torus_act(const AmbientModel& a, const IntMatrix& weights,
                           const Eigen::VectorXd& theta, const Eigen::VectorXcd& p) {
  if (p.size() != a.coords || weights.cols() != a.coords || theta.size() != weights.rows())
    fail_validation("torus action arguments are inconsistent");
  Eigen::VectorXcd out = p;
  for (int jj = 0; jj < a.coords; ++jj) {
    double phase = 0;
    for (int i = 0; i < weights.rows(); ++i)
      phase += theta(i) * static_cast<double>(weights.at(i, jj));
    out(jj) *= std::polar(1.0, phase);
  }
  return out;
}

double moment_value(const AmbientModel& a, const std::vector<Integer>& w,
                    const Eigen::VectorXcd& p) {
  if (static_cast<int>(w.size()) != a.coords) fail_validation("weight vector length mismatch");
  Eigen::VectorXd sq = p.cwiseAbs2();
  double num = to_weights(w).dot(sq);
  if (a.kind == AmbientModel::Kind::affine) return 0.5 * num;
  double den = sq.sum();
  if (den < 1e-18) fail_validation("moment undefined at the origin representative");
  return num / den;
}

double model_constraint_residual(const AmbientModel& a, const Eigen::VectorXcd& p) {
  if (p.size() != a.coords) fail_validation("point has wrong coordinate count");
  if (a.kind == AmbientModel::Kind::affine) return 0.0;
  double res = std::abs(p.norm() - 1.0);
  if (a.kind == AmbientModel::Kind::grassmann)
    res = std::max(res, std::abs(quadric_value(p)));
  return res;
}

Eigen::VectorXcd model_horizontal(const AmbientModel& a, const Eigen::VectorXcd& p,
                                  const Eigen::VectorXcd& v) {
  if (a.kind == AmbientModel::Kind::affine) return v;
  return v - p.dot(v) * p;
}

double model_omega(const AmbientModel& a, const Eigen::VectorXcd& p,
                   const Eigen::VectorXcd& u, const Eigen::VectorXcd& v) {
  if (a.kind == AmbientModel::Kind::affine) return u.dot(v).imag();
  return model_horizontal(a, p, u).dot(model_horizontal(a, p, v)).imag();
}

double model_distance(const AmbientModel& a, const Eigen::VectorXcd& p,
                      const Eigen::VectorXcd& q) {
  if (a.kind == AmbientModel::Kind::affine) return (p - q).norm();
  double align = std::min(std::abs(p.dot(q)), 1.0);
  return std::sqrt(std::max(0.0, 2.0 * (1.0 - align)));
}

Eigen::VectorXcd gauge_fix(const AmbientModel& a, const Eigen::VectorXcd& p) {
  if (a.kind == AmbientModel::Kind::affine) return p;
  int argmax = 0;
  for (int i = 1; i < p.size(); ++i)
    if (std::abs(p(i)) > std::abs(p(argmax))) argmax = i;
  if (std::abs(p(argmax)) == 0.0) fail_validation("cannot gauge-fix the zero vector");
  return p * std::polar(1.0, -std::arg(p(argmax)));
}

RealLevelSample real_level_set(const AmbientModel& a, const SubtorusSpec& s, int resolution,
                               std::uint64_t seed) {
  validate_subtorus(a, s);
  int k = s.weights.rows();
  int d = model_dof(a) - k;
  if (d < 0) fail_validation("subtorus rank exceeds the model torus dimension");
  if (d > 0 && resolution < 2) fail_validation("chart resolution must be at least 2");

  RealLevelSample out;
  out.model = a;
  out.subtorus = s;
  out.dim = d;

  // full exact parametrization for the planar ellipse case
  if (a.kind == AmbientModel::Kind::affine && a.coords == 2 && k == 1 &&
      s.weights.at(0, 0) > 0 && s.weights.at(0, 1) > 0 && s.c(0) > 0) {
    if (resolution < 8) fail_validation("periodic charts need at least 8 samples");
    double w0 = static_cast<double>(s.weights.at(0, 0));
    double w1 = static_cast<double>(s.weights.at(0, 1));
    double r0 = std::sqrt(2 * s.c(0) / w0), r1 = std::sqrt(2 * s.c(0) / w1);
    RealChart chart;
    chart.shape = {resolution};
    chart.step = 2 * M_PI / resolution;
    chart.periodic = true;
    chart.points.resize(static_cast<std::size_t>(resolution));
    for (int i = 0; i < resolution; ++i) {
      Eigen::VectorXcd p(2);
      p(0) = r0 * std::cos(chart.step * i);
      p(1) = r1 * std::sin(chart.step * i);
      chart.points[static_cast<std::size_t>(i)] = p;
    }
    out.charts.push_back(std::move(chart));
    return out;
  }

  std::mt19937_64 rng(0x4d49524f4e4f56ULL + 0x9e3779b97f4a7c15ULL * seed);
  int seeds = k == 0 ? 3 : 32;
  std::vector<Eigen::VectorXcd> reps;
  std::vector<int> shape(static_cast<std::size_t>(d), resolution);
  long grid_total = 1;
  for (int ax = 0; ax < d; ++ax) grid_total *= resolution;
  const double h = 0.02;

  for (int attempt = 0; attempt < seeds; ++attempt) {
    RealState seed;
    if (a.kind == AmbientModel::Kind::affine && k == 0) {
      seed.x = Eigen::VectorXd::Zero(a.coords);
      attempt = seeds;  // one canonical chart of the flat real locus
    } else {
      seed = random_state(a, rng);
    }
    if (!newton_project(a, s, seed)) continue;
    Eigen::VectorXcd rep = embed_state(a, seed);
    bool duplicate = false;
    for (const auto& r : reps)
      if (model_distance(a, rep, r) < 0.05) duplicate = true;
    if (duplicate) continue;
    Eigen::MatrixXd basis = level_tangent_basis(a, s, seed);
    if (basis.cols() != d) continue;  // critical level: no honest chart here
    reps.push_back(rep);

    RealChart chart;
    chart.shape = shape;
    chart.step = h;
    chart.periodic = false;
    chart.points.resize(static_cast<std::size_t>(grid_total));
    parallel_for(static_cast<std::size_t>(grid_total), [&](std::size_t flat) {
      std::vector<int> idx = unflatten(static_cast<long>(flat), shape);
      Eigen::VectorXd u(d);
      for (int ax = 0; ax < d; ++ax)
        u(ax) = (idx[static_cast<std::size_t>(ax)] - 0.5 * (resolution - 1)) * h;
      RealState pt = retract(a, seed, basis * u);
      if (!newton_project(a, s, pt))
        fail_numeric("level-set chart solve failed to converge at a grid point");
      check_real_point(a, s, pt);
      chart.points[flat] = embed_state(a, pt);
    });
    out.charts.push_back(std::move(chart));
  }

  if (out.charts.empty())
    fail_infeasible("level values admit no real solutions within the attainable range");
  return out;
}

void MironovCycleSample::decode(long node, int& chart, std::vector<int>& grid,
                                std::vector<int>& angles) const {
  long a = angle_count();
  long rem = node;
  chart = 0;
  for (const auto& ch : base.charts) {
    long span = ch.size() * a;
    if (rem < span) break;
    rem -= span;
    ++chart;
  }
  const RealChart& ch = base.charts[static_cast<std::size_t>(chart)];
  grid = unflatten(rem / a, ch.shape);
  std::vector<int> ashape(static_cast<std::size_t>(k()), angular_resolution);
  angles = unflatten(rem % a, ashape);
}

long MironovCycleSample::encode(int chart, const std::vector<int>& grid,
                                const std::vector<int>& angles) const {
  long a = angle_count();
  long node = 0;
  for (int ci = 0; ci < chart; ++ci) node += base.charts[static_cast<std::size_t>(ci)].size() * a;
  std::vector<int> ashape(static_cast<std::size_t>(k()), angular_resolution);
  return node + flatten(grid, base.charts[static_cast<std::size_t>(chart)].shape) * a +
         flatten(angles, ashape);
}

MironovCycleSample torus_sweep(const AmbientModel& a, const SubtorusSpec& s,
                               const RealLevelSample& sr, int angular_resolution) {
  validate_subtorus(a, s);
  if (sr.charts.empty()) fail_validation("empty real level sample");
  int k = s.weights.rows();
  if (k > 0 && angular_resolution < 2)
    fail_validation("angular resolution must be at least 2");

  MironovCycleSample m;
  m.model = a;
  m.subtorus = s;
  m.base = sr;
  m.angular_resolution = k == 0 ? 1 : angular_resolution;

  long total = m.node_count();
  m.points.resize(static_cast<std::size_t>(total));
  std::vector<int> ashape(static_cast<std::size_t>(k), m.angular_resolution);
  long acount = m.angle_count();
  double astep = 2 * M_PI / m.angular_resolution;

  long base_index = 0;
  for (std::size_t ci = 0; ci < sr.charts.size(); ++ci) {
    const RealChart& ch = sr.charts[ci];
    parallel_for(static_cast<std::size_t>(ch.size()), [&](std::size_t flat) {
      const Eigen::VectorXcd& x = ch.points[flat];
      for (long af = 0; af < acount; ++af) {
        std::vector<int> aidx = unflatten(af, ashape);
        Eigen::VectorXd theta(k);
        for (int i = 0; i < k; ++i) theta(i) = astep * aidx[static_cast<std::size_t>(i)];
        m.points[static_cast<std::size_t>(base_index + static_cast<long>(flat) * acount + af)] =
            k == 0 ? x : torus_act(a, s.weights, theta, x);
      }
    });
    base_index += ch.size() * acount;
  }

  compute_cycle_frames(m);
  return m;
}

VerificationReport verify_lagrangian_immersion(MironovCycleSample& m, double tol,
                                               double rank_tol) {
  if (m.points.size() != static_cast<std::size_t>(m.node_count()) || m.points.empty())
    fail_validation("incomplete cycle sample");
  for (const auto& p : m.points)
    if (p.size() != m.model.coords) fail_validation("incomplete cycle sample");

  compute_cycle_frames(m);
  VerificationReport report = make_residual_report(m.omega_residual, tol);

  int dim = m.dim();
  int c = m.model.coords;
  std::vector<double> min_sv(m.points.size());
  parallel_for(m.points.size(), [&](std::size_t node) {
    Eigen::MatrixXd frame(2 * c, dim);
    for (int jj = 0; jj < dim; ++jj)
      for (int i = 0; i < c; ++i) {
        frame(2 * i, jj) = m.frames[node][static_cast<std::size_t>(jj)](i).real();
        frame(2 * i + 1, jj) = m.frames[node][static_cast<std::size_t>(jj)](i).imag();
      }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(frame);
    min_sv[node] = svd.singularValues()(dim - 1);
  });

  double worst = std::numeric_limits<double>::infinity();
  long worst_node = -1, non_immersed = 0, first_bad = -1;
  for (std::size_t node = 0; node < min_sv.size(); ++node) {
    if (min_sv[node] < worst) {
      worst = min_sv[node];
      worst_node = static_cast<long>(node);
    }
    if (min_sv[node] <= rank_tol) {
      ++non_immersed;
      if (first_bad < 0) first_bad = static_cast<long>(node);
    }
  }

  double level_worst = 0, constraint_worst = 0;
  for (std::size_t node = 0; node < m.points.size(); ++node) {
    constraint_worst =
        std::max(constraint_worst, model_constraint_residual(m.model, m.points[node]));
    for (int i = 0; i < m.k(); ++i)
      level_worst = std::max(
          level_worst, std::abs(moment_value(m.model, m.subtorus.weights.row_vec(i),
                                             m.points[node]) -
                                m.subtorus.c(i)));
  }

  report.extra["min_frame_sv"] = worst;
  report.extra["min_frame_sv_node"] = static_cast<double>(worst_node);
  report.extra["non_immersed_count"] = static_cast<double>(non_immersed);
  report.extra["first_non_immersed_node"] = static_cast<double>(first_bad);
  report.extra["max_level_residual"] = level_worst;
  report.extra["max_constraint_residual"] = constraint_worst;
  if (non_immersed > 0) report.pass = false;
  return report;
}

std::vector<CollisionRecord> self_intersection_scan(const MironovCycleSample& m,
                                                    double eps_ambient, double eps_param) {
  if (m.points.empty()) return {};
  if (!(eps_ambient > 0) || !(eps_param > 0)) fail_validation("collision thresholds must be positive");
  long total = m.node_count();

  // hash on a low-dimensional gauge-invariant key: closeness of the key is
  // necessary for ambient closeness, so no pair is missed
  int key_dim = std::min<int>(3, m.model.kind == AmbientModel::Kind::affine
                                     ? 2 * m.model.coords
                                     : m.model.coords);
  auto key_of = [&](long node) {
    std::vector<double> key(static_cast<std::size_t>(key_dim));
    const Eigen::VectorXcd& z = m.points[static_cast<std::size_t>(node)];
    for (int i = 0; i < key_dim; ++i) {
      if (m.model.kind == AmbientModel::Kind::affine)
        key[static_cast<std::size_t>(i)] = i % 2 == 0 ? z(i / 2).real() : z(i / 2).imag();
      else
        key[static_cast<std::size_t>(i)] = std::abs(z(i));
    }
    return key;
  };
  auto cell_of = [&](const std::vector<double>& key) {
    std::vector<long> cell(key.size());
    for (std::size_t i = 0; i < key.size(); ++i)
      cell[i] = static_cast<long>(std::floor(key[i] / eps_ambient));
    return cell;
  };

  std::map<std::vector<long>, std::vector<long>> cells;
  for (long node = 0; node < total; ++node) cells[cell_of(key_of(node))].push_back(node);

  // parameter distance: torus metric on angles, chart metric on grid axes;
  // points from different charts are always parameter-distant
  auto param_distance = [&](long na, long nb) {
    int ca, cb;
    std::vector<int> ga, gb, aa, ab;
    m.decode(na, ca, ga, aa);
    m.decode(nb, cb, gb, ab);
    if (ca != cb) return std::numeric_limits<double>::infinity();
    const RealChart& ch = m.base.charts[static_cast<std::size_t>(ca)];
    double sq = 0;
    for (std::size_t ax = 0; ax < ga.size(); ++ax) {
      double diff = std::abs(ga[ax] - gb[ax]);
      if (ch.periodic) diff = std::min(diff, ch.shape[ax] - diff);
      sq += diff * ch.step * diff * ch.step;
    }
    double astep = 2 * M_PI / m.angular_resolution;
    for (std::size_t i = 0; i < aa.size(); ++i) {
      double diff = std::abs(aa[i] - ab[i]) * astep;
      diff = std::min(diff, 2 * M_PI - diff);
      sq += diff * diff;
    }
    return std::sqrt(sq);
  };

  std::vector<std::pair<long, long>> raw;
  std::vector<double> raw_dist, raw_param;
  auto consider = [&](long x, long y) {
    long na = std::min(x, y), nb = std::max(x, y);
    double dist = model_distance(m.model, m.points[static_cast<std::size_t>(na)],
                                 m.points[static_cast<std::size_t>(nb)]);
    if (dist >= eps_ambient) return;
    double pd = param_distance(na, nb);
    if (pd <= eps_param) return;
    raw.emplace_back(na, nb);
    raw_dist.push_back(dist);
    raw_param.push_back(pd);
  };

  long combos = 1;
  for (int i = 0; i < key_dim; ++i) combos *= 3;
  std::vector<int> off(static_cast<std::size_t>(key_dim));
  std::vector<long> probe(static_cast<std::size_t>(key_dim));
  for (const auto& [cell, members] : cells) {
    for (std::size_t i = 0; i < members.size(); ++i)
      for (std::size_t jj = i + 1; jj < members.size(); ++jj)
        consider(members[i], members[jj]);
    // each unordered cell pair is visited once, from the lexicographically
    // smaller cell
    for (long code = 0; code < combos; ++code) {
      long rem = code;
      for (int i = key_dim - 1; i >= 0; --i) {
        off[static_cast<std::size_t>(i)] = static_cast<int>(rem % 3) - 1;
        rem /= 3;
      }
      bool positive = false;
      for (int i = 0; i < key_dim; ++i) {
        if (off[static_cast<std::size_t>(i)] > 0) {
          positive = true;
          break;
        }
        if (off[static_cast<std::size_t>(i)] < 0) break;
      }
      if (!positive) continue;
      for (int i = 0; i < key_dim; ++i)
        probe[static_cast<std::size_t>(i)] = cell[static_cast<std::size_t>(i)] + off[static_cast<std::size_t>(i)];
      auto it = cells.find(probe);
      if (it == cells.end()) continue;
      for (long na : members)
        for (long nb : it->second) consider(na, nb);
    }
  }

  // connected clusters, one record per cluster (its closest pair)
  std::map<long, long> parent;
  auto find = [&](long v) {
    if (!parent.count(v)) parent[v] = v;
    while (parent[v] != v) v = parent[v];
    return v;
  };
  auto unite = [&](long x, long y) {
    long rx = find(x), ry = find(y);
    if (rx != ry) parent[std::max(rx, ry)] = std::min(rx, ry);
  };
  for (const auto& [na, nb] : raw) unite(na, nb);

  std::map<long, CollisionRecord> clusters;
  std::map<long, int> sizes;
  for (const auto& [node, p] : parent) {
    (void)p;
    ++sizes[find(node)];
  }
  for (std::size_t i = 0; i < raw.size(); ++i) {
    long root = find(raw[i].first);
    auto it = clusters.find(root);
    if (it == clusters.end() || raw_dist[i] < it->second.ambient_distance) {
      CollisionRecord rec;
      rec.node_a = raw[i].first;
      rec.node_b = raw[i].second;
      rec.ambient_distance = raw_dist[i];
      rec.parameter_distance = raw_param[i];
      clusters[root] = rec;
    }
  }
  std::vector<CollisionRecord> out;
  for (auto& [root, rec] : clusters) {
    rec.cluster_size = sizes[root];
    out.push_back(rec);
  }
  std::sort(out.begin(), out.end(), [](const CollisionRecord& x, const CollisionRecord& y) {
    return std::tie(x.node_a, x.node_b) < std::tie(y.node_a, y.node_b);
  });
  return out;
}

Eigen::VectorXcd plucker_embed(const Eigen::Matrix<Complex, 2, 4>& m) {
  Eigen::VectorXcd p(6);
  for (int i = 0; i < 6; ++i) {
    int a = kPairs[i][0], b = kPairs[i][1];
    p(i) = m(0, a) * m(1, b) - m(0, b) * m(1, a);
  }
  double scale = m.row(0).norm() * m.row(1).norm();
  if (p.norm() <= 1e-12 * std::max(1.0, scale)) fail_validation("matrix does not have rank 2");
  p /= p.norm();
  if (std::abs(quadric_value(p)) > 1e-12)
    fail_numeric("Pluecker quadric residual out of tolerance");
  return p;
}

MironovCycleSample grassmann_cycle_level1(double c, int chart_resolution,
                                          int angular_resolution) {
  AmbientModel a = ambient_grassmann24();
  SubtorusSpec s;
  s.weights = IntMatrix(1, 6);
  for (int i = 0; i < 6; ++i) s.weights.at(0, i) = a.torus_weights.at(0, i);
  s.c = Eigen::VectorXd::Constant(1, c);
  RealLevelSample sr = real_level_set(a, s, chart_resolution);
  MironovCycleSample m = torus_sweep(a, s, sr, angular_resolution);
  m.immersion_report = verify_lagrangian_immersion(m, 1e-5, 1e-8);
  return m;
}

void export_cycle_csv(const MironovCycleSample& m, std::ostream& out) {
  int d = m.base.dim, k = m.k(), c = m.model.coords;
  bool grass = m.model.kind == AmbientModel::Kind::grassmann;
  const char* coord = grass ? "p" : "z";
  out << "chart";
  for (int j = 1; j <= d; ++j) out << ",u_" << j;
  for (int i = 1; i <= k; ++i) out << ",theta_" << i;
  for (int i = 1; i <= c; ++i) out << ",re_" << coord << i << ",im_" << coord << i;
  if (grass) out << ",quadric_residual";
  out << ",omega_residual\n";

  char buf[64];
  auto emit = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    out << buf;
  };
  long total = m.node_count();
  for (long node = 0; node < total; ++node) {
    int chart;
    std::vector<int> grid, angles;
    m.decode(node, chart, grid, angles);
    const RealChart& ch = m.base.charts[static_cast<std::size_t>(chart)];
    out << chart;
    for (int ax = 0; ax < d; ++ax) {
      out << ",";
      emit(grid[static_cast<std::size_t>(ax)] * ch.step);
    }
    for (int i = 0; i < k; ++i) {
      out << ",";
      emit(2 * M_PI * angles[static_cast<std::size_t>(i)] / m.angular_resolution);
    }
    Eigen::VectorXcd z = gauge_fix(m.model, m.points[static_cast<std::size_t>(node)]);
    for (int i = 0; i < c; ++i) {
      out << ",";
      emit(z(i).real());
      out << ",";
      emit(z(i).imag());
    }
    if (grass) {
      out << ",";
      emit(std::abs(quadric_value(z)));
    }
    out << ",";
    emit(m.omega_residual.empty() ? 0.0 : m.omega_residual[static_cast<std::size_t>(node)]);
    out << "\n";
  }
}

Json cycle_report_json(const MironovCycleSample& m, const VerificationReport& verification) {
  Json j;
  switch (m.model.kind) {
    case AmbientModel::Kind::affine: j["model"] = "affine"; break;
    case AmbientModel::Kind::projective: j["model"] = "projective"; break;
    case AmbientModel::Kind::grassmann: j["model"] = "grassmann"; break;
  }
  j["subtorus_rank"] = m.k();
  j["base_dimension"] = m.base.dim;
  j["cycle_dimension"] = m.dim();
  j["chart_count"] = m.base.charts.size();
  j["node_count"] = m.node_count();
  j["angular_resolution"] = m.angular_resolution;

  Tolerances tol;
  Json eps;
  eps["ambient"] = tol.eps_ambient;
  eps["parameter"] = tol.eps_param;
  j["collision_thresholds"] = std::move(eps);

  j["verification"] = verification.to_json();

  auto collisions = self_intersection_scan(m, tol.eps_ambient, tol.eps_param);
  Json cj;
  cj["cluster_count"] = collisions.size();
  long involved = 0;
  int largest = 0;
  for (const auto& rec : collisions) {
    involved += rec.cluster_size;
    largest = std::max(largest, rec.cluster_size);
  }
  cj["nodes_involved"] = involved;
  cj["largest_cluster"] = largest;
  j["self_intersections"] = std::move(cj);

  j["topology_note"] =
      "verified: dimension, frame rank, lagrangian residuals, collision census; "
      "bundle topology is not certified";
  return j;
}

}  // namespace lagforge
