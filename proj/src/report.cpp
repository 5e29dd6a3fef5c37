#include "lagforge/report.hpp"

#include <algorithm>
#include <cmath>

namespace lagforge {

double round_sig(double x, int digits) {
  if (x == 0.0 || !std::isfinite(x)) return x;
  double mag = std::pow(10.0, digits - 1 - static_cast<int>(std::floor(std::log10(std::abs(x)))));
  return std::round(x * mag) / mag;
}

VerificationReport make_residual_report(const std::vector<double>& residuals, double tol) {
  VerificationReport r;
  r.tolerance = tol;
  r.sample_count = static_cast<long>(residuals.size());
  r.histogram.assign(17, 0);
  if (residuals.empty()) fail_validation("cannot summarize an empty residual set");
  double sum = 0;
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    double v = residuals[i];
    sum += v;
    if (v > r.max_residual) {
      r.max_residual = v;
      r.argmax_index = static_cast<long>(i);
    }
    int bin = 0;
    if (v > 0) bin = std::clamp(static_cast<int>(std::floor(std::log10(v))) + 16, 0, 16);
    ++r.histogram[static_cast<std::size_t>(bin)];
  }
  r.mean_residual = sum / static_cast<double>(residuals.size());
  r.pass = r.max_residual < tol;
  return r;
}

Json VerificationReport::to_json() const {
  Json j;
  j["pass"] = pass;
  j["tolerance"] = round_sig(tolerance);
  j["max_residual"] = round_sig(max_residual);
  j["mean_residual"] = round_sig(mean_residual);
  j["sample_count"] = sample_count;
  j["argmax_index"] = argmax_index;
  j["histogram"] = histogram;
  for (const auto& [key, value] : extra) j[key] = round_sig(value);
  return j;
}

std::vector<double> fd_weights(double x0, const std::vector<double>& nodes) {
  // Fornberg's recursion, first derivative only
  int n = static_cast<int>(nodes.size());
  if (n < 2) fail_validation("derivative stencil needs at least two nodes");
  std::vector<std::vector<double>> c(2, std::vector<double>(static_cast<std::size_t>(n), 0.0));
  double c1 = 1.0;
  double c4 = nodes[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    int mn = std::min(i, 1);
    double c2 = 1.0;
    double c5 = c4;
    c4 = nodes[static_cast<std::size_t>(i)] - x0;
    for (int j = 0; j < i; ++j) {
      double c3 = nodes[static_cast<std::size_t>(i)] - nodes[static_cast<std::size_t>(j)];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          c[1][static_cast<std::size_t>(i)] =
              c1 * (k * c[0][static_cast<std::size_t>(i - 1)] - c5 * c[1][static_cast<std::size_t>(i - 1)]) / c2;
        c[0][static_cast<std::size_t>(i)] = -c1 * c5 * c[0][static_cast<std::size_t>(i - 1)] / c2;
      }
      for (int k = mn; k >= 1; --k)
        c[1][static_cast<std::size_t>(j)] =
            (c4 * c[1][static_cast<std::size_t>(j)] - k * c[0][static_cast<std::size_t>(j)]) / c3;
      c[0][static_cast<std::size_t>(j)] = c4 * c[0][static_cast<std::size_t>(j)] / c3;
    }
    c1 = c2;
  }
  return c[1];
}

}  // namespace lagforge
