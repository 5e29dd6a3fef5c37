#pragma once

#include <map>
#include <string>
#include <vector>

#include "lagforge/polytope.hpp"

namespace lagforge {

// Residual summary shared by every verifier: max/mean, the offending node,
// and a per-decade histogram from 1e-16 up to 1e0.
struct VerificationReport {
  bool pass = false;
  double tolerance = 0;
  double max_residual = 0;
  double mean_residual = 0;
  long sample_count = 0;
  long argmax_index = -1;
  std::vector<long> histogram;  // 17 decade bins: <=1e-16, ..., >1e-1
  std::map<std::string, double> extra;

  Json to_json() const;
};

VerificationReport make_residual_report(const std::vector<double>& residuals, double tol);

// round to `digits` significant digits; report JSON uses 12 so that byte-wise
// comparison of reruns is meaningful
double round_sig(double x, int digits = 12);

// first-derivative weights at x0 for arbitrary nodes (Fornberg recursion)
std::vector<double> fd_weights(double x0, const std::vector<double>& nodes);

}  // namespace lagforge
