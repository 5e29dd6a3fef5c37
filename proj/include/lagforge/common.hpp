#pragma once
// Shared numeric configuration, error taxonomy and small parallel helpers.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace lagforge {

using Complex = std::complex<double>;

inline constexpr double kTwoPi = 6.28318530717958647692528676655900577;

// All tolerances used by the numeric layers live here so a run can be
// reproduced from a single config echo.
struct Tolerances {
  double level_rel = 1e-10;    // reduction level-set residual (relative)
  double moment = 1e-8;        // moment_map least-squares consistency
  double fiber = 1e-8;         // chordal |psi(p) - gamma(s)|
  double level_set = 1e-8;     // reduced-integral values against c
  double lagrangian = 1e-6;    // max |omega(u_i, u_j)| over tangent frames
  double rank = 1e-8;          // least singular value of a tangent frame
  double closure = 1e-9;       // periodic closure of a torus grid
  double base_locus = 1e-12;   // both pencil monomials below => base point
  double margin = 0.05;        // loop-to-singular-value chordal distance
  double eps_ambient = 1e-4;   // collision scan: ambient distance
  double eps_param = 0.1;      // collision scan: parameter (torus) distance
};

enum class ErrorKind { usage, infeasible, numeric, validation };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail_usage(const std::string& m) { throw Error(ErrorKind::usage, m); }
[[noreturn]] inline void fail_infeasible(const std::string& m) { throw Error(ErrorKind::infeasible, m); }
[[noreturn]] inline void fail_numeric(const std::string& m) { throw Error(ErrorKind::numeric, m); }
[[noreturn]] inline void fail_validation(const std::string& m) { throw Error(ErrorKind::validation, m); }

// Number of worker threads: LAGRANGE_FORGE_THREADS if set, else hardware.
int worker_thread_count();

// Static partition of [0, n); results must be written to preallocated slots
// so the outcome does not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace lagforge
