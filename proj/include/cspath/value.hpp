#pragma once

#include <string>
#include <vector>

#include "cspath/isc.hpp"
#include "cspath/tbvp.hpp"

namespace cspath {

/// Discounted objective of a path: integral of e^{-rho t} J_ca(u(t)) over
/// the path mesh, with J_ca piecewise linear and the exponential weight
/// integrated exactly per interval (exact for constant paths, plain
/// trapezoid at rho = 0).
double path_value(const CanonicalPath& path, const SystemState& ref, double rho);
double path_value(const CanonicalPath& path, const SystemState& ref);  // rho from ref

/// (J_ca, J_ca / rho) of a converged CSS. Throws on rho = 0.
std::pair<double, double> css_value(const SystemState& state);

struct SkibaSettings {
  IscSettings isc;                                     // shared path/solver settings
  std::vector<double> b_alvin = {0.25, 0.5, 0.75, 1};  // homotopy schedule for B-paths
  double skiba_tol = 0.05;
  double alpha_bracket_tol = 1e-3;
  int max_bisect = 30;
};

struct SkibaSample {
  double alpha = 0;
  double j_a = 0;
  double j_b = 0;
  bool ok = false;
};

struct SkibaResult {
  bool found = false;
  double alpha_star = std::numeric_limits<double>::quiet_NaN();
  double value_gap = std::numeric_limits<double>::quiet_NaN();
  std::vector<SkibaSample> grid;
  CanonicalPath path_a, path_b;  // the two near-equal-value paths at alpha_star
  std::vector<std::string> warnings;
};

/// Scan alpha on the segment between the start profile and target_a's
/// states: paths to target_a give J_A(alpha); from each path's t = 0 slice
/// a second path to target_b gives J_B(alpha). A sign change of J_A - J_B
/// is refined by bisection on alpha down to |J_A - J_B| <= skiba_tol or an
/// alpha bracket of alpha_bracket_tol; alpha_star interpolates the final
/// bracket. No sign change is reported as found = false, not an error.
SkibaResult skiba_scan(const SystemState& start, const SystemState& target_a,
                       const SystemState& target_b, const std::vector<double>& alpha_grid,
                       const SkibaSettings& settings);

}  // namespace cspath
