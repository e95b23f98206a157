#include "cspath/value.hpp"

#include <algorithm>
#include <cmath>

#include "cspath/errors.hpp"

namespace cspath {

namespace {

// Weights for the exact integral of e^{-rho(t0+s)} * linear(s) over [0, h]:
// integral = e^{-rho t0} * (a*w0 + b*w1) with endpoint values a, b.
void product_weights(double rho, double h, double& w0, double& w1) {
  const double z = rho * h;
  if (std::abs(z) < 1e-4) {
    w0 = h * (0.5 - z / 6.0 + z * z / 24.0 - z * z * z / 120.0);
    w1 = h * (0.5 - z / 3.0 + z * z / 8.0 - z * z * z / 30.0);
  } else {
    const double ez = std::exp(-z);
    w0 = h * (z - 1.0 + ez) / (z * z);
    w1 = h * (1.0 - ez * (1.0 + z)) / (z * z);
  }
}

}  // namespace

double path_value(const CanonicalPath& path, const SystemState& ref, double rho) {
  const int m = path.mesh.m();
  if (path.values.cols() != m || path.values.rows() != ref.dim())
    throw DimensionError("path_value: path dimensions inconsistent with reference state");
  Eigen::VectorXd jca(m);
  SystemState s = ref;
  for (int i = 0; i < m; ++i) {
    s.u = path.values.col(i);
    try {
      jca(i) = j_ca(s);
    } catch (const EvaluationError& e) {
      throw EvaluationError(std::string(e.what()) + " at time index " + std::to_string(i));
    }
  }
  double J = 0;
  for (int i = 0; i + 1 < m; ++i) {
    const double t0 = path.mesh.points(i);
    const double h = path.mesh.points(i + 1) - t0;
    double w0, w1;
    product_weights(rho, h, w0, w1);
    J += std::exp(-rho * t0) * (jca(i) * w0 + jca(i + 1) * w1);
  }
  return J;
}

double path_value(const CanonicalPath& path, const SystemState& ref) {
  return path_value(path, ref, ref.rho());
}

std::pair<double, double> css_value(const SystemState& state) {
  const double jca = j_ca(state);
  const double rho = state.rho();
  if (rho == 0.0)
    throw EvaluationError("css_value: discounted value undefined for rho = 0");
  return {jca, jca / rho};
}

namespace {

// One B-path solve at a given initial profile: try a single fixed-alpha
// solve from the warm-start guess, fall back to the full homotopy schedule.
bool solve_b_path(const Eigen::VectorXd& profile, const SystemState& target_b,
                  const SkibaSettings& settings, const CanonicalPath* warm,
                  CanonicalPath& out) {
  if (warm && warm->values.size() > 0) {
    try {
      out = correct_at_alpha(*warm, 1.0, profile, target_b, settings.isc);
      return true;
    } catch (const std::exception&) {
      // fall through to the homotopy
    }
  }
  IscSettings nat = settings.isc;
  nat.alvin = settings.b_alvin;
  nat.msw = 0;
  nat.retain_history = false;
  try {
    IscResult r = iscnat_profile(profile, target_b, nat);
    if (!r.alv.empty() && r.alv.back() == 1.0) {
      out = r.last_path;
      return true;
    }
  } catch (const std::exception&) {
  }
  return false;
}

}  // namespace

SkibaResult skiba_scan(const SystemState& start, const SystemState& target_a,
                       const SystemState& target_b, const std::vector<double>& alpha_grid,
                       const SkibaSettings& settings_in) {
  SkibaSettings settings = settings_in;
  if (settings.isc.T <= 0) {
    // both path families must be valued over one common horizon, otherwise
    // the missing e^{-rho T} tail of the shorter run biases J_A - J_B
    const double ta = setup_path_problem(target_a, settings.isc).T;
    const double tb = setup_path_problem(target_b, settings.isc).T;
    settings.isc.T = std::max(ta, tb);
  }
  SkibaResult res;
  const int n_ic = target_a.model->n_states() * target_a.n();
  const Eigen::VectorXd v_start = start.u.head(n_ic);
  const Eigen::VectorXd vhat_a = target_a.u.head(n_ic);
  auto profile_at = [&](double alpha) -> Eigen::VectorXd {
    return alpha * v_start + (1.0 - alpha) * vhat_a;
  };

  // A-paths over the grid (retained for warm starts)
  IscSettings a_set = settings.isc;
  a_set.alvin = alpha_grid;
  a_set.retain_history = true;
  IscResult a_run = iscnat_profile(v_start, target_a, a_set);
  for (const auto& w : a_run.warnings) res.warnings.push_back(w);

  std::vector<CanonicalPath> b_paths;
  for (size_t i = 0; i < a_run.alv.size(); ++i) {
    SkibaSample sample;
    sample.alpha = a_run.alv[i];
    sample.j_a = a_run.vv[i];
    CanonicalPath bp;
    const CanonicalPath* warm = b_paths.empty() ? nullptr : &b_paths.back();
    if (solve_b_path(profile_at(sample.alpha), target_b, settings, warm, bp)) {
      sample.j_b = bp.value;
      sample.ok = true;
      b_paths.push_back(bp);
    } else {
      res.warnings.push_back("no path to the second target at alpha " +
                             std::to_string(sample.alpha));
      if (!b_paths.empty()) b_paths.push_back(b_paths.back());
      else b_paths.emplace_back();
    }
    res.grid.push_back(sample);
  }
  for (size_t i = a_run.alv.size(); i < alpha_grid.size(); ++i)
    res.warnings.push_back("grid point alpha " + std::to_string(alpha_grid[i]) +
                           " unreachable toward the first target");

  // first sign change of J_A - J_B between consecutive valid samples
  int lo = -1;
  for (size_t i = 0; i + 1 < res.grid.size(); ++i) {
    if (!res.grid[i].ok || !res.grid[i + 1].ok) continue;
    const double d0 = res.grid[i].j_a - res.grid[i].j_b;
    const double d1 = res.grid[i + 1].j_a - res.grid[i + 1].j_b;
    if (d0 == 0.0 || d0 * d1 < 0) {
      lo = static_cast<int>(i);
      break;
    }
  }
  if (lo < 0) return res;  // no crossing on the grid; not an error

  double al = res.grid[lo].alpha, ar = res.grid[lo + 1].alpha;
  double dl = res.grid[lo].j_a - res.grid[lo].j_b;
  double dr = res.grid[lo + 1].j_a - res.grid[lo + 1].j_b;
  CanonicalPath path_a_l = a_run.history[lo], path_a_r = a_run.history[lo + 1];
  CanonicalPath path_b_l = b_paths[lo], path_b_r = b_paths[lo + 1];

  double gap_mid = std::numeric_limits<double>::infinity();
  for (int it = 0; it < settings.max_bisect; ++it) {
    if (std::abs(dl) <= settings.skiba_tol || (ar - al) <= settings.alpha_bracket_tol) break;
    const double mid = 0.5 * (al + ar);
    CanonicalPath pa, pb;
    try {
      pa = correct_at_alpha(std::abs(mid - al) < std::abs(ar - mid) ? path_a_l : path_a_r,
                            mid, v_start, target_a, settings.isc);
    } catch (const std::exception& e) {
      res.warnings.push_back("A-path failed during bisection: " + std::string(e.what()));
      break;
    }
    const CanonicalPath* warm =
        std::abs(mid - al) < std::abs(ar - mid) ? &path_b_l : &path_b_r;
    if (!solve_b_path(profile_at(mid), target_b, settings, warm, pb)) {
      res.warnings.push_back("B-path failed during bisection at alpha " + std::to_string(mid));
      break;
    }
    const double dm = pa.value - pb.value;
    gap_mid = std::abs(dm);
    SkibaSample sm{mid, pa.value, pb.value, true};
    res.grid.push_back(sm);
    if ((dm < 0) == (dl < 0)) {
      al = mid;
      dl = dm;
      path_a_l = pa;
      path_b_l = pb;
    } else {
      ar = mid;
      dr = dm;
      path_a_r = pa;
      path_b_r = pb;
    }
    if (gap_mid <= settings.skiba_tol) break;
  }

  // report: linear interpolation of the final bracket
  res.found = true;
  res.alpha_star = (dr != dl) ? al - dl * (ar - al) / (dr - dl) : 0.5 * (al + ar);
  CanonicalPath pa, pb;
  bool ok_star = false;
  try {
    pa = correct_at_alpha(path_a_l, res.alpha_star, v_start, target_a, settings.isc);
    ok_star = solve_b_path(profile_at(res.alpha_star), target_b, settings, &path_b_l, pb);
  } catch (const std::exception&) {
  }
  if (ok_star) {
    res.path_a = pa;
    res.path_b = pb;
    res.value_gap = std::abs(pa.value - pb.value);
    res.grid.push_back({res.alpha_star, pa.value, pb.value, true});
  } else {
    res.path_a = path_a_l;
    res.path_b = path_b_l;
    res.value_gap = std::min(std::abs(dl), std::abs(dr));
    res.warnings.push_back("paths at alpha_star re-solve failed; reporting bracket endpoint");
  }
  // keep grid sorted by alpha for reporting
  std::sort(res.grid.begin(), res.grid.end(),
            [](const SkibaSample& a, const SkibaSample& b) { return a.alpha < b.alpha; });
  return res;
}

}  // namespace cspath
