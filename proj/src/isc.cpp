#include "cspath/isc.hpp"

#include <algorithm>
#include <cmath>

#include "cspath/errors.hpp"
#include "cspath/value.hpp"

namespace cspath {

namespace {

// Discrete space-time norm: time-weighted (trapezoid weights) 2-norm over
// the mesh values.
double spacetime_norm(const CanonicalPath& p) {
  const int m = p.mesh.m();
  double s = 0;
  for (int i = 0; i < m; ++i) {
    double w = 0;
    if (i > 0) w += 0.5 * (p.mesh.points(i) - p.mesh.points(i - 1));
    if (i + 1 < m) w += 0.5 * (p.mesh.points(i + 1) - p.mesh.points(i));
    s += w * p.values.col(i).squaredNorm();
  }
  return std::sqrt(s);
}

BvpSettings bvp_settings_of(const IscSettings& s) {
  BvpSettings b;
  b.tol = s.tol_bvp;
  b.max_iter = s.bvp_max_iter;
  return b;
}

}  // namespace

PathProblem setup_path_problem(const SystemState& target, const IscSettings& settings) {
  PathProblem pp;
  pp.proj = compute_projection(target, settings.c_T);
  if (!pp.proj.has_spp)
    throw ProjectionMismatch("target CSS has defect " + std::to_string(pp.proj.defect) +
                             "; paths require the saddle-point property");
  pp.T = settings.T > 0 ? settings.T : pp.proj.suggested_T;
  pp.mesh = make_graded_mesh(pp.T, std::max(2, settings.m), settings.grading);
  return pp;
}

CanonicalPath constant_path(const SystemState& css, const TimeMesh& mesh) {
  CanonicalPath p;
  p.mesh = mesh;
  p.values = css.u.replicate(1, mesh.m());
  p.alpha = 0.0;
  p.converged = true;
  p.max_residual = 0.0;
  return p;
}

IscResult iscnat(const SystemState& start, const SystemState& target,
                 const IscSettings& settings) {
  return iscnat_profile(Eigen::VectorXd(start.states()), target, settings);
}

IscResult iscnat_profile(const Eigen::VectorXd& v0, const SystemState& target,
                         const IscSettings& settings) {
  const PathProblem pp = setup_path_problem(target, settings);
  const BvpSettings bset = bvp_settings_of(settings);
  const int n_ic = target.model->n_states() * target.n();
  if (v0.size() != n_ic) throw DimensionError("iscnat: v0 has wrong length");
  const Eigen::VectorXd vhat = target.u.head(n_ic);

  IscResult res;
  res.T = pp.T;
  CanonicalPath prev = constant_path(target, pp.mesh);
  prev.value = path_value(prev, target);
  CanonicalPath prev_prev;
  bool have_two = false;
  double alpha_prev = 0.0;

  BvpBc bc;
  bc.u_hat = target.u;
  bc.psi = pp.proj.psi;

  bool any_requested_done = false;
  for (double alpha : settings.alvin) {
    if (alpha == 0.0) {
      res.alv.push_back(0.0);
      res.vv.push_back(prev.value);
      if (settings.retain_history) res.history.push_back(prev);
      res.last_path = prev;
      any_requested_done = true;
      continue;
    }
    bc.v0 = alpha * v0 + (1.0 - alpha) * vhat;
    CanonicalPath guess = prev;
    guess.alpha = alpha;
    if (settings.msw == 1 && have_two) {
      CanonicalPath tau = prev;
      tau.values -= prev_prev.values;
      const double nrm = spacetime_norm(tau);
      if (nrm > 0) guess.values = prev.values + ((alpha - alpha_prev) / nrm) * tau.values;
    }
    try {
      BvpResult sol = solve_bvp(target, bc, guess, bset);
      sol.path.alpha = alpha;
      sol.path.value = path_value(sol.path, target);
      if (!sol.terminal_close)
        res.warnings.push_back("path at alpha " + std::to_string(alpha) +
                               " ends far from the target CSS");
      prev_prev = prev;
      have_two = true;
      alpha_prev = alpha;
      prev = sol.path;
      res.alv.push_back(alpha);
      res.vv.push_back(sol.path.value);
      res.last_path = sol.path;
      if (settings.retain_history) res.history.push_back(sol.path);
      any_requested_done = true;
    } catch (const PathFailure& pf) {
      if (!any_requested_done) throw;  // no progress at all
      res.warnings.push_back("continuation stopped at alpha " + std::to_string(alpha) + ": " +
                             pf.what());
      break;
    }
  }
  if (res.last_path.values.size() == 0) res.last_path = prev;
  return res;
}

IscResult iscarc(const SystemState& start, const SystemState& target,
                 const std::optional<IscResult::Resume>& resume,
                 const IscSettings& settings) {
  return iscarc_profile(Eigen::VectorXd(start.states()), target, resume, settings);
}

IscResult iscarc_profile(const Eigen::VectorXd& v0, const SystemState& target,
                         const std::optional<IscResult::Resume>& resume,
                         const IscSettings& settings) {
  IscSettings eff = settings;
  if (resume && resume->T > 0) eff.T = resume->T;  // keep the mesh consistent on resume
  const PathProblem pp = setup_path_problem(target, eff);
  const BvpSettings bset = bvp_settings_of(settings);
  const int n_ic = target.model->n_states() * target.n();
  if (v0.size() != n_ic) throw DimensionError("iscarc: v0 has wrong length");

  IscResult res;
  res.T = pp.T;

  CanonicalPath cur, prev;
  bool have_prev = false;
  double sig = settings.sig;
  if (resume) {
    cur = resume->esol;
    prev = resume->prev;
    have_prev = resume->has_prev;
    sig = resume->sig;
  } else {
    cur = constant_path(target, pp.mesh);
    cur.value = path_value(cur, target);
  }

  BvpBc bc;
  bc.extended = true;
  bc.u_hat = target.u;
  bc.psi = pp.proj.psi;
  bc.v0 = v0;

  const double xi = settings.xi_arc;
  int steps = 0;
  double dalpha_prev = std::numeric_limits<double>::quiet_NaN();
  while (steps < settings.n_steps) {
    // secant for the arclength row (t = 0 slices) and the predictor
    Eigen::VectorXd s_vec = Eigen::VectorXd::Zero(cur.values.rows());
    double s_alpha = 1.0;
    CanonicalPath guess = cur;
    if (have_prev) {
      Eigen::VectorXd d0 = cur.values.col(0) - prev.values.col(0);
      const double d0n = d0.norm();
      if (d0n > 0) s_vec = (xi / d0n) * d0;
      s_alpha = 1.0 - xi;
      const double pairn = std::sqrt(s_vec.squaredNorm() + s_alpha * s_alpha);
      s_vec /= pairn;
      s_alpha /= pairn;

      CanonicalPath tau = cur;
      tau.values -= prev.values;
      const double taun = spacetime_norm(tau);
      if (taun > 0) guess.values = cur.values + (sig * xi / taun) * tau.values;
      guess.alpha = cur.alpha + sig * (1.0 - xi);
    } else {
      guess.alpha = cur.alpha + sig;
    }
    bc.arc_s = s_vec;
    bc.arc_s_alpha = s_alpha;
    bc.arc_sigma = sig;
    bc.u_prev0 = cur.values.col(0);
    bc.alpha_prev = cur.alpha;

    try {
      BvpResult sol = solve_bvp(target, bc, guess, bset);
      sol.path.value = path_value(sol.path, target);
      const double dalpha = sol.path.alpha - cur.alpha;
      if (std::isfinite(dalpha_prev) && dalpha * dalpha_prev < 0 && !res.fold_detected) {
        res.fold_detected = true;
        res.fold_alpha = cur.alpha;
      }
      dalpha_prev = dalpha;
      prev = cur;
      have_prev = true;
      cur = sol.path;
      res.alv.push_back(cur.alpha);
      res.vv.push_back(cur.value);
      res.last_path = cur;
      if (settings.retain_history) res.history.push_back(cur);
      ++steps;
      if (sol.newton_iters <= 4) sig = std::min(sig * 1.2, settings.sig_max);
      if (cur.alpha > 1.0 + settings.alpha_margin || cur.alpha < 0.0) break;
    } catch (const PathFailure&) {
      sig *= 0.5;
      if (sig < settings.sig_min) {
        res.warnings.push_back("arc continuation stalled at sigma below sig_min");
        break;
      }
    }
  }
  IscResult::Resume r;
  r.esol = cur;
  r.prev = prev;
  r.has_prev = have_prev;
  r.sig = sig;
  r.T = pp.T;
  res.resume = r;
  return res;
}

CanonicalPath correct_at_alpha(const CanonicalPath& near_path, double alpha_target,
                               const Eigen::VectorXd& v0, const SystemState& target,
                               const IscSettings& settings) {
  IscSettings eff = settings;
  eff.T = near_path.mesh.T();  // keep the stored path's mesh
  const Projection proj = compute_projection(target, settings.c_T);
  if (!proj.has_spp)
    throw ProjectionMismatch("target CSS lacks the saddle-point property");
  const int n_ic = target.model->n_states() * target.n();
  BvpBc bc;
  bc.u_hat = target.u;
  bc.psi = proj.psi;
  bc.v0 = alpha_target * v0 + (1.0 - alpha_target) * target.u.head(n_ic);
  CanonicalPath guess = near_path;
  guess.alpha = alpha_target;
  BvpResult sol = solve_bvp(target, bc, guess, bvp_settings_of(settings));
  sol.path.alpha = alpha_target;
  sol.path.value = path_value(sol.path, target);
  return sol.path;
}

}  // namespace cspath
