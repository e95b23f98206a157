#include "cspath/continuation.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>

#include "cspath/errors.hpp"
#include "cspath/spectral.hpp"

namespace cspath {

std::string to_string(PointType t) {
  switch (t) {
    case PointType::regular: return "regular";
    case PointType::bifurcation: return "bifurcation";
    case PointType::fold: return "fold";
    case PointType::user_target: return "user-target";
  }
  return "regular";
}

double xi_dot(double xi, const Eigen::VectorXd& du1, double dl1, const Eigen::VectorXd& du2,
              double dl2) {
  return xi * du1.dot(du2) + (1.0 - xi) * dl1 * dl2;
}

namespace {

double inf_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

double residual_of(const SystemState& s) {
  try {
    return inf_norm(assemble_G(s));
  } catch (const EvaluationError&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace

NewtonReport newton_correct(SystemState& state, const NewtonOptions& opt) {
  NewtonReport rep;
  double res = residual_of(state);
  rep.residuals.push_back(res);
  if (!std::isfinite(res))
    throw NewtonFailure("Newton start state not evaluable", res);
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  while (res > opt.tol) {
    if (rep.iters >= opt.max_iter)
      throw NewtonFailure("Newton did not converge in " + std::to_string(opt.max_iter) +
                              " iterations",
                          res);
    const Eigen::VectorXd g = assemble_G(state);
    lu.compute(assemble_G_jac(state));
    if (lu.info() != Eigen::Success)
      throw NewtonFailure("Jacobian factorization failed", res);
    const Eigen::VectorXd step = lu.solve(-g);
    double damp = 1.0;
    SystemState trial = state;
    double new_res = std::numeric_limits<double>::infinity();
    for (int h = 0; h <= opt.max_halvings; ++h) {
      trial.u = state.u + damp * step;
      new_res = residual_of(trial);
      if (new_res < res) break;
      damp *= 0.5;
    }
    if (!(new_res < res))
      throw NewtonFailure("Newton line search stalled", res);
    state = trial;
    res = new_res;
    rep.residuals.push_back(res);
    ++rep.iters;
  }
  return rep;
}

namespace {

// One bordered Newton solve: J dz = rhs coupled with the arclength row,
// via a Schur complement on the parameter column (one LU of J per step).
struct ArclengthCorrector {
  const Tangent& tangent;
  Eigen::VectorXd u_pred;
  double lam_pred;
  double xi;
  NewtonOptions opt;

  // Returns iterations on success, -1 on failure. State is modified.
  int run(SystemState& state) const {
    auto arc_residual = [&](const SystemState& s) {
      return xi * tangent.du.dot(s.u - u_pred) +
             (1.0 - xi) * tangent.dlam * (s.lam() - lam_pred);
    };
    auto total_res = [&](const SystemState& s) {
      const double rg = residual_of(s);
      return std::isfinite(rg) ? std::max(rg, std::abs(arc_residual(s)))
                               : std::numeric_limits<double>::infinity();
    };
    double res = total_res(state);
    if (!std::isfinite(res)) return -1;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    int iters = 0;
    while (res > opt.tol) {
      if (iters >= opt.max_iter) return -1;
      Eigen::VectorXd g, glam;
      Eigen::SparseMatrix<double> J;
      try {
        g = assemble_G(state);
        glam = assemble_G_dparam(state);
        J = assemble_G_jac(state);
      } catch (const EvaluationError&) {
        return -1;
      }
      lu.compute(J);
      if (lu.info() != Eigen::Success) return -1;
      const Eigen::VectorXd z1 = lu.solve(g);
      const Eigen::VectorXd z2 = lu.solve(glam);
      const double a = arc_residual(state);
      const double denom = (1.0 - xi) * tangent.dlam - xi * tangent.du.dot(z2);
      if (denom == 0.0 || !std::isfinite(denom)) return -1;
      const double dlam = (xi * tangent.du.dot(z1) - a) / denom;
      const Eigen::VectorXd du = -z1 - dlam * z2;
      double damp = 1.0;
      SystemState trial = state;
      double new_res = std::numeric_limits<double>::infinity();
      for (int h = 0; h <= opt.max_halvings; ++h) {
        trial.u = state.u + damp * du;
        trial.set_lam(state.lam() + damp * dlam);
        new_res = total_res(trial);
        if (new_res < res) break;
        damp *= 0.5;
      }
      if (!(new_res < res)) return -1;
      state = trial;
      res = new_res;
      ++iters;
    }
    return iters;
  }
};

// New tangent from the bordered system with the previous tangent as border.
bool compute_tangent(const SystemState& state, const Tangent& prev, double xi, Tangent& out) {
  Eigen::VectorXd glam;
  Eigen::SparseMatrix<double> J;
  try {
    glam = assemble_G_dparam(state);
    J = assemble_G_jac(state);
  } catch (const EvaluationError&) {
    return false;
  }
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(J);
  if (lu.info() != Eigen::Success) return false;
  const Eigen::VectorXd z2 = lu.solve(glam);
  const double denom = (1.0 - xi) * prev.dlam - xi * prev.du.dot(z2);
  if (denom == 0.0 || !std::isfinite(denom)) return false;
  out.dlam = 1.0 / denom;
  out.du = -out.dlam * z2;
  const double n2 = xi_dot(xi, out.du, out.dlam, out.du, out.dlam);
  if (!(n2 > 0) || !std::isfinite(n2)) return false;
  const double s = 1.0 / std::sqrt(n2);
  out.du *= s;
  out.dlam *= s;
  if (xi_dot(xi, out.du, out.dlam, prev.du, prev.dlam) < 0) {
    out.du = -out.du;
    out.dlam = -out.dlam;
  }
  return true;
}

BranchRecord make_record(const SystemState& s, int index, PointType type, int n_unstable) {
  BranchRecord r;
  r.index = index;
  r.point_type = type;
  r.n_unstable = n_unstable;
  r.param = s.lam();
  r.l2norm = l2_norm(s);
  r.j_ca = j_ca(s);
  const double rho = s.rho();
  r.j_disc = (rho != 0.0) ? r.j_ca / rho : std::numeric_limits<double>::quiet_NaN();
  return r;
}

// Corrected branch point at fraction theta of the secant between two
// consecutive points; slice plane normal to the secant.
bool correct_at_fraction(const SystemState& s0, const SystemState& s1, double theta, double xi,
                         const NewtonOptions& nopt, const Tangent& secant, SystemState& out) {
  out = s0;
  out.u = (1.0 - theta) * s0.u + theta * s1.u;
  out.set_lam((1.0 - theta) * s0.lam() + theta * s1.lam());
  ArclengthCorrector corr{secant, out.u, out.lam(), xi, nopt};
  return corr.run(out) >= 0;
}

// Kernel direction at a localized singular point: right eigenvector of
// (G_u, M) with the smallest |Lambda|; also reports the runner-up modulus.
struct KernelInfo {
  Eigen::VectorXd phi;
  double lambda_abs = 0;
  double second_abs = 0;
};

KernelInfo kernel_direction(const SystemState& s) {
  const AdjointEig re = right_eig(s);
  int best = 0, second = -1;
  for (int j = 1; j < re.lambda.size(); ++j)
    if (std::abs(re.lambda(j)) < std::abs(re.lambda(best))) best = j;
  for (int j = 0; j < re.lambda.size(); ++j) {
    if (j == best) continue;
    if (second < 0 || std::abs(re.lambda(j)) < std::abs(re.lambda(second))) second = j;
  }
  KernelInfo k;
  k.lambda_abs = std::abs(re.lambda(best));
  k.second_abs = second >= 0 ? std::abs(re.lambda(second)) : 0;
  // at a real simple crossing the vector is real up to phase
  const Eigen::VectorXcd v = re.phi.col(best);
  if (v.real().norm() >= v.imag().norm())
    k.phi = v.real();
  else
    k.phi = v.imag();
  k.phi.normalize();
  return k;
}

}  // namespace

BranchRun continue_branch(const SystemState& start, std::optional<Tangent> tangent_in,
                          const ContinuationSettings& settings) {
  BranchRun run;
  SystemState state = start;
  const double xi = settings.xi > 0 ? settings.xi : 1.0 / state.dim();
  NewtonOptions nopt{settings.newton_tol, settings.newton_max_iter, 10};

  newton_correct(state, nopt);  // no-op on an already converged CSS

  double ds = std::abs(settings.ds_init);
  Tangent tangent;
  if (tangent_in) {
    tangent = *tangent_in;
    if (settings.ds_init < 0) {
      tangent.du = -tangent.du;
      tangent.dlam = -tangent.dlam;
    }
  } else {
    tangent.du = Eigen::VectorXd::Zero(state.dim());
    tangent.dlam = (settings.ds_init < 0 ? -1.0 : 1.0);
  }
  {
    const double n2 = xi_dot(xi, tangent.du, tangent.dlam, tangent.du, tangent.dlam);
    const double s = 1.0 / std::sqrt(n2);
    tangent.du *= s;
    tangent.dlam *= s;
  }

  int count = settings.bifcheck ? count_unstable(state) : -1;
  int index = 0;
  run.points.push_back({make_record(state, index++, PointType::regular, count), state, tangent});

  if (state.lam() < settings.lam_min || state.lam() > settings.lam_max) {
    run.stop_reason = "start outside parameter window";
    return run;
  }

  auto emit_usrlam = [&](const SystemState& s0, const SystemState& s1) {
    const double l0 = s0.lam(), l1 = s1.lam();
    std::vector<double> hits;
    for (double t : settings.usrlam) {
      const bool inside = (l0 < t && t <= l1) || (l1 <= t && t < l0);
      if (inside) hits.push_back(t);
    }
    std::sort(hits.begin(), hits.end(), [&](double a, double b) {
      return std::abs(a - l0) < std::abs(b - l0);
    });
    for (double t : hits) {
      SystemState hit = s0;
      const double th = (t - l0) / (l1 - l0);
      hit.u = (1.0 - th) * s0.u + th * s1.u;
      hit.set_lam(t);
      try {
        newton_correct(hit, nopt);
      } catch (const NewtonFailure&) {
        run.warnings.push_back("could not land on usrlam target " + std::to_string(t));
        continue;
      }
      const int c = settings.bifcheck ? count_unstable(hit) : -1;
      run.points.push_back(
          {make_record(hit, index++, PointType::user_target, c), hit, tangent});
    }
  };

  auto localize_events = [&](const SystemState& s0, const Tangent& t0, const SystemState& s1,
                             const Tangent& t1, int c0, int c1) {
    Tangent secant;
    secant.du = s1.u - s0.u;
    secant.dlam = s1.lam() - s0.lam();
    const double n2 = xi_dot(xi, secant.du, secant.dlam, secant.du, secant.dlam);
    if (!(n2 > 0)) return;
    secant.du /= std::sqrt(n2);
    secant.dlam /= std::sqrt(n2);
    const bool dlam_flip = (t0.dlam > 0) != (t1.dlam > 0);

    SystemState lo = s0, hi = s1;
    int count_lo = c0;
    int events = 0;
    while (count_lo != c1 && events < 8) {
      SystemState blo = lo, bhi = hi;
      int cb_hi = c1;
      bool approx = false;
      for (int it = 0; it < 60; ++it) {
        if (std::abs(bhi.lam() - blo.lam()) <= settings.bif_param_tol &&
            xi_dot(xi, bhi.u - blo.u, 0, bhi.u - blo.u, 0) <
                settings.bif_param_tol * settings.bif_param_tol)
          break;
        SystemState mid;
        if (!correct_at_fraction(blo, bhi, 0.5, xi, nopt, secant, mid)) {
          approx = true;
          break;
        }
        // express mid as new lo or hi of the bracket
        const int cm = count_unstable(mid);
        if (cm == count_lo) {
          blo = mid;
        } else {
          bhi = mid;
          cb_hi = cm;
        }
      }
      // classify at the first point past the crossing
      PointType type = PointType::bifurcation;
      const KernelInfo k = kernel_direction(bhi);
      const double du_norm = secant.du.norm();
      const double cosang = du_norm > 0 ? std::abs(k.phi.dot(secant.du)) / du_norm : 0.0;
      if (dlam_flip && cosang > 0.5) type = PointType::fold;
      run.points.push_back(
          {make_record(bhi, index++, type, cb_hi), bhi, secant, approx});
      lo = bhi;
      count_lo = cb_hi;
      ++events;
    }
  };

  int accepted = 0;
  while (accepted < settings.max_steps) {
    SystemState trial = state;
    trial.u = state.u + ds * tangent.du;
    trial.set_lam(state.lam() + ds * tangent.dlam);
    ArclengthCorrector corr{tangent, trial.u, trial.lam(), xi, nopt};
    const int iters = corr.run(trial);
    if (iters < 0) {
      ds *= 0.5;
      if (ds < settings.ds_min) {
        run.stop_reason = "corrector failed at minimal stepsize";
        return run;
      }
      continue;
    }
    ++accepted;

    Tangent t_new;
    if (!compute_tangent(trial, tangent, xi, t_new)) t_new = tangent;

    // window crossing: land exactly on the boundary and stop
    if (trial.lam() > settings.lam_max || trial.lam() < settings.lam_min) {
      const double bound = trial.lam() > settings.lam_max ? settings.lam_max : settings.lam_min;
      SystemState edge = state;
      const double l0 = state.lam();
      const double th = (bound - l0) / (trial.lam() - l0);
      edge.u = (1.0 - th) * state.u + th * trial.u;
      edge.set_lam(bound);
      bool edge_ok = true;
      try {
        newton_correct(edge, nopt);
      } catch (const NewtonFailure&) {
        edge_ok = false;
      }
      if (edge_ok) {
        emit_usrlam(state, edge);
        const int c = settings.bifcheck ? count_unstable(edge) : -1;
        run.points.push_back({make_record(edge, index++, PointType::regular, c), edge, t_new});
      }
      run.stop_reason = trial.lam() > settings.lam_max ? "lam_max reached" : "lam_min reached";
      return run;
    }

    emit_usrlam(state, trial);

    int c_new = count;
    if (settings.bifcheck) {
      c_new = count_unstable(trial);
      if (c_new != count) localize_events(state, tangent, trial, t_new, count, c_new);
    }

    run.points.push_back({make_record(trial, index++, PointType::regular, c_new), trial, t_new});

    state = trial;
    tangent = t_new;
    count = c_new;
    if (iters <= 3) ds = std::min(ds * 1.3, settings.ds_max);
  }
  run.stop_reason = "max_steps reached";
  return run;
}

std::pair<SystemState, Tangent> branch_switch(const SystemState& bif_point, int direction,
                                              double ds,
                                              const ContinuationSettings& settings) {
  SystemState state = bif_point;
  const double xi = settings.xi > 0 ? settings.xi : 1.0 / state.dim();
  NewtonOptions nopt{settings.newton_tol, settings.newton_max_iter, 10};

  const KernelInfo k = kernel_direction(state);
  const double scale = std::max(1.0, std::abs(k.second_abs));
  if (k.lambda_abs > 1e-3 * scale)
    throw NewtonFailure("branch_switch: point has no near-singular direction", k.lambda_abs);
  if (k.second_abs < 10.0 * k.lambda_abs)
    throw NewtonFailure(
        "branch_switch: kernel dimension appears to exceed 1 (multiple bifurcation)",
        k.second_abs);

  Tangent tangent;
  tangent.du = k.phi / (std::sqrt(xi) * k.phi.norm());
  tangent.dlam = 0.0;
  if (direction < 0) tangent.du = -tangent.du;

  SystemState trial = state;
  trial.u = state.u + ds * tangent.du;
  ArclengthCorrector corr{tangent, trial.u, trial.lam(), xi, nopt};
  if (corr.run(trial) < 0)
    throw NewtonFailure("branch_switch: corrector failed on the bifurcating branch", ds);

  Tangent t_new;
  if (!compute_tangent(trial, tangent, xi, t_new)) t_new = tangent;
  return {trial, t_new};
}

}  // namespace cspath
