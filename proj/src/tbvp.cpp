#include "cspath/tbvp.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <vector>

#include "cspath/errors.hpp"

namespace cspath {

TimeMesh make_graded_mesh(double T, int m, double s) {
  if (!(T > 0)) throw ConfigError("make_graded_mesh: T must be positive");
  if (m < 2) throw ConfigError("make_graded_mesh: need at least 2 points");
  if (!(s >= 1.0)) throw ConfigError("make_graded_mesh: grading exponent must be >= 1");
  TimeMesh mesh;
  mesh.points.resize(m);
  for (int i = 0; i < m; ++i)
    mesh.points(i) = T * std::pow(static_cast<double>(i) / (m - 1), s);
  mesh.points(m - 1) = T;
  return mesh;
}

TimeMesh make_mesh_from_points(Eigen::VectorXd points) {
  if (points.size() < 2) throw ConfigError("time mesh needs at least 2 points");
  if (points(0) != 0.0) throw ConfigError("time mesh must start at t = 0");
  for (int i = 0; i + 1 < points.size(); ++i)
    if (!(points(i) < points(i + 1)))
      throw ConfigError("time mesh must be strictly increasing");
  TimeMesh mesh;
  mesh.points = std::move(points);
  return mesh;
}

namespace {

struct BvpShape {
  int d = 0;        // 2Nn
  int m = 0;        // time points
  int n_ic = 0;     // Nn
  int n_tc = 0;     // psi rows
  int n_unknown = 0;
  int n_rows = 0;
  bool extended = false;

  int col_u(int i) const { return i * d; }
  int col_alpha() const { return m * d; }
  int row_ic() const { return 0; }
  int row_colloc(int i) const { return n_ic + i * d; }
  int row_tc() const { return n_ic + (m - 1) * d; }
  int row_arc() const { return n_ic + (m - 1) * d + n_tc; }
};

BvpShape shape_of(const SystemState& ref, const BvpBc& bc, const CanonicalPath& guess) {
  BvpShape sh;
  sh.d = ref.dim();
  sh.m = guess.mesh.m();
  sh.n_ic = ref.model->n_states() * ref.n();
  sh.n_tc = static_cast<int>(bc.psi.rows());
  sh.extended = bc.extended;
  sh.n_unknown = sh.m * sh.d + (sh.extended ? 1 : 0);
  sh.n_rows = sh.n_ic + (sh.m - 1) * sh.d + sh.n_tc + (sh.extended ? 1 : 0);
  if (guess.values.rows() != sh.d || guess.values.cols() != sh.m)
    throw DimensionError("solve_bvp: guess dimensions do not match mesh/state");
  if (bc.v0.size() != sh.n_ic) throw DimensionError("solve_bvp: v0 has wrong length");
  if (bc.u_hat.size() != sh.d) throw DimensionError("solve_bvp: u_hat has wrong length");
  if (bc.psi.cols() != sh.d) throw DimensionError("solve_bvp: psi has wrong column count");
  if (sh.n_rows != sh.n_unknown)
    throw ProjectionMismatch(
        "terminal projection rows (" + std::to_string(sh.n_tc) +
        ") do not make the BVP square; target CSS lacks the saddle-point property");
  if (sh.extended) {
    if (bc.arc_s.size() != sh.d) throw DimensionError("solve_bvp: arc_s has wrong length");
    if (bc.u_prev0.size() != sh.d)
      throw DimensionError("solve_bvp: u_prev0 has wrong length");
  }
  return sh;
}

// Full residual; returns false when G is not evaluable on some column.
bool residual_vector(const SystemState& ref, const BvpBc& bc, const BvpShape& sh,
                     const TimeMesh& mesh, const Eigen::MatrixXd& U, double alpha,
                     const Eigen::SparseMatrix<double>& Mb, Eigen::VectorXd& R) {
  R.resize(sh.n_rows);
  SystemState s = ref;
  Eigen::MatrixXd G(sh.d, sh.m);
  try {
    for (int i = 0; i < sh.m; ++i) {
      s.u = U.col(i);
      G.col(i) = assemble_G(s);
    }
  } catch (const EvaluationError&) {
    return false;
  }
  Eigen::VectorXd v0 = bc.v0;
  if (sh.extended) v0 = alpha * bc.v0 + (1.0 - alpha) * bc.u_hat.head(sh.n_ic);
  R.segment(sh.row_ic(), sh.n_ic) = U.col(0).head(sh.n_ic) - v0;
  for (int i = 0; i + 1 < sh.m; ++i) {
    const double h = mesh.points(i + 1) - mesh.points(i);
    R.segment(sh.row_colloc(i), sh.d) =
        (Mb * (U.col(i + 1) - U.col(i))) / h + 0.5 * (G.col(i) + G.col(i + 1));
  }
  R.segment(sh.row_tc(), sh.n_tc) = bc.psi * (U.col(sh.m - 1) - bc.u_hat);
  if (sh.extended)
    R(sh.row_arc()) = bc.arc_s.dot(U.col(0) - bc.u_prev0) +
                      bc.arc_s_alpha * (alpha - bc.alpha_prev) - bc.arc_sigma;
  return true;
}

struct ResidualSplit {
  double colloc = std::numeric_limits<double>::infinity();
  double bcrows = std::numeric_limits<double>::infinity();
};

ResidualSplit split_residual(const BvpShape& sh, const Eigen::VectorXd& R) {
  ResidualSplit out;
  const int nc = (sh.m - 1) * sh.d;
  out.colloc = nc > 0 ? R.segment(sh.row_colloc(0), nc).cwiseAbs().maxCoeff() : 0.0;
  double b = R.segment(sh.row_ic(), sh.n_ic).cwiseAbs().maxCoeff();
  if (sh.n_tc > 0) b = std::max(b, R.segment(sh.row_tc(), sh.n_tc).cwiseAbs().maxCoeff());
  if (sh.extended) b = std::max(b, std::abs(R(sh.row_arc())));
  out.bcrows = b;
  return out;
}

}  // namespace

std::pair<double, double> bvp_residual(const SystemState& ref, const BvpBc& bc,
                                       const CanonicalPath& path) {
  const BvpShape sh = shape_of(ref, bc, path);
  const Eigen::SparseMatrix<double> Mb = block_mass(*ref.fem, ref.n_comps());
  Eigen::VectorXd R;
  if (!residual_vector(ref, bc, sh, path.mesh, path.values, path.alpha, Mb, R))
    return {std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity()};
  const ResidualSplit rs = split_residual(sh, R);
  return {rs.colloc, rs.bcrows};
}

BvpResult solve_bvp(const SystemState& ref, const BvpBc& bc, const CanonicalPath& guess,
                    const BvpSettings& settings) {
  const BvpShape sh = shape_of(ref, bc, guess);
  const TimeMesh& mesh = guess.mesh;
  const Eigen::SparseMatrix<double> Mb = block_mass(*ref.fem, ref.n_comps());

  Eigen::MatrixXd U = guess.values;
  double alpha = guess.alpha;

  auto scaled_ok = [&](const ResidualSplit& rs, const Eigen::MatrixXd& Uc) {
    const double scale = std::max(1.0, Uc.cwiseAbs().maxCoeff());
    return rs.colloc <= settings.tol * scale && rs.bcrows <= settings.tol;
  };
  auto merit = [&](const ResidualSplit& rs) { return std::max(rs.colloc, rs.bcrows); };

  auto fail = [&](const std::string& msg, double res) {
    auto last = std::make_shared<CanonicalPath>();
    last->mesh = mesh;
    last->values = U;
    last->alpha = alpha;
    last->converged = false;
    last->max_residual = res;
    throw PathFailure(msg, res, last);
  };

  Eigen::VectorXd R;
  if (!residual_vector(ref, bc, sh, mesh, U, alpha, Mb, R))
    fail("solve_bvp: initial guess not evaluable", std::numeric_limits<double>::infinity());
  ResidualSplit rs = split_residual(sh, R);

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  int iters = 0;
  while (!scaled_ok(rs, U)) {
    if (iters >= settings.max_iter)
      fail("solve_bvp: Newton did not converge", merit(rs));

    // Jacobian triplets
    std::vector<Eigen::Triplet<double>> trip;
    SystemState s = ref;
    std::vector<Eigen::SparseMatrix<double>> J(sh.m);
    try {
      for (int i = 0; i < sh.m; ++i) {
        s.u = U.col(i);
        J[i] = assemble_G_jac(s);
      }
    } catch (const EvaluationError&) {
      fail("solve_bvp: Jacobian not evaluable", merit(rs));
    }
    size_t nnz_guess = static_cast<size_t>(sh.n_ic) + 2 * sh.m * J[0].nonZeros() +
                       static_cast<size_t>(sh.n_tc) * sh.d + sh.d + 1;
    trip.reserve(nnz_guess);

    for (int r = 0; r < sh.n_ic; ++r)
      trip.emplace_back(sh.row_ic() + r, sh.col_u(0) + r, 1.0);
    if (sh.extended) {
      const Eigen::VectorXd dalpha = -(bc.v0 - bc.u_hat.head(sh.n_ic));
      for (int r = 0; r < sh.n_ic; ++r)
        trip.emplace_back(sh.row_ic() + r, sh.col_alpha(), dalpha(r));
    }
    for (int i = 0; i + 1 < sh.m; ++i) {
      const double h = mesh.points(i + 1) - mesh.points(i);
      const int row0 = sh.row_colloc(i);
      // -M/h + J(u_i)/2 on u_i
      for (int col = 0; col < Mb.outerSize(); ++col)
        for (Eigen::SparseMatrix<double>::InnerIterator it(Mb, col); it; ++it) {
          trip.emplace_back(row0 + static_cast<int>(it.row()), sh.col_u(i) + col,
                            -it.value() / h);
          trip.emplace_back(row0 + static_cast<int>(it.row()), sh.col_u(i + 1) + col,
                            it.value() / h);
        }
      for (int col = 0; col < J[i].outerSize(); ++col)
        for (Eigen::SparseMatrix<double>::InnerIterator it(J[i], col); it; ++it)
          trip.emplace_back(row0 + static_cast<int>(it.row()), sh.col_u(i) + col,
                            0.5 * it.value());
      for (int col = 0; col < J[i + 1].outerSize(); ++col)
        for (Eigen::SparseMatrix<double>::InnerIterator it(J[i + 1], col); it; ++it)
          trip.emplace_back(row0 + static_cast<int>(it.row()), sh.col_u(i + 1) + col,
                            0.5 * it.value());
    }
    for (int r = 0; r < sh.n_tc; ++r)
      for (int c = 0; c < sh.d; ++c)
        if (bc.psi(r, c) != 0.0)
          trip.emplace_back(sh.row_tc() + r, sh.col_u(sh.m - 1) + c, bc.psi(r, c));
    if (sh.extended) {
      for (int c = 0; c < sh.d; ++c)
        if (bc.arc_s(c) != 0.0)
          trip.emplace_back(sh.row_arc(), sh.col_u(0) + c, bc.arc_s(c));
      trip.emplace_back(sh.row_arc(), sh.col_alpha(), bc.arc_s_alpha);
    }

    Eigen::SparseMatrix<double> A(sh.n_rows, sh.n_unknown);
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    lu.compute(A);
    if (lu.info() != Eigen::Success)
      fail("solve_bvp: space-time Jacobian factorization failed (ill-conditioned "
           "terminal block?)",
           merit(rs));
    const Eigen::VectorXd step = lu.solve(-R);

    double damp = 1.0;
    bool accepted = false;
    for (int h = 0; h <= settings.max_halvings; ++h) {
      Eigen::MatrixXd Ut = U;
      for (int i = 0; i < sh.m; ++i)
        Ut.col(i) += damp * step.segment(sh.col_u(i), sh.d);
      const double alphat = alpha + (sh.extended ? damp * step(sh.col_alpha()) : 0.0);
      Eigen::VectorXd Rt;
      if (residual_vector(ref, bc, sh, mesh, Ut, alphat, Mb, Rt)) {
        const ResidualSplit rst = split_residual(sh, Rt);
        if (merit(rst) < merit(rs) || scaled_ok(rst, Ut)) {
          U = Ut;
          alpha = alphat;
          R = Rt;
          rs = rst;
          accepted = true;
          break;
        }
      }
      damp *= 0.5;
    }
    if (!accepted) fail("solve_bvp: line search stalled", merit(rs));
    ++iters;
  }

  BvpResult out;
  out.path.mesh = mesh;
  out.path.values = U;
  out.path.alpha = alpha;
  out.path.converged = true;
  out.path.max_residual = merit(rs);
  out.newton_iters = iters;
  const double term_gap = (U.col(sh.m - 1) - bc.u_hat).cwiseAbs().maxCoeff();
  out.terminal_close =
      term_gap <= settings.terminal_tol_factor * std::max(1e-300, bc.u_hat.cwiseAbs().maxCoeff());
  return out;
}

namespace {

// Scaled nodal second differences; per-component scaling by the component's
// max magnitude along the path.
Eigen::VectorXd second_difference_weights(const CanonicalPath& path, int n_comps) {
  const int m = path.mesh.m();
  const int d = static_cast<int>(path.values.rows());
  const int n = d / n_comps;
  Eigen::VectorXd scale(d);
  for (int c = 0; c < n_comps; ++c) {
    const double s = std::max(1e-12, path.values.middleRows(c * n, n).cwiseAbs().maxCoeff());
    scale.segment(c * n, n).setConstant(s);
  }
  Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
  for (int i = 1; i + 1 < m; ++i) {
    const double hm = path.mesh.points(i) - path.mesh.points(i - 1);
    const double hp = path.mesh.points(i + 1) - path.mesh.points(i);
    const Eigen::VectorXd d2 = 2.0 *
        ((path.values.col(i + 1) - path.values.col(i)) / hp -
         (path.values.col(i) - path.values.col(i - 1)) / hm) /
        (hm + hp);
    w(i) = (d2.cwiseQuotient(scale)).cwiseAbs().maxCoeff();
  }
  if (m > 2) {
    w(0) = w(1);
    w(m - 1) = w(m - 2);
  }
  return w;
}

double error_estimate(const CanonicalPath& path, const Eigen::VectorXd& w) {
  double est = 0;
  for (int i = 0; i + 1 < path.mesh.m(); ++i) {
    const double h = path.mesh.points(i + 1) - path.mesh.points(i);
    est = std::max(est, h * h * std::max(w(i), w(i + 1)));
  }
  return est;
}

}  // namespace

RefineResult refine_mesh(const CanonicalPath& path, const SystemState& ref, const BvpBc& bc,
                         double factor, int max_points, const BvpSettings& settings) {
  if (!(factor >= 1.0)) throw ConfigError("refine_mesh: factor must be >= 1");
  RefineResult out;
  out.path = path;

  Eigen::VectorXd w = second_difference_weights(path, ref.n_comps());
  out.estimate_before = error_estimate(path, w);
  const double target = out.estimate_before / factor;
  out.estimate_after = out.estimate_before;

  CanonicalPath current = path;
  for (int pass = 0; pass < 3; ++pass) {
    const int m = current.mesh.m();
    w = second_difference_weights(current, ref.n_comps());
    const double est = error_estimate(current, w);
    if (est <= target && pass > 0) break;

    // density ~ sqrt(w) with a floor so no region starves
    Eigen::VectorXd omega(m - 1);
    double omax = 0;
    for (int i = 0; i + 1 < m; ++i) {
      omega(i) = std::sqrt(std::max(w(i), w(i + 1)));
      omax = std::max(omax, omega(i));
    }
    const double floor_val = 0.05 * omax + 1e-12;
    double I = 0;
    for (int i = 0; i + 1 < m; ++i) {
      omega(i) = std::max(omega(i), floor_val);
      I += omega(i) * (current.mesh.points(i + 1) - current.mesh.points(i));
    }
    int m_new = m;
    if (target > 0)
      m_new = std::max(m, 1 + static_cast<int>(std::ceil(I / std::sqrt(target))));
    m_new = std::min(m_new, max_points);

    // equidistribute the density integral
    Eigen::VectorXd pts(m_new);
    pts(0) = current.mesh.points(0);
    pts(m_new - 1) = current.mesh.points(m - 1);
    double acc = 0;
    int seg = 0;
    for (int j = 1; j + 1 < m_new; ++j) {
      const double want = I * j / (m_new - 1);
      while (seg + 1 < m - 1 &&
             acc + omega(seg) * (current.mesh.points(seg + 1) - current.mesh.points(seg)) <
                 want) {
        acc += omega(seg) * (current.mesh.points(seg + 1) - current.mesh.points(seg));
        ++seg;
      }
      const double t0 = current.mesh.points(seg);
      pts(j) = t0 + (want - acc) / omega(seg);
      pts(j) = std::min(std::max(pts(j), t0 + 1e-14),
                        current.mesh.points(seg + 1));
    }
    for (int j = 1; j < m_new; ++j)
      if (pts(j) <= pts(j - 1)) pts(j) = std::nextafter(pts(j - 1), pts(m_new - 1) + 1.0);

    // interpolate the solution onto the new mesh
    CanonicalPath next;
    next.mesh = make_mesh_from_points(pts);
    next.alpha = current.alpha;
    next.values.resize(current.values.rows(), m_new);
    int k = 0;
    for (int j = 0; j < m_new; ++j) {
      const double t = pts(j);
      while (k + 2 < m && current.mesh.points(k + 1) < t) ++k;
      const double t0 = current.mesh.points(k), t1 = current.mesh.points(k + 1);
      const double th = (t - t0) / (t1 - t0);
      next.values.col(j) =
          (1.0 - th) * current.values.col(k) + th * current.values.col(k + 1);
    }

    try {
      BvpResult res = solve_bvp(ref, bc, next, settings);
      current = res.path;
    } catch (const PathFailure&) {
      out.refined = false;
      return out;
    }
    w = second_difference_weights(current, ref.n_comps());
    out.estimate_after = error_estimate(current, w);
    out.path = current;
    if (out.estimate_after <= target || m_new >= max_points) break;
  }
  out.refined = true;
  return out;
}

}  // namespace cspath
