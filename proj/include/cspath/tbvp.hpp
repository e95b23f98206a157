#pragma once

#include <Eigen/Dense>
#include <limits>
#include <memory>
#include <string>

#include "cspath/model.hpp"

namespace cspath {

/// Time mesh 0 = t_0 < ... < t_{m-1} = T.
struct TimeMesh {
  Eigen::VectorXd points;

  int m() const { return static_cast<int>(points.size()); }
  double T() const { return points(points.size() - 1); }
};

/// Graded mesh t_i = T * (i/(m-1))^s; s > 1 clusters points near t = 0
/// where the transients live, s = 1 is uniform.
TimeMesh make_graded_mesh(double T, int m, double s);
TimeMesh make_mesh_from_points(Eigen::VectorXd points);

/// A discrete canonical path: solution values on a time mesh.
struct CanonicalPath {
  TimeMesh mesh;
  Eigen::MatrixXd values;  // 2Nn x m, column i = u(t_i)
  double alpha = 0.0;
  double value = std::numeric_limits<double>::quiet_NaN();  // discounted objective
  bool converged = false;
  double max_residual = std::numeric_limits<double>::infinity();
};

/// Boundary conditions for the path BVP. In plain mode the initial states
/// are fixed to v0; in extended mode alpha is one extra scalar unknown with
/// trivial dynamics and the initial states are alpha*v0 + (1-alpha)*v_hat,
/// closed by the arclength row
///   <arc_s, u(0) - u_prev0> + arc_s_alpha * (alpha - alpha_prev) = arc_sigma.
struct BvpBc {
  Eigen::VectorXd v0;     // Nn; target initial states (mixing profile in extended mode)
  Eigen::VectorXd u_hat;  // 2Nn terminal CSS
  Eigen::MatrixXd psi;    // dim E_u x 2Nn projection rows

  bool extended = false;
  Eigen::VectorXd arc_s;
  double arc_s_alpha = 0.0;
  double arc_sigma = 0.0;
  Eigen::VectorXd u_prev0;
  double alpha_prev = 0.0;
};

struct BvpSettings {
  double tol = 1e-8;      // scaled by max(1, ||u||_inf) on collocation rows
  int max_iter = 40;
  int max_halvings = 8;
  double terminal_tol_factor = 1e-2;  // warning threshold on ||u(T)-u_hat||_inf
};

/// Failure of the path solver; carries the last residual and iterate so the
/// caller can diagnose or restart.
class PathFailure : public std::runtime_error {
public:
  PathFailure(const std::string& msg, double residual, std::shared_ptr<CanonicalPath> last)
      : std::runtime_error(msg + " (residual " + std::to_string(residual) + ")"),
        residual_(residual),
        last_(std::move(last)) {}
  double residual() const noexcept { return residual_; }
  const std::shared_ptr<CanonicalPath>& last_iterate() const noexcept { return last_; }

private:
  double residual_;
  std::shared_ptr<CanonicalPath> last_;
};

struct BvpResult {
  CanonicalPath path;
  int newton_iters = 0;
  bool terminal_close = true;  // ||u(T)-u_hat||_inf within the warning threshold
};

/// Solve M du/dt = -G(u) with one-step trapezoidal collocation and the
/// boundary conditions in bc, by damped Newton on the whole space-time
/// vector. `ref` supplies model, FEM operators and parameters; its u is
/// ignored. Throws PathFailure on divergence and ProjectionMismatch when
/// the BC rows do not make the system square.
BvpResult solve_bvp(const SystemState& ref, const BvpBc& bc, const CanonicalPath& guess,
                    const BvpSettings& settings = {});

/// Residual of the discrete system for an arbitrary path (collocation rows
/// and BC rows), independent re-assertion for converged paths. Returns the
/// max collocation row residual and the max BC row residual.
std::pair<double, double> bvp_residual(const SystemState& ref, const BvpBc& bc,
                                       const CanonicalPath& path);

struct RefineResult {
  CanonicalPath path;
  bool refined = true;  // false when re-convergence failed and the input is returned
  double estimate_before = 0;
  double estimate_after = 0;
};

/// Error-indicator based mesh refinement: equidistributes the scaled second
/// difference of u, grows the mesh enough to reduce the estimate by
/// `factor`, interpolates and re-converges. Point budget: max_points.
RefineResult refine_mesh(const CanonicalPath& path, const SystemState& ref, const BvpBc& bc,
                         double factor, int max_points = 400,
                         const BvpSettings& settings = {});

}  // namespace cspath
