#pragma once

#include <Eigen/Dense>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cspath/model.hpp"

namespace cspath {

struct NewtonOptions {
  double tol = 1e-10;
  int max_iter = 20;
  int max_halvings = 10;
};

struct NewtonReport {
  int iters = 0;
  std::vector<double> residuals;  // residual history including the initial one
};

/// Damped Newton for G(u) = 0 at fixed parameters; corrects the state in
/// place. Throws NewtonFailure on non-convergence.
NewtonReport newton_correct(SystemState& state, const NewtonOptions& opt = {});

struct ContinuationSettings {
  double ds_init = 0.1;
  double ds_min = 1e-6;
  double ds_max = 0.5;
  double lam_min = -std::numeric_limits<double>::infinity();
  double lam_max = std::numeric_limits<double>::infinity();
  std::vector<double> usrlam;
  double newton_tol = 1e-10;
  int newton_max_iter = 20;
  double xi = -1.0;  // arclength weight for the PDE part; <=0 selects 1/(2Nn)
  bool bifcheck = true;
  int n_eig_watch = 50;
  int max_steps = 100;
  double bif_param_tol = 1e-6;  // bisection tolerance for bifurcation localization
};

enum class PointType { regular, bifurcation, fold, user_target };
std::string to_string(PointType t);

struct BranchRecord {
  int index = 0;
  PointType point_type = PointType::regular;
  int n_unstable = -1;  // -1 when bifcheck is off
  double param = 0;
  double l2norm = 0;
  double j_ca = 0;
  double j_disc = 0;
  std::string point_file;  // filled by the CLI when persisted
};

/// Continuation tangent, normalized so xi*||du||^2 + (1-xi)*dlam^2 = 1.
struct Tangent {
  Eigen::VectorXd du;
  double dlam = 0;
};

struct BranchPoint {
  BranchRecord record;
  SystemState state;
  Tangent tangent;
  bool approximate = false;  // set when a special point could not be fully localized
};

struct BranchRun {
  std::vector<BranchPoint> points;
  std::string stop_reason;
  std::vector<std::string> warnings;
};

/// Pseudo-arclength continuation of G(u, lam) = 0 from a converged CSS.
/// Detects and localizes folds and bifurcations (eigenvalue-count test) and
/// lands exactly on requested usrlam values.
BranchRun continue_branch(const SystemState& start, std::optional<Tangent> tangent,
                          const ContinuationSettings& settings);

/// Branch switching at a saved bifurcation point: tangent from the kernel
/// direction, one predictor-corrector step of size direction*ds onto the
/// bifurcating branch. Returns the converged point and its tangent.
std::pair<SystemState, Tangent> branch_switch(const SystemState& bif_point, int direction,
                                              double ds,
                                              const ContinuationSettings& settings);

/// xi-weighted inner product used by the arclength condition.
double xi_dot(double xi, const Eigen::VectorXd& du1, double dl1, const Eigen::VectorXd& du2,
              double dl2);

}  // namespace cspath
