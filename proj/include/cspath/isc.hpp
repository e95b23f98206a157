#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cspath/spectral.hpp"
#include "cspath/tbvp.hpp"

namespace cspath {

struct IscSettings {
  std::vector<double> alvin;  // target alpha values for natural continuation
  double sig = 0.1;           // initial arclength stepsize
  double sig_min = 1e-4;
  double sig_max = 1.0;
  int n_steps = 20;     // step budget in arc mode
  int msw = 0;          // predictor: 0 previous solution, 1 secant
  double xi_arc = 0.5;  // secant mixing weight
  double T = 0;         // truncation time; <= 0 takes the spectral suggestion
  int m = 10;           // startup time-mesh points
  double grading = 2.0;
  double tol_bvp = 1e-8;
  double c_T = 15.0;
  bool retain_history = false;
  double alpha_margin = 0.05;  // arc mode may overshoot alpha = 1 by this much
  int bvp_max_iter = 40;
};

struct IscResult {
  std::vector<double> alv;  // achieved alpha values
  std::vector<double> vv;   // objective value per achieved alpha
  CanonicalPath last_path;
  std::vector<CanonicalPath> history;  // all achieved paths when retained
  bool fold_detected = false;
  double fold_alpha = std::numeric_limits<double>::quiet_NaN();
  double T = 0;  // truncation time actually used
  std::vector<std::string> warnings;

  /// State needed to continue an arc run where it stopped.
  struct Resume {
    CanonicalPath esol;  // last solution (alpha in esol.alpha)
    CanonicalPath prev;  // one step earlier, for secants
    bool has_prev = false;
    double sig = 0;
    double T = 0;
  };
  std::optional<Resume> resume;
};

/// Natural initial-state continuation: for each requested alpha the BVP is
/// solved with v(0) = alpha*v0 + (1-alpha)*v_hat, seeded from the previous
/// path (or a secant predictor when msw = 1). Stops at the first failure
/// and reports the achieved prefix. v0 is taken from the states of `start`.
IscResult iscnat(const SystemState& start, const SystemState& target,
                 const IscSettings& settings);

/// Same, with the initial-state profile given directly.
IscResult iscnat_profile(const Eigen::VectorXd& v0, const SystemState& target,
                         const IscSettings& settings);

/// Pseudo-arclength initial-state continuation with alpha as a free
/// unknown (dummy dynamics) and a secant-based arclength row; rides around
/// folds in alpha. Optionally resumes a previous run.
IscResult iscarc(const SystemState& start, const SystemState& target,
                 const std::optional<IscResult::Resume>& resume, const IscSettings& settings);

IscResult iscarc_profile(const Eigen::VectorXd& v0, const SystemState& target,
                         const std::optional<IscResult::Resume>& resume,
                         const IscSettings& settings);

/// Re-solve the fixed-alpha BVP from a stored path as guess (e.g. to land
/// exactly on a given alpha on either side of a fold).
CanonicalPath correct_at_alpha(const CanonicalPath& near_path, double alpha_target,
                               const Eigen::VectorXd& v0, const SystemState& target,
                               const IscSettings& settings);

/// Constant-in-time path u(t) = u_hat of a CSS on a graded mesh.
CanonicalPath constant_path(const SystemState& css, const TimeMesh& mesh);

/// Shared setup: spectral projection of the target (must have the SPP),
/// truncation time and startup mesh.
struct PathProblem {
  Projection proj;
  TimeMesh mesh;
  double T = 0;
};
PathProblem setup_path_problem(const SystemState& target, const IscSettings& settings);

}  // namespace cspath
