// Shared builders for tests: flat CSS states seeded from the 0D oracles
// and the linear two-component model used by the BVP convergence checks.
#pragma once

#include <cmath>
#include <memory>

#include "cspath/continuation.hpp"
#include "cspath/model.hpp"
#include "oracles.hpp"

namespace helpers {

inline constexpr double kSlocHalfLength = 2.0 * M_PI / 0.44;

/// SLOC flat CSS (exact 0D root extended constantly) on n nodes.
inline cspath::SystemState sloc_flat_state(const oracles::SlocParams& p, int n,
                                           int root_index) {
  const auto roots = oracles::sloc_flat_roots(p);
  if (static_cast<int>(roots.size()) <= root_index)
    throw std::runtime_error("oracle: flat root index out of range");
  const double P = roots[root_index];
  cspath::SystemState s;
  s.model = cspath::find_model("sloc");
  s.fem = std::make_shared<cspath::FemOps>(
      cspath::assemble(cspath::build_mesh(-kSlocHalfLength, kSlocHalfLength, n)));
  s.params.resize(4);
  s.params << p.rho, p.b, p.gamma, p.D;
  s.active_param = 1;
  s.u.resize(2 * n);
  s.u.head(n).setConstant(P);
  s.u.tail(n).setConstant(oracles::sloc_qhat(P, p));
  return s;
}

/// vegOC flat CSS on n nodes over (-5, 5); root_index orders by v.
inline cspath::SystemState veg_flat_state(const oracles::VegParams& q, int n,
                                          int root_index) {
  const auto roots = oracles::veg_flat_roots(q);
  if (static_cast<int>(roots.size()) <= root_index)
    throw std::runtime_error("oracle: veg flat root index out of range");
  cspath::SystemState s;
  s.model = cspath::find_model("vegoc");
  s.fem = std::make_shared<cspath::FemOps>(cspath::assemble(cspath::build_mesh(-5.0, 5.0, n)));
  s.params.resize(13);
  s.params << q.rho, q.g, q.eta, q.d, q.del, q.beta, q.xi, q.R, q.ru, q.rw, q.c, q.p, q.al;
  s.active_param = 7;
  s.u.resize(4 * n);
  for (int c = 0; c < 4; ++c) s.u.segment(c * n, n).setConstant(roots[root_index](c));
  return s;
}

/// Linear saddle model: states decay at rate a, costates grow at rate a,
/// no diffusion. The path BVP for it reduces nodally to the scalar
/// trapezoidal scheme for u' = -a u, whose exact solution is known.
class LinearSaddleModel : public cspath::Model {
 public:
  double a;
  explicit LinearSaddleModel(double a_)
      : Model("linear-saddle", 1, {"rho"}, 0, 0), a(a_) {}
  Eigen::VectorXd diffusion(const Eigen::VectorXd&) const override {
    return Eigen::VectorXd::Zero(1);
  }
  Eigen::VectorXd reaction(int n, const Eigen::VectorXd& u,
                           const Eigen::VectorXd&) const override {
    Eigen::VectorXd f(2 * n);
    f.head(n) = -a * u.head(n);
    f.tail(n) = a * u.tail(n);
    return f;
  }
  Eigen::VectorXd local_current_value(int n, const Eigen::VectorXd& u,
                                      const Eigen::VectorXd&) const override {
    return u.head(n);  // integrand = state, handy for value checks
  }
  Eigen::VectorXd control(int n, const Eigen::VectorXd&, const Eigen::VectorXd&) const override {
    return Eigen::VectorXd::Zero(n);
  }
};

inline cspath::SystemState linear_saddle_state(double a, int n, double rho = 0.5) {
  cspath::SystemState s;
  s.model = std::make_shared<LinearSaddleModel>(a);
  s.fem = std::make_shared<cspath::FemOps>(cspath::assemble(cspath::build_mesh(0.0, 1.0, n)));
  s.params = Eigen::VectorXd::Constant(1, rho);
  s.active_param = 0;
  s.u = Eigen::VectorXd::Zero(2 * n);  // the CSS is the origin
  return s;
}

}  // namespace helpers
