#include <cmath>
#include <memory>

#include "cspath/errors.hpp"
#include "cspath/model.hpp"

namespace cspath {

namespace {

// Shallow-lake optimal control: phosphorus P with costate q, control
// k = -1/q, parameters (rho, b, gamma, D).
class SlocModel : public Model {
public:
  SlocModel() : Model("sloc", 1, {"rho", "b", "gamma", "D"}, /*active_param=*/1,
                      /*rho_index=*/0) {}

  Eigen::VectorXd diffusion(const Eigen::VectorXd& params) const override {
    Eigen::VectorXd d(1);
    d(0) = params(3);
    return d;
  }

  Eigen::VectorXd reaction(int n, const Eigen::VectorXd& u,
                           const Eigen::VectorXd& params) const override {
    const double rho = params(0), b = params(1), gam = params(2);
    Eigen::VectorXd f(2 * n);
    for (int k = 0; k < n; ++k) {
      const double P = u(k);
      const double q = u(n + k);
      if (q == 0.0 || !std::isfinite(q))
        throw EvaluationError("sloc: costate q is zero, control -1/q undefined", k);
      const double s = 1.0 + P * P;
      f(k) = -1.0 / q - b * P + P * P / s;
      f(n + k) = 2.0 * gam * P + q * (rho + b - 2.0 * P / (s * s));
    }
    return f;
  }

  bool has_analytic_jacobian() const override { return true; }

  NodalJacobian reaction_jac(int n, const Eigen::VectorXd& u,
                             const Eigen::VectorXd& params) const override {
    const double rho = params(0), b = params(1), gam = params(2);
    NodalJacobian jac(2, std::vector<Eigen::VectorXd>(2, Eigen::VectorXd(n)));
    for (int k = 0; k < n; ++k) {
      const double P = u(k);
      const double q = u(n + k);
      if (q == 0.0) throw EvaluationError("sloc: costate q is zero", k);
      const double s = 1.0 + P * P;
      jac[0][0](k) = -b + 2.0 * P / (s * s);
      jac[0][1](k) = 1.0 / (q * q);
      jac[1][0](k) = 2.0 * gam - 2.0 * q * (1.0 - 3.0 * P * P) / (s * s * s);
      jac[1][1](k) = rho + b - 2.0 * P / (s * s);
    }
    return jac;
  }

  Eigen::VectorXd local_current_value(int n, const Eigen::VectorXd& u,
                                      const Eigen::VectorXd& params) const override {
    const double gam = params(2);
    Eigen::VectorXd jc(n);
    for (int k = 0; k < n; ++k) {
      const double P = u(k);
      const double q = u(n + k);
      const double kv = -1.0 / q;
      if (!(kv > 0.0))
        throw EvaluationError("sloc: control k = -1/q not positive, log(k) undefined", k);
      jc(k) = std::log(kv) - gam * P * P;
    }
    return jc;
  }

  Eigen::VectorXd control(int n, const Eigen::VectorXd& u,
                          const Eigen::VectorXd& params) const override {
    (void)params;
    Eigen::VectorXd kv(n);
    for (int k = 0; k < n; ++k) {
      const double q = u(n + k);
      if (q == 0.0) throw EvaluationError("sloc: costate q is zero", k);
      kv(k) = -1.0 / q;
    }
    return kv;
  }

  std::vector<std::string> admissibility_warnings(
      int n, const Eigen::VectorXd& u, const Eigen::VectorXd& params) const override {
    (void)params;
    std::vector<std::string> w;
    for (int k = 0; k < n; ++k) {
      if (!(u(n + k) < 0.0)) {
        w.push_back("sloc: costate q >= 0 at node " + std::to_string(k) +
                    " (control k = -1/q not positive)");
        break;
      }
    }
    return w;
  }
};

}  // namespace

std::shared_ptr<const Model> make_sloc_model() { return std::make_shared<SlocModel>(); }

}  // namespace cspath
