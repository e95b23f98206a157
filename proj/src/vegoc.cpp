#include <cmath>
#include <memory>

#include "cspath/errors.hpp"
#include "cspath/model.hpp"

namespace cspath {

namespace {

// Semi-arid grazing system: biomass v and soil water w with costates
// (lam, mu); harvest H = v^alpha E^(1-alpha), control E (grazing effort)
// extracted from the Hamiltonian stationarity condition.
// Parameter order matches the model's init vector:
//   (rho, g, eta, d, delta, beta, xi, R, r_u, r_w, c, p, alpha).
class VegocModel : public Model {
public:
  VegocModel()
      : Model("vegoc", 2,
              {"rho", "g", "eta", "d", "delta", "beta", "xi", "R", "r_u", "r_w",
               "c", "p", "alpha"},
              /*active_param=*/7, /*rho_index=*/0) {}

  Eigen::VectorXd diffusion(const Eigen::VectorXd&) const override {
    Eigen::VectorXd d(2);
    d(0) = 0.05;
    d(1) = 10.0;
    return d;
  }

  Eigen::VectorXd reaction(int n, const Eigen::VectorXd& u,
                           const Eigen::VectorXd& par) const override {
    const double rho = par(0), g = par(1), eta = par(2), d = par(3), del = par(4);
    const double beta = par(5), xi = par(6), R = par(7), ru = par(8), rw = par(9);
    const double c = par(10), p = par(11), al = par(12);
    Eigen::VectorXd f(4 * n);
    for (int k = 0; k < n; ++k) {
      const double v = u(k);
      const double w = u(n + k);
      const double l1 = u(2 * n + k);
      const double l2 = u(3 * n + k);
      if (!(v > 0.0)) throw EvaluationError("vegoc: biomass v <= 0", k);
      if (!(l1 < p)) throw EvaluationError("vegoc: costate lambda >= price p", k);
      const double gas = std::pow((p - l1) * (1.0 - al) / c, 1.0 / al);
      const double hv = std::pow(gas, 1.0 - al);  // h/v = gas^(1-alpha)
      const double h = hv * v;
      const double veta = std::pow(v, eta);
      f(k) = (g * w * veta - d * (1.0 + del * v)) * v - h;
      f(n + k) = R * (beta + xi * v) - (ru * v + rw) * w;
      f(2 * n + k) = rho * l1 - p * al * hv -
                     l1 * (g * (eta + 1.0) * w * veta - 2.0 * d * del * v - d - al * hv) -
                     l2 * (R * xi - ru * w);
      f(3 * n + k) = rho * l2 - l1 * g * veta * v + l2 * (ru * v + rw);
    }
    return f;
  }

  Eigen::VectorXd local_current_value(int n, const Eigen::VectorXd& u,
                                      const Eigen::VectorXd& par) const override {
    const double c = par(10), p = par(11), al = par(12);
    Eigen::VectorXd jc(n);
    for (int k = 0; k < n; ++k) {
      const double v = u(k);
      const double l1 = u(2 * n + k);
      if (!(v > 0.0)) throw EvaluationError("vegoc: biomass v <= 0", k);
      if (!(l1 < p)) throw EvaluationError("vegoc: costate lambda >= price p", k);
      const double gas = std::pow((p - l1) * (1.0 - al) / c, 1.0 / al);
      const double e = gas * v;
      const double h = std::pow(gas, 1.0 - al) * v;
      jc(k) = p * h - c * e;
    }
    return jc;
  }

  Eigen::VectorXd control(int n, const Eigen::VectorXd& u,
                          const Eigen::VectorXd& par) const override {
    const double c = par(10), p = par(11), al = par(12);
    Eigen::VectorXd e(n);
    for (int k = 0; k < n; ++k) {
      const double v = u(k);
      const double l1 = u(2 * n + k);
      if (!(l1 < p)) throw EvaluationError("vegoc: costate lambda >= price p", k);
      e(k) = std::pow((p - l1) * (1.0 - al) / c, 1.0 / al) * v;
    }
    return e;
  }

  std::vector<std::string> admissibility_warnings(
      int n, const Eigen::VectorXd& u, const Eigen::VectorXd& par) const override {
    const double p = par(11);
    std::vector<std::string> w;
    for (int k = 0; k < n; ++k) {
      if (!(u(k) > 0.0)) {
        w.push_back("vegoc: v <= 0 at node " + std::to_string(k));
        break;
      }
    }
    for (int k = 0; k < n; ++k) {
      if (!(u(n + k) > 0.0)) {
        w.push_back("vegoc: w <= 0 at node " + std::to_string(k));
        break;
      }
    }
    for (int k = 0; k < n; ++k) {
      if (!(u(2 * n + k) < p)) {
        w.push_back("vegoc: lambda >= p at node " + std::to_string(k));
        break;
      }
    }
    return w;
  }
};

}  // namespace

std::shared_ptr<const Model> make_vegoc_model() { return std::make_shared<VegocModel>(); }

}  // namespace cspath
