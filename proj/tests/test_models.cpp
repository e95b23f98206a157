#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <memory>

#include "cspath/errors.hpp"
#include "cspath/model.hpp"
#include "oracles.hpp"

using namespace cspath;

namespace {

SystemState sloc_state(int n, const oracles::SlocParams& p, double P, double q) {
  SystemState s;
  s.model = find_model("sloc");
  const double L = 2.0 * M_PI / 0.44;
  s.fem = std::make_shared<FemOps>(assemble(build_mesh(-L, L, n)));
  s.params.resize(4);
  s.params << p.rho, p.b, p.gamma, p.D;
  s.active_param = 1;
  s.u.resize(2 * n);
  s.u.head(n).setConstant(P);
  s.u.tail(n).setConstant(q);
  return s;
}

}  // namespace

TEST_CASE("sloc reaction values match hand evaluation") {
  auto model = find_model("sloc");
  Eigen::VectorXd params(4);
  params << 0.03, 0.55, 0.5, 0.5;
  Eigen::VectorXd u(2);
  u << 0.0, -1.0;  // P = 0, q = -1 on a single node
  const Eigen::VectorXd f = model->reaction(1, u, params);
  CHECK(f(0) == doctest::Approx(1.0).epsilon(1e-15));         // -1/q at P=0
  CHECK(f(1) == doctest::Approx(-0.58).epsilon(1e-14));       // q*(rho+b)

  // gamma = 0, P = 0: second component is q*(rho+b)
  Eigen::VectorXd params0 = params;
  params0(2) = 0.0;
  Eigen::VectorXd u2(2);
  u2 << 0.0, -3.7;
  CHECK(model->reaction(1, u2, params0)(1) == doctest::Approx(-3.7 * 0.58).epsilon(1e-14));

  // control extraction k = -1/q
  Eigen::VectorXd u3(2);
  u3 << 0.3, -13.0;
  CHECK(model->control(1, u3, params)(0) == doctest::Approx(1.0 / 13.0).epsilon(1e-15));

  // q = 0 is not evaluable
  Eigen::VectorXd u4(2);
  u4 << 0.3, 0.0;
  CHECK_THROWS_AS(model->reaction(1, u4, params), EvaluationError);
}

TEST_CASE("sloc: G vanishes at the flat 0D root (bisection oracle)") {
  oracles::SlocParams p;
  const auto roots = oracles::sloc_flat_roots(p);
  REQUIRE(roots.size() == 3);
  const double P = roots[0];
  const double q = oracles::sloc_qhat(P, p);
  SystemState s = sloc_state(50, p, P, q);
  CHECK(assemble_G(s).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("G of constant state equals -M_blk f (stiffness drops out)") {
  oracles::SlocParams p;
  SystemState s = sloc_state(23, p, 0.4, -7.0);
  const Eigen::VectorXd f = s.model->reaction(s.n(), s.u, s.params);
  Eigen::VectorXd expect(s.dim());
  for (int c = 0; c < 2; ++c)
    expect.segment(c * s.n(), s.n()) = -(s.fem->M * f.segment(c * s.n(), s.n()));
  CHECK((assemble_G(s) - expect).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("sloc analytic Jacobian vs central finite differences") {
  oracles::SlocParams p;
  SystemState s = sloc_state(17, p, 0.0, 0.0);
  // random bounded admissible state
  Eigen::VectorXd rnd = Eigen::VectorXd::Random(2 * 17);
  s.u.head(17) = 0.5 * rnd.head(17).array() + 0.8;   // P in (0.3, 1.3)
  s.u.tail(17) = 2.0 * rnd.tail(17).array() - 6.0;   // q in (-8, -4)

  REQUIRE(s.model->has_analytic_jacobian());
  const NodalJacobian ana = s.model->reaction_jac(s.n(), s.u, s.params);
  const NodalJacobian fd = s.model->Model::reaction_jac(s.n(), s.u, s.params);
  double worst = 0;
  for (int ci = 0; ci < 2; ++ci)
    for (int cj = 0; cj < 2; ++cj) {
      const double scale = 1.0 + ana[ci][cj].cwiseAbs().maxCoeff();
      worst = std::max(worst, (ana[ci][cj] - fd[ci][cj]).cwiseAbs().maxCoeff() / scale);
    }
  CHECK(worst < 1e-5);
}

TEST_CASE("assemble_G_jac of a linear reaction is exact: K_D - M_blk A") {
  // two-component linear test model f(u) = A u (nodal)
  class LinearModel : public Model {
   public:
    Eigen::Matrix2d A;
    LinearModel() : Model("linear-test", 1, {"rho", "unused"}, 0, 0) {
      A << -1.0, 0.5, 0.25, -2.0;
    }
    Eigen::VectorXd diffusion(const Eigen::VectorXd&) const override {
      return Eigen::VectorXd::Constant(1, 0.7);
    }
    Eigen::VectorXd reaction(int n, const Eigen::VectorXd& u,
                             const Eigen::VectorXd&) const override {
      Eigen::VectorXd f(2 * n);
      f.head(n) = A(0, 0) * u.head(n) + A(0, 1) * u.tail(n);
      f.tail(n) = A(1, 0) * u.head(n) + A(1, 1) * u.tail(n);
      return f;
    }
    Eigen::VectorXd local_current_value(int n, const Eigen::VectorXd&,
                                        const Eigen::VectorXd&) const override {
      return Eigen::VectorXd::Zero(n);
    }
    Eigen::VectorXd control(int n, const Eigen::VectorXd&,
                            const Eigen::VectorXd&) const override {
      return Eigen::VectorXd::Zero(n);
    }
  };
  auto model = std::make_shared<LinearModel>();
  SystemState s;
  s.model = model;
  s.fem = std::make_shared<FemOps>(assemble(build_mesh(0.0, 2.0, 9)));
  s.params = Eigen::VectorXd::Zero(2);
  s.u = Eigen::VectorXd::Random(18);

  const Eigen::MatrixXd J = Eigen::MatrixXd(assemble_G_jac(s));
  const Eigen::MatrixXd M = Eigen::MatrixXd(s.fem->M);
  const Eigen::MatrixXd K = Eigen::MatrixXd(s.fem->K);
  Eigen::MatrixXd expect(18, 18);
  expect.setZero();
  expect.topLeftCorner(9, 9) = 0.7 * K - model->A(0, 0) * M;
  expect.topRightCorner(9, 9) = -model->A(0, 1) * M;
  expect.bottomLeftCorner(9, 9) = -model->A(1, 0) * M;
  expect.bottomRightCorner(9, 9) = -0.7 * K - model->A(1, 1) * M;
  CHECK((J - expect).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("vegoc reaction: unit-ratio case and E-formula") {
  auto model = find_model("vegoc");
  Eigen::VectorXd par(13);
  par << 0.03, 1e-3, 0.5, 0.03, 0.005, 0.9, 1e-3, 34.0, 0.01, 0.1, 1.0, 1.1, 0.3;

  // lambda = p - c/(1-alpha) makes gas = 1, so E = v and H = v
  const double lam_unit = 1.1 - 1.0 / 0.7;
  Eigen::VectorXd u(4);
  u << 2.0, 5.0, lam_unit, 0.1;
  CHECK(model->control(1, u, par)(0) == doctest::Approx(2.0).epsilon(1e-12));
  // j_c = p H - c E = (p - c) v in the unit-ratio case
  CHECK(model->local_current_value(1, u, par)(0) ==
        doctest::Approx((1.1 - 1.0) * 2.0).epsilon(1e-12));

  // E at lambda = 0: independent scalar evaluation of ((p-l)(1-al)/c)^(1/al)
  Eigen::VectorXd u2(4);
  u2 << 3.0, 5.0, 0.0, 0.1;
  const double gas = std::pow(1.1 * 0.7, 1.0 / 0.3);
  CHECK(model->control(1, u2, par)(0) == doctest::Approx(gas * 3.0).epsilon(1e-12));

  // inadmissible states throw with the node index
  Eigen::VectorXd u3(4);
  u3 << -1.0, 5.0, 0.0, 0.1;
  CHECK_THROWS_AS(model->reaction(1, u3, par), EvaluationError);
  Eigen::VectorXd u4(4);
  u4 << 1.0, 5.0, 1.2, 0.1;
  CHECK_THROWS_AS(model->reaction(1, u4, par), EvaluationError);
}

TEST_CASE("vegoc reaction agrees with the independent oracle") {
  auto model = find_model("vegoc");
  oracles::VegParams q;
  Eigen::VectorXd par(13);
  par << q.rho, q.g, q.eta, q.d, q.del, q.beta, q.xi, q.R, q.ru, q.rw, q.c, q.p, q.al;
  Eigen::Vector4d u0(12.0, 40.0, 0.4, 0.8);
  const Eigen::VectorXd f = model->reaction(1, Eigen::VectorXd(u0), par);
  const Eigen::Vector4d fo = oracles::veg_reaction(u0, q);
  CHECK((f - fo).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("control stationarity: dH/dcontrol = 0 at the extracted control") {
  // central finite difference of the nodal Hamiltonian integrand in the
  // control, evaluated at the extracted control
  SUBCASE("sloc") {
    auto model = find_model("sloc");
    Eigen::VectorXd par(4);
    par << 0.03, 0.65, 0.5, 0.5;
    for (double P : {0.1, 0.45, 1.4}) {
      for (double q : {-8.0, -3.8, -1.1}) {
        Eigen::VectorXd u(2);
        u << P, q;
        const double k = model->control(1, u, par)(0);
        auto H = [&](double kv) { return std::log(kv) - 0.5 * P * P + q * kv; };
        const double eps = 1e-6 * std::abs(k);
        CHECK(std::abs((H(k + eps) - H(k - eps)) / (2 * eps)) < 1e-8);
      }
    }
  }
  SUBCASE("vegoc") {
    auto model = find_model("vegoc");
    oracles::VegParams qp;
    Eigen::VectorXd par(13);
    par << qp.rho, qp.g, qp.eta, qp.d, qp.del, qp.beta, qp.xi, qp.R, qp.ru, qp.rw, qp.c,
        qp.p, qp.al;
    for (double v : {0.5, 12.0, 300.0}) {
      for (double lam : {-0.5, 0.3, 0.9}) {
        Eigen::VectorXd u(4);
        u << v, 30.0, lam, 0.5;
        const double E = model->control(1, u, par)(0);
        auto H = [&](double Ev) {
          const double h = std::pow(v, qp.al) * std::pow(Ev, 1.0 - qp.al);
          return (qp.p * h - qp.c * Ev) + lam * (-h);
        };
        const double eps = 1e-6 * std::abs(E);
        CHECK(std::abs((H(E + eps) - H(E - eps)) / (2 * eps)) < 1e-8);
      }
    }
  }
}

TEST_CASE("j_ca of flat states and the discounted identity") {
  oracles::SlocParams p;
  p.b = 0.65;
  const auto roots = oracles::sloc_flat_roots(p);
  REQUIRE(roots.size() == 3);
  const double P = roots[0];
  const double q = oracles::sloc_qhat(P, p);
  SystemState s = sloc_state(50, p, P, q);
  const double expect = std::log(-1.0 / q) - p.gamma * P * P;
  CHECK(j_ca(s) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("component packing round trip") {
  std::vector<Eigen::VectorXd> comps(3);
  for (auto& c : comps) c = Eigen::VectorXd::Random(7);
  const Eigen::VectorXd u = pack_components(comps);
  const auto back = unpack_components(u, 3);
  for (int c = 0; c < 3; ++c) CHECK((back[c] - comps[c]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("admissibility diagnostics are warnings, not errors") {
  oracles::SlocParams p;
  SystemState s = sloc_state(5, p, 0.3, +2.0);  // q > 0: inadmissible but evaluable
  const auto w = s.model->admissibility_warnings(s.n(), s.u, s.params);
  CHECK(w.size() == 1);
  CHECK_NOTHROW(s.model->reaction(s.n(), s.u, s.params));
}
