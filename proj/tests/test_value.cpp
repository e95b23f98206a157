#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "cspath/errors.hpp"
#include "cspath/isc.hpp"
#include "cspath/value.hpp"
#include "helpers.hpp"

using namespace cspath;

TEST_CASE("path_value: constant path matches the closed form") {
  oracles::SlocParams p;
  p.b = 0.65;
  SystemState css = helpers::sloc_flat_state(p, 30, 0);
  const double rho = p.rho;
  for (int m : {50, 120}) {
    CanonicalPath path = constant_path(css, make_graded_mesh(100.0, m, 2.0));
    const double J = path_value(path, css, rho);
    const double expect = j_ca(css) * (1.0 - std::exp(-rho * 100.0)) / rho;
    CHECK(J == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("path_value at rho = 0 is the plain trapezoid of J_ca") {
  SystemState ref = helpers::linear_saddle_state(1.0, 4);
  CanonicalPath path;
  path.mesh = make_graded_mesh(2.0, 9, 1.0);
  path.values = Eigen::MatrixXd::Zero(8, 9);
  for (int i = 0; i < 9; ++i)
    path.values.col(i).head(4).setConstant(std::exp(-path.mesh.points(i)));

  // manual trapezoid of the nodal-average current value
  double expect = 0;
  SystemState s = ref;
  auto jca_at = [&](int i) {
    s.u = path.values.col(i);
    return j_ca(s);
  };
  for (int i = 0; i + 1 < 9; ++i) {
    const double h = path.mesh.points(i + 1) - path.mesh.points(i);
    expect += 0.5 * h * (jca_at(i) + jca_at(i + 1));
  }
  CHECK(path_value(path, ref, 0.0) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("path_value: quadrature consistency under midpoint refinement") {
  SystemState ref = helpers::linear_saddle_state(1.0, 3);
  auto value_on = [&](int m) {
    CanonicalPath path;
    path.mesh = make_graded_mesh(3.0, m, 1.0);
    path.values = Eigen::MatrixXd::Zero(6, m);
    for (int i = 0; i < m; ++i) {
      const double t = path.mesh.points(i);
      path.values.col(i).head(3).setConstant(std::exp(-t) + 0.3 * std::sin(2 * t));
    }
    return path_value(path, ref, 0.5);
  };
  const double e1 = std::abs(value_on(11) - value_on(641));
  const double e2 = std::abs(value_on(21) - value_on(641));
  CHECK(e1 / e2 > 3.0);  // halving h cuts the error ~4x
}

TEST_CASE("path_value of the constant path approaches J_ca/rho as T grows") {
  oracles::SlocParams p;
  p.b = 0.65;
  SystemState css = helpers::sloc_flat_state(p, 20, 0);
  const double limit = j_ca(css) / p.rho;
  for (double T : {50.0, 100.0, 200.0}) {
    CanonicalPath path = constant_path(css, make_graded_mesh(T, 40, 2.0));
    const double rel = std::abs(path_value(path, css, p.rho) - limit) / std::abs(limit);
    CHECK(rel <= std::exp(-p.rho * T) * (1.0 + 1e-9));
  }
}

TEST_CASE("css_value: identity and ordering of the three flat states") {
  oracles::SlocParams p;
  p.b = 0.65;
  SystemState fsc = helpers::sloc_flat_state(p, 40, 0);
  SystemState fsi = helpers::sloc_flat_state(p, 40, 1);
  SystemState fsm = helpers::sloc_flat_state(p, 40, 2);

  const auto [jca_c, jd_c] = css_value(fsc);
  const auto [jca_i, jd_i] = css_value(fsi);
  const auto [jca_m, jd_m] = css_value(fsm);
  CHECK(jd_c * p.rho == doctest::Approx(jca_c).epsilon(1e-14));
  CHECK(jd_i < jd_m);
  CHECK(jd_m < jd_c);

  // flat CSS: J_ca equals the pointwise j_c value
  const double q = oracles::sloc_qhat(oracles::sloc_flat_roots(p)[0], p);
  const double P = oracles::sloc_flat_roots(p)[0];
  CHECK(jca_c ==
        doctest::Approx(std::log(-1.0 / q) - p.gamma * P * P).epsilon(1e-12));

  SystemState rho0 = fsc;
  rho0.params(0) = 0.0;
  CHECK_THROWS_AS(css_value(rho0), EvaluationError);
}

TEST_CASE("skiba_scan with identical targets reports a degenerate crossing") {
  SystemState target = helpers::linear_saddle_state(1.0, 3);
  SystemState start = target;
  start.u.head(3).setConstant(1.0);

  SkibaSettings set;
  set.isc.T = 4.0;
  set.isc.m = 15;
  set.isc.grading = 1.0;
  set.b_alvin = {0.5, 1.0};
  SkibaResult res = skiba_scan(start, target, target, {0.2, 0.4, 0.6}, set);
  REQUIRE(res.found);
  CHECK(res.value_gap <= 1e-12);
  for (const auto& s : res.grid)
    if (s.ok) CHECK(s.j_a == doctest::Approx(s.j_b).epsilon(1e-12));
}

TEST_CASE("skiba_scan without a crossing reports none (not an error)") {
  // paths to a slow target vs a fast-decay target: J_A - J_B = alpha * const
  // keeps one sign on the grid
  SystemState target_a = helpers::linear_saddle_state(1.0, 3);
  SystemState fast = helpers::linear_saddle_state(3.0, 3);
  SystemState start = target_a;
  start.u.head(3).setConstant(1.0);

  SkibaSettings set;
  set.isc.T = 4.0;
  set.isc.m = 15;
  set.isc.grading = 1.0;
  SkibaResult res = skiba_scan(start, target_a, fast, {0.3, 0.6, 0.9}, set);
  CHECK(!res.found);
  CHECK(res.grid.size() >= 2);
}
