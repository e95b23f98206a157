#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "cspath/errors.hpp"
#include "cspath/isc.hpp"
#include "cspath/value.hpp"
#include "helpers.hpp"

using namespace cspath;

namespace {

IscSettings linear_settings() {
  IscSettings s;
  s.T = 4.0;
  s.m = 17;
  s.grading = 1.0;
  s.sig = 0.1;
  s.n_steps = 40;
  return s;
}

}  // namespace

TEST_CASE("iscnat: alpha = 0 gives the constant path and its closed-form value") {
  oracles::SlocParams p;
  p.b = 0.65;
  SystemState css = helpers::sloc_flat_state(p, 40, 0);
  IscSettings set;
  set.T = 100.0;
  set.m = 50;
  set.alvin = {0.0};
  IscResult res = iscnat(css, css, set);
  REQUIRE(res.alv.size() == 1);
  const double rho = 0.03;
  const double expect = j_ca(css) * (1.0 - std::exp(-rho * 100.0)) / rho;
  CHECK(std::abs(res.vv[0] - expect) <= 1e-6 * std::abs(expect));
}

TEST_CASE("iscnat on the linear model: all targets, J linear in alpha") {
  SystemState target = helpers::linear_saddle_state(1.2, 4);
  SystemState start = target;
  start.u.head(4).setConstant(1.0);  // v0 = 1, target CSS is the origin

  IscSettings set = linear_settings();
  set.alvin = {0.25, 0.5, 1.0};
  IscResult res = iscnat(start, target, set);
  REQUIRE(res.alv.size() == 3);
  CHECK(res.alv.back() == 1.0);
  // the model is linear, so the path and hence J scale linearly in alpha
  CHECK(res.vv[0] / res.vv[2] == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(res.vv[1] / res.vv[2] == doctest::Approx(0.5).epsilon(1e-10));

  // predictor choice does not change converged results
  IscSettings sec = set;
  sec.msw = 1;
  IscResult res2 = iscnat(start, target, sec);
  REQUIRE(res2.alv.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(res2.alv[i] == res.alv[i]);
    CHECK(res2.vv[i] == doctest::Approx(res.vv[i]).epsilon(1e-8));
  }
}

TEST_CASE("iscnat refuses targets without the saddle-point property") {
  oracles::SlocParams p;
  p.b = 0.65;
  SystemState fsi = helpers::sloc_flat_state(p, 40, 1);  // defect -5
  SystemState fsc = helpers::sloc_flat_state(p, 40, 0);
  IscSettings set;
  set.alvin = {0.5};
  CHECK_THROWS_AS(iscnat(fsc, fsi, set), ProjectionMismatch);
}

TEST_CASE("iscarc startup with s = 0, s_alpha = 1 reproduces the natural step") {
  SystemState target = helpers::linear_saddle_state(1.2, 4);
  SystemState start = target;
  start.u.head(4).setConstant(1.0);

  IscSettings set = linear_settings();
  set.sig = 0.2;
  set.n_steps = 1;
  IscResult arc = iscarc(start, target, std::nullopt, set);
  REQUIRE(arc.alv.size() == 1);
  CHECK(arc.alv[0] == doctest::Approx(0.2).epsilon(1e-12));

  IscSettings nat = linear_settings();
  nat.alvin = {0.2};
  IscResult natural = iscnat(start, target, nat);
  REQUIRE(natural.alv.size() == 1);
  CHECK(arc.vv[0] == doctest::Approx(natural.vv[0]).epsilon(1e-10));
}

TEST_CASE("iscarc: resume after 3 steps equals a straight 23-step run") {
  SystemState target = helpers::linear_saddle_state(0.8, 3);
  SystemState start = target;
  start.u.head(3).setConstant(0.7);

  IscSettings set = linear_settings();
  set.sig = 0.05;
  set.sig_max = 0.2;

  IscSettings s23 = set;
  s23.n_steps = 23;
  IscResult full = iscarc(start, target, std::nullopt, s23);

  IscSettings s3 = set;
  s3.n_steps = 3;
  IscResult head = iscarc(start, target, std::nullopt, s3);
  REQUIRE(head.resume.has_value());
  IscSettings s20 = set;
  s20.n_steps = 20;
  IscResult tail = iscarc(start, target, head.resume, s20);

  std::vector<double> alv = head.alv, vv = head.vv;
  alv.insert(alv.end(), tail.alv.begin(), tail.alv.end());
  vv.insert(vv.end(), tail.vv.begin(), tail.vv.end());
  REQUIRE(alv.size() == full.alv.size());
  for (size_t i = 0; i < alv.size(); ++i) {
    CHECK(alv[i] == doctest::Approx(full.alv[i]).epsilon(1e-8));
    CHECK(vv[i] == doctest::Approx(full.vv[i]).epsilon(1e-8));
  }
}

TEST_CASE("iscarc on a fold-free problem reports no fold and increasing alpha") {
  SystemState target = helpers::linear_saddle_state(1.0, 3);
  SystemState start = target;
  start.u.head(3).setConstant(1.0);
  IscSettings set = linear_settings();
  IscResult res = iscarc(start, target, std::nullopt, set);
  REQUIRE(res.alv.size() >= 3);
  CHECK(!res.fold_detected);
  for (size_t i = 0; i + 1 < res.alv.size(); ++i) CHECK(res.alv[i] < res.alv[i + 1]);
  // stops after the first step beyond 1 + margin; only the last entry may
  // exceed the window
  CHECK(res.alv.back() > 1.0);
  for (size_t i = 0; i + 1 < res.alv.size(); ++i)
    CHECK(res.alv[i] <= 1.0 + set.alpha_margin);
}

TEST_CASE("correct_at_alpha on a converged path at its own alpha is a no-op") {
  SystemState target = helpers::linear_saddle_state(1.2, 4);
  SystemState start = target;
  start.u.head(4).setConstant(1.0);
  IscSettings set = linear_settings();
  set.alvin = {0.5};
  set.retain_history = true;
  IscResult res = iscnat(start, target, set);
  REQUIRE(res.alv.size() == 1);
  const CanonicalPath& p = res.history[0];
  const CanonicalPath again =
      correct_at_alpha(p, 0.5, Eigen::VectorXd(start.states()), target, set);
  CHECK((again.values - p.values).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(again.value == doctest::Approx(p.value).epsilon(1e-12));
}

TEST_CASE("vegOC flat CSS: Newton polish from the 0D oracle and SPP") {
  oracles::VegParams q;
  q.R = 28.0;
  const auto roots = oracles::veg_flat_roots(q);
  REQUIRE(roots.size() >= 2);
  // vegetated root: v large, lambda < p
  SystemState veg = helpers::veg_flat_state(q, 31, static_cast<int>(roots.size()) - 1);
  CHECK(assemble_G(veg).cwiseAbs().maxCoeff() < 1e-8);
  newton_correct(veg);

  const Projection proj = compute_projection(veg);
  CHECK(proj.defect == 0);
  CHECK(proj.has_spp);
  CHECK(proj.suggested_T > 50.0);

  // trivial-path identity for the 4-component model as well
  IscSettings set;
  set.T = 150.0;
  set.m = 60;
  set.alvin = {0.0};
  IscResult res = iscnat(veg, veg, set);
  const double rho = q.rho;
  const double expect = j_ca(veg) * (1.0 - std::exp(-rho * 150.0)) / rho;
  CHECK(std::abs(res.vv[0] - expect) <= 1e-6 * std::abs(expect));
}
