#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "cspath/config.hpp"
#include "cspath/errors.hpp"
#include "cspath/isc.hpp"
#include "cspath/pointio.hpp"
#include "helpers.hpp"

using namespace cspath;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path dir;
  TempDir() {
    dir = fs::temp_directory_path() / ("cspath_test_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~TempDir() { fs::remove_all(dir); }
  std::string file(const std::string& name) const { return (dir / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("point file round trip is value-exact and preserves the residual") {
  TempDir tmp;
  oracles::SlocParams p;
  p.b = 0.65;
  SystemState s = helpers::sloc_flat_state(p, 40, 0);
  newton_correct(s);
  const double gres_before = assemble_G(s).cwiseAbs().maxCoeff();

  save_point(s, PointType::user_target, 40, tmp.file("pt1"));
  const LoadedPoint lp = load_point(tmp.file("pt1"));

  CHECK(lp.type == PointType::user_target);
  CHECK(lp.n_unstable == 40);
  CHECK((lp.state.u - s.u).cwiseAbs().maxCoeff() == 0.0);        // bitwise
  CHECK((lp.state.params - s.params).cwiseAbs().maxCoeff() == 0.0);
  const double gres_after = assemble_G(lp.state).cwiseAbs().maxCoeff();
  CHECK(std::abs(gres_after - gres_before) <= 1e-12);
  CHECK(j_ca(lp.state) == doctest::Approx(lp.j_ca_saved).epsilon(1e-15));

  // saving the loaded state reproduces the file byte for byte
  save_point(lp.state, lp.type, lp.n_unstable, tmp.file("pt1b"));
  CHECK(slurp(tmp.file("pt1")) == slurp(tmp.file("pt1b")));
}

TEST_CASE("stale point files are rejected") {
  TempDir tmp;
  oracles::SlocParams p;
  SystemState s = helpers::sloc_flat_state(p, 30, 0);
  s.u(3) += 0.05;  // no longer a CSS
  save_point(s, PointType::regular, -1, tmp.file("stale"));
  CHECK_THROWS_AS(load_point(tmp.file("stale")), IoError);
  CHECK_NOTHROW(load_point(tmp.file("stale"), 1e6));  // diagnostics override
}

TEST_CASE("path file round trip is value-exact") {
  TempDir tmp;
  register_model(std::make_shared<helpers::LinearSaddleModel>(1.2));
  SystemState target = helpers::linear_saddle_state(1.2, 4);
  SystemState start = target;
  start.u.head(4).setConstant(1.0);
  IscSettings set;
  set.T = 3.0;
  set.m = 9;
  set.grading = 2.0;
  set.alvin = {0.5};
  IscResult res = iscnat(start, target, set);
  REQUIRE(res.alv.size() == 1);

  save_path(res.last_path, target, tmp.file("path1"));
  const LoadedPath lp = load_path(tmp.file("path1"));
  CHECK((lp.path.values - res.last_path.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK((lp.path.mesh.points - res.last_path.mesh.points).cwiseAbs().maxCoeff() == 0.0);
  CHECK(lp.path.alpha == res.last_path.alpha);
  CHECK(lp.path.value == res.last_path.value);
  CHECK(lp.ref.model->name() == "linear-saddle");
}

TEST_CASE("branch csv: one header row, deterministic bytes") {
  TempDir tmp;
  std::vector<BranchRecord> recs(2);
  recs[0].index = 0;
  recs[0].point_type = PointType::regular;
  recs[0].n_unstable = 50;
  recs[0].param = 0.55;
  recs[0].l2norm = 11.99764387956666;
  recs[0].j_ca = -2.543873;
  recs[0].j_disc = recs[0].j_ca / 0.03;
  recs[0].point_file = "pt1";
  recs[1] = recs[0];
  recs[1].index = 1;
  recs[1].point_type = PointType::fold;
  recs[1].param = 1.0 / 3.0;

  write_branch_csv(recs, tmp.file("branch.csv"));
  write_branch_csv(recs, tmp.file("branch2.csv"));
  const std::string a = slurp(tmp.file("branch.csv"));
  CHECK(a == slurp(tmp.file("branch2.csv")));
  CHECK(a.find("index,point_type,n_unstable,param,l2norm,j_ca,j_disc,point_file\n") == 0);
  CHECK(a.find("0.33333333333333331") != std::string::npos);  // 17 significant digits
}

TEST_CASE("config parsing: sections, lists, named parameters, errors") {
  const std::string text = R"(
# comment
[model]
name = sloc
active_param = b
rho = 0.03
b = 0.55
gamma = 0.5
D = 0.5

[init]
components = 0.3 -13

[domain]
x_min = -14.279966607226332
x_max = 14.279966607226332
n_nodes = 50

[continuation]
ds_init = 0.1
lam_min = 0.549
lam_max = 0.8
usrlam = 0.55 0.6 0.65 0.7 0.75
max_steps = 60

[path]
T = auto
m = 10
grading = 2

[isc]
alvin = 0.1 0.25 0.5 0.75 1
sig = 0.1
)";
  const RunConfig cfg = parse_config_text(text);
  CHECK(cfg.model_name == "sloc");
  CHECK(cfg.continuation.usrlam.size() == 5);
  CHECK(cfg.continuation.lam_min == 0.549);
  CHECK(cfg.isc.alvin.size() == 5);
  CHECK(cfg.isc.T == 0);  // auto

  SystemState s = make_initial_state(cfg);
  CHECK(s.model->name() == "sloc");
  CHECK(s.active_param == 1);
  CHECK(s.u(0) == 0.3);
  CHECK(s.u(2 * 50 - 1) == -13.0);
  CHECK(s.params(1) == 0.55);

  // unknown parameter name
  const std::string bad = text + "\n[model]\nnosuch = 1\n";
  CHECK_THROWS_AS(make_initial_state(parse_config_text(bad)), ConfigError);

  // missing parameter
  const std::string missing = R"(
[model]
name = sloc
rho = 0.03
[init]
components = 0.3 -13
[domain]
n_nodes = 50
)";
  CHECK_THROWS_AS(make_initial_state(parse_config_text(missing)), ConfigError);
}

TEST_CASE("config validation errors") {
  CHECK_THROWS_AS(parse_config_text("[domain]\nn_nodes = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[model]\nname = sloc\n[domain]\nn_nodes = 9\n"
                                    "[isc]\nalvin = 0.5 0.2\n"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config_text("[model\nname = x\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("/nonexistent/config/file"), ConfigError);
}

TEST_CASE("spectral and skiba report files") {
  TempDir tmp;
  Eigen::VectorXcd lam(3);
  lam << std::complex<double>(0.5, 0.0), std::complex<double>(-0.25, 1.0),
      std::complex<double>(-0.25, -1.0);
  write_spectrum_csv(lam, tmp.file("spectrum.csv"));
  const std::string s = slurp(tmp.file("spectrum.csv"));
  CHECK(s.find("re_lambda,im_lambda\n") == 0);
  // sorted ascending by real part
  CHECK(s.find("-0.25,-1") < s.find("-0.25,1"));
  CHECK(s.find("-0.25,1") < s.find("0.5,0"));

  SkibaResult sk;
  sk.found = true;
  sk.alpha_star = 0.454;
  sk.value_gap = 0.01;
  sk.grid.push_back({0.4, -74.0, -73.9, true});
  sk.grid.push_back({0.5, -74.2, -74.4, true});
  write_skiba_csv(sk, tmp.file("skiba.csv"));
  write_skiba_summary(sk, tmp.file("skiba_summary.csv"));
  CHECK(slurp(tmp.file("skiba.csv")).find("alpha,J_A,J_B,J_A_minus_J_B\n") == 0);
  CHECK(slurp(tmp.file("skiba_summary.csv")).find("found,alpha_star,value_gap\n") == 0);
}
