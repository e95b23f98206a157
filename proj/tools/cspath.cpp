// Command-line driver: CSS continuation, branch switching, spectral
// reports, canonical-path continuation and Skiba scans, with plot-ready
// CSV output.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "cspath/config.hpp"
#include "cspath/continuation.hpp"
#include "cspath/errors.hpp"
#include "cspath/isc.hpp"
#include "cspath/model.hpp"
#include "cspath/pointio.hpp"
#include "cspath/spectral.hpp"
#include "cspath/value.hpp"

namespace fs = std::filesystem;
using namespace cspath;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitError = 2;

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

void warn_admissibility(const SystemState& s) {
  print_warnings(s.model->admissibility_warnings(s.n(), s.u, s.params));
}

// Persist a finished branch run: numbered point files plus branch.csv.
void write_branch_run(BranchRun& run, const RunConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  int n_bpt = 0, n_fpt = 0, n_pt = 0;
  std::vector<BranchRecord> records;
  const int last = static_cast<int>(run.points.size()) - 1;
  for (int i = 0; i <= last; ++i) {
    auto& bp = run.points[i];
    std::string name;
    switch (bp.record.point_type) {
      case PointType::bifurcation: name = "bpt" + std::to_string(++n_bpt); break;
      case PointType::fold: name = "fpt" + std::to_string(++n_fpt); break;
      case PointType::user_target: name = "pt" + std::to_string(++n_pt); break;
      case PointType::regular: {
        const bool keep = i == 0 || i == last ||
                          (cfg.save_every > 0 && bp.record.index % cfg.save_every == 0);
        if (keep) name = "pt" + std::to_string(++n_pt);
        break;
      }
    }
    if (!name.empty()) {
      const std::string file = out_dir + "/" + name;
      save_point(bp.state, bp.record.point_type, bp.record.n_unstable, file);
      bp.record.point_file = name;
    }
    records.push_back(bp.record);
  }
  write_branch_csv(records, out_dir + "/branch.csv");
  std::cout << "wrote " << records.size() << " branch records to " << out_dir
            << "/branch.csv (stop: " << run.stop_reason << ")\n";
}

int cmd_css_cont(const std::string& config_file, const std::string& from_point,
                 const std::string& out_dir) {
  const RunConfig cfg = parse_config(config_file);
  SystemState state;
  if (from_point.empty()) {
    state = make_initial_state(cfg);
  } else {
    state = load_point(from_point, 10 * cfg.continuation.newton_tol).state;
    resolve_active_param(cfg, state);
  }
  try {
    newton_correct(state, {cfg.continuation.newton_tol, cfg.continuation.newton_max_iter, 10});
  } catch (const NewtonFailure& e) {
    std::cerr << "error: initial Newton loop failed: " << e.what() << "\n";
    return kExitError;
  }
  warn_admissibility(state);
  BranchRun run = continue_branch(state, std::nullopt, cfg.continuation);
  print_warnings(run.warnings);
  write_branch_run(run, cfg, out_dir);
  return kExitOk;
}

int cmd_branch_switch(const std::string& config_file, const std::string& bif_file,
                      int direction, double ds, const std::string& out_dir) {
  const RunConfig cfg = parse_config(config_file);
  LoadedPoint lp = load_point(bif_file, 10 * cfg.continuation.newton_tol);
  resolve_active_param(cfg, lp.state);
  auto [state, tangent] = branch_switch(lp.state, direction, ds, cfg.continuation);
  BranchRun run = continue_branch(state, tangent, cfg.continuation);
  print_warnings(run.warnings);
  write_branch_run(run, cfg, out_dir);
  return kExitOk;
}

int cmd_spectral(const std::string& point_file, const std::string& out_dir, double c_T) {
  LoadedPoint lp = load_point(point_file);
  warn_admissibility(lp.state);
  const Projection proj = compute_projection(lp.state, c_T);
  std::cout << "defect " << proj.defect << ", spp " << (proj.has_spp ? "yes" : "no")
            << ", suggested T " << fmt17(proj.suggested_T) << "\n";
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_spectrum_csv(proj.eigenvalues, out_dir + "/spectrum.csv");
    write_spectral_summary(proj.defect, proj.has_spp, proj.suggested_T,
                           out_dir + "/spectral_summary.csv");
  }
  return kExitOk;
}

int cmd_isc(bool arc, const std::string& config_file, std::string from_file,
            std::string to_file, bool flip, const std::string& out_dir) {
  const RunConfig cfg = parse_config(config_file);
  if (flip) std::swap(from_file, to_file);
  LoadedPoint from = load_point(from_file, 10 * cfg.continuation.newton_tol);
  LoadedPoint to = load_point(to_file, 10 * cfg.continuation.newton_tol);
  if (from.state.model->name() != to.state.model->name())
    throw ConfigError("start and target points use different models");
  if ((from.state.params - to.state.params).cwiseAbs().maxCoeff() > 1e-12)
    throw ConfigError("start and target points have different parameter values");
  IscResult res = arc ? iscarc(from.state, to.state, std::nullopt, cfg.isc)
                      : iscnat(from.state, to.state, cfg.isc);
  print_warnings(res.warnings);
  fs::create_directories(out_dir);
  write_alpha_j_csv(res.alv, res.vv, out_dir + "/alpha_J.csv");
  if (res.last_path.values.size() > 0)
    save_path(res.last_path, to.state, out_dir + "/path_last");
  if (cfg.isc.retain_history)
    for (size_t i = 0; i < res.history.size(); ++i)
      save_path(res.history[i], to.state, out_dir + "/path_" + std::to_string(i + 1));
  std::cout << "achieved " << res.alv.size() << " alpha values (T = " << fmt17(res.T)
            << ")";
  if (res.fold_detected) std::cout << ", fold in alpha near " << fmt17(res.fold_alpha);
  std::cout << "\n";
  const bool stalled = !res.warnings.empty() &&
                       res.warnings.back().find("stalled") != std::string::npos;
  if (res.alv.empty() || stalled) return kExitPartial;
  return kExitOk;
}

int cmd_skiba(const std::string& config_file, const std::string& from_file,
              const std::string& to_a_file, const std::string& to_b_file,
              const std::string& grid_arg, const std::string& out_dir) {
  const RunConfig cfg = parse_config(config_file);
  LoadedPoint from = load_point(from_file, 10 * cfg.continuation.newton_tol);
  LoadedPoint to_a = load_point(to_a_file, 10 * cfg.continuation.newton_tol);
  LoadedPoint to_b = load_point(to_b_file, 10 * cfg.continuation.newton_tol);
  for (const LoadedPoint* lp : {&to_a, &to_b}) {
    if (lp->state.model->name() != from.state.model->name())
      throw ConfigError("skiba: the three points use different models");
    if ((lp->state.params - from.state.params).cwiseAbs().maxCoeff() > 1e-12)
      throw ConfigError("skiba: the three points have different parameter values");
  }
  std::vector<double> grid = cfg.skiba_grid;
  if (!grid_arg.empty()) {
    grid.clear();
    std::string t = grid_arg;
    for (auto& ch : t)
      if (ch == ',') ch = ' ';
    std::istringstream iss(t);
    double v;
    while (iss >> v) grid.push_back(v);
  }
  if (grid.size() < 2) throw ConfigError("skiba: need a grid of at least 2 alpha values");
  SkibaSettings set;
  set.isc = cfg.isc;
  set.skiba_tol = cfg.skiba_tol;
  set.b_alvin = cfg.skiba_b_alvin;
  SkibaResult res = skiba_scan(from.state, to_a.state, to_b.state, grid, set);
  print_warnings(res.warnings);
  fs::create_directories(out_dir);
  write_skiba_csv(res, out_dir + "/skiba.csv");
  write_skiba_summary(res, out_dir + "/skiba_summary.csv");
  if (res.found) {
    std::cout << "skiba point at alpha = " << fmt17(res.alpha_star)
              << " (|J_A - J_B| = " << fmt17(res.value_gap) << ")\n";
    if (res.path_a.values.size() > 0) save_path(res.path_a, to_a.state, out_dir + "/path_A");
    if (res.path_b.values.size() > 0) save_path(res.path_b, to_b.state, out_dir + "/path_B");
  } else {
    std::cout << "no Skiba point found on the grid\n";
  }
  return kExitOk;
}

int cmd_value(const std::string& point_file, const std::string& path_file) {
  if (!point_file.empty()) {
    LoadedPoint lp = load_point(point_file);
    warn_admissibility(lp.state);
    const auto [jca, jdisc] = css_value(lp.state);
    std::cout << "J_ca = " << fmt17(jca) << "\nJ = J_ca/rho = " << fmt17(jdisc) << "\n";
    return kExitOk;
  }
  LoadedPath lp = load_path(path_file);
  const double J = path_value(lp.path, lp.ref);
  std::cout << "J = " << fmt17(J) << " (T = " << fmt17(lp.path.mesh.T())
            << ", alpha = " << fmt17(lp.path.alpha) << ")\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"canonical steady states and canonical paths for infinite-horizon "
               "optimal control of parabolic PDEs"};
  app.require_subcommand(1);

  std::string config_file, out_dir, from_point, bif_file, to_file;
  std::string to_a_file, to_b_file, grid_arg, point_file, path_file;
  int direction = 1;
  double ds = 0.05, c_T = 15.0;
  bool flip = false;

  auto* cont = app.add_subcommand("css-cont", "continue a CSS branch in the active parameter");
  cont->add_option("-c,--config", config_file)->required();
  cont->add_option("--out", out_dir)->required();
  cont->add_option("--from", from_point, "warm-start point file");

  auto* swi = app.add_subcommand("branch-switch", "switch to a bifurcating branch and continue");
  swi->add_option("-c,--config", config_file)->required();
  swi->add_option("--bif", bif_file, "saved bifurcation point")->required();
  swi->add_option("--dir", direction)->check(CLI::IsMember({1, -1}));
  swi->add_option("--ds", ds);
  swi->add_option("--out", out_dir)->required();

  auto* spec = app.add_subcommand("spectral", "defect, saddle-point property and projection data");
  spec->add_option("--point", point_file)->required();
  spec->add_option("--out", out_dir);
  spec->add_option("--c-T", c_T);

  auto* nat = app.add_subcommand("isc-nat", "natural initial-state continuation of canonical paths");
  nat->add_option("-c,--config", config_file)->required();
  nat->add_option("--from", from_point)->required();
  nat->add_option("--to", to_file)->required();
  nat->add_flag("--flip", flip, "interchange start and target");
  nat->add_option("--out", out_dir)->required();

  auto* arc = app.add_subcommand("isc-arc", "arclength initial-state continuation (rides folds in alpha)");
  arc->add_option("-c,--config", config_file)->required();
  arc->add_option("--from", from_point)->required();
  arc->add_option("--to", to_file)->required();
  arc->add_flag("--flip", flip);
  arc->add_option("--out", out_dir)->required();

  auto* ski = app.add_subcommand("skiba", "locate an equal-value threshold between two target CSS");
  ski->add_option("-c,--config", config_file)->required();
  ski->add_option("--from", from_point)->required();
  ski->add_option("--to-a", to_a_file)->required();
  ski->add_option("--to-b", to_b_file)->required();
  ski->add_option("--grid", grid_arg, "alpha grid, comma separated (overrides config)");
  ski->add_option("--out", out_dir)->required();

  auto* val = app.add_subcommand("value", "objective values of a CSS point or a path file");
  val->add_option("--point", point_file);
  val->add_option("--path", path_file);

  CLI11_PARSE(app, argc, argv);

  try {
    if (cont->parsed()) return cmd_css_cont(config_file, from_point, out_dir);
    if (swi->parsed()) return cmd_branch_switch(config_file, bif_file, direction, ds, out_dir);
    if (spec->parsed()) return cmd_spectral(point_file, out_dir, c_T);
    if (nat->parsed()) return cmd_isc(false, config_file, from_point, to_file, flip, out_dir);
    if (arc->parsed()) return cmd_isc(true, config_file, from_point, to_file, flip, out_dir);
    if (ski->parsed())
      return cmd_skiba(config_file, from_point, to_a_file, to_b_file, grid_arg, out_dir);
    if (val->parsed()) {
      if (point_file.empty() && path_file.empty()) {
        std::cerr << "error: value needs --point or --path\n";
        return kExitError;
      }
      return cmd_value(point_file, path_file);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
