#include "cspath/config.hpp"

#include <fstream>
#include <sstream>

#include "cspath/errors.hpp"

namespace cspath {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<double> numbers(const std::string& s, const std::string& key) {
  std::string t = s;
  for (auto& ch : t)
    if (ch == ',') ch = ' ';
  std::istringstream iss(t);
  std::vector<double> out;
  double v;
  while (iss >> v) out.push_back(v);
  if (!iss.eof())
    throw ConfigError("config key '" + key + "': cannot parse '" + s + "' as numbers");
  return out;
}

struct Ini {
  // section -> key -> raw value
  std::map<std::string, std::map<std::string, std::string>> data;

  bool has(const std::string& sec, const std::string& key) const {
    auto s = data.find(sec);
    return s != data.end() && s->second.count(key) > 0;
  }
  std::string raw(const std::string& sec, const std::string& key) const {
    return data.at(sec).at(key);
  }
  double num(const std::string& sec, const std::string& key, double dflt) const {
    if (!has(sec, key)) return dflt;
    const auto v = numbers(raw(sec, key), sec + "." + key);
    if (v.size() != 1) throw ConfigError("config key '" + sec + "." + key + "' is not scalar");
    return v[0];
  }
  int integer(const std::string& sec, const std::string& key, int dflt) const {
    return static_cast<int>(num(sec, key, dflt));
  }
  std::vector<double> list(const std::string& sec, const std::string& key,
                           std::vector<double> dflt) const {
    if (!has(sec, key)) return dflt;
    return numbers(raw(sec, key), sec + "." + key);
  }
  std::string str(const std::string& sec, const std::string& key,
                  const std::string& dflt) const {
    return has(sec, key) ? raw(sec, key) : dflt;
  }
};

Ini parse_ini(std::istream& in, const std::string& origin) {
  Ini ini;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section");
      section = trim(line.substr(1, line.size() - 2));
      ini.data[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    ini.data[section][key] = val;
  }
  return ini;
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  std::istringstream iss(text);
  const Ini ini = parse_ini(iss, origin);
  RunConfig cfg;

  if (!ini.has("model", "name")) throw ConfigError("config: [model] name is required");
  cfg.model_name = ini.raw("model", "name");
  cfg.active_param = ini.str("model", "active_param", "");
  auto model_sec = ini.data.find("model");
  if (model_sec != ini.data.end()) {
    for (const auto& [key, val] : model_sec->second) {
      if (key == "name" || key == "active_param") continue;
      const auto v = numbers(val, "model." + key);
      if (v.size() != 1)
        throw ConfigError("config: model parameter '" + key + "' must be scalar");
      cfg.params[key] = v[0];
    }
  }
  cfg.init_components = ini.list("init", "components", {});

  cfg.x_min = ini.num("domain", "x_min", 0.0);
  cfg.x_max = ini.num("domain", "x_max", 1.0);
  cfg.n_nodes = ini.integer("domain", "n_nodes", 0);
  if (cfg.n_nodes < 3) throw ConfigError("config: [domain] n_nodes >= 3 is required");

  auto& c = cfg.continuation;
  c.ds_init = ini.num("continuation", "ds_init", c.ds_init);
  c.ds_min = ini.num("continuation", "ds_min", c.ds_min);
  c.ds_max = ini.num("continuation", "ds_max", c.ds_max);
  c.lam_min = ini.num("continuation", "lam_min", c.lam_min);
  c.lam_max = ini.num("continuation", "lam_max", c.lam_max);
  c.usrlam = ini.list("continuation", "usrlam", {});
  c.newton_tol = ini.num("continuation", "newton_tol", c.newton_tol);
  c.newton_max_iter = ini.integer("continuation", "newton_max_iter", c.newton_max_iter);
  c.xi = ini.num("continuation", "xi", c.xi);
  c.bifcheck = ini.integer("continuation", "bifcheck", c.bifcheck ? 1 : 0) != 0;
  c.n_eig_watch = ini.integer("continuation", "n_eig_watch", c.n_eig_watch);
  c.max_steps = ini.integer("continuation", "max_steps", c.max_steps);
  c.bif_param_tol = ini.num("continuation", "bif_param_tol", c.bif_param_tol);
  cfg.save_every = ini.integer("continuation", "save_every", 0);
  if (!(c.ds_min <= c.ds_max) || !(c.ds_min > 0))
    throw ConfigError("config: need 0 < ds_min <= ds_max");
  if (!(c.newton_tol > 0)) throw ConfigError("config: newton_tol must be positive");

  auto& p = cfg.isc;
  const std::string traw = ini.str("path", "T", "auto");
  if (traw != "auto") {
    const auto v = numbers(traw, "path.T");
    if (v.size() != 1 || !(v[0] > 0))
      throw ConfigError("config: path.T must be 'auto' or a positive number");
    p.T = v[0];
  }
  p.m = ini.integer("path", "m", p.m);
  p.grading = ini.num("path", "grading", p.grading);
  p.tol_bvp = ini.num("path", "tol_bvp", p.tol_bvp);
  p.c_T = ini.num("path", "c_T", p.c_T);
  p.bvp_max_iter = ini.integer("path", "max_iter", p.bvp_max_iter);

  p.alvin = ini.list("isc", "alvin", {0.1, 0.25, 0.5, 0.75, 1.0});
  p.sig = ini.num("isc", "sig", p.sig);
  p.sig_min = ini.num("isc", "sig_min", p.sig_min);
  p.sig_max = ini.num("isc", "sig_max", p.sig_max);
  p.n_steps = ini.integer("isc", "n_steps", p.n_steps);
  p.msw = ini.integer("isc", "msw", p.msw);
  p.xi_arc = ini.num("isc", "xi_arc", p.xi_arc);
  p.retain_history = ini.integer("isc", "retain", 0) != 0;
  p.alpha_margin = ini.num("isc", "alpha_margin", p.alpha_margin);
  if (!(p.sig_min <= p.sig && p.sig <= p.sig_max) || !(p.sig_min > 0))
    throw ConfigError("config: need 0 < sig_min <= sig <= sig_max");
  for (size_t i = 0; i + 1 < p.alvin.size(); ++i)
    if (!(p.alvin[i] < p.alvin[i + 1]))
      throw ConfigError("config: isc.alvin must be increasing");
  for (double a : p.alvin)
    if (a < 0.0 || a > 1.0)
      throw ConfigError("config: isc.alvin values must lie in [0, 1]");

  cfg.skiba_grid = ini.list("skiba", "grid", {});
  cfg.skiba_tol = ini.num("skiba", "tol", cfg.skiba_tol);
  cfg.skiba_b_alvin = ini.list("skiba", "b_alvin", cfg.skiba_b_alvin);

  return cfg;
}

RunConfig parse_config(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read config file '" + file + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), file);
}

SystemState make_initial_state(const RunConfig& config) {
  SystemState s;
  s.model = find_model(config.model_name);
  s.fem = std::make_shared<FemOps>(assemble(build_mesh(config.x_min, config.x_max,
                                                       config.n_nodes)));
  s.params.resize(s.model->n_params());
  std::vector<bool> seen(s.model->n_params(), false);
  for (const auto& [name, val] : config.params) {
    const int idx = s.model->param_index(name);  // throws on unknown names
    s.params(idx) = val;
    seen[idx] = true;
  }
  for (int i = 0; i < s.model->n_params(); ++i)
    if (!seen[i])
      throw ConfigError("config: model parameter '" + s.model->param_names()[i] +
                        "' is not set");
  resolve_active_param(config, s);
  const int nc = s.model->n_comps();
  if (static_cast<int>(config.init_components.size()) != nc)
    throw ConfigError("config: [init] components must list " + std::to_string(nc) +
                      " values for model '" + s.model->name() + "'");
  s.u.resize(nc * config.n_nodes);
  for (int c = 0; c < nc; ++c)
    s.u.segment(c * config.n_nodes, config.n_nodes)
        .setConstant(config.init_components[c]);
  return s;
}

void resolve_active_param(const RunConfig& config, SystemState& state) {
  state.active_param = config.active_param.empty()
                           ? state.model->active_param_default()
                           : state.model->param_index(config.active_param);
}

}  // namespace cspath
