#pragma once

#include <map>
#include <string>
#include <vector>

#include "cspath/continuation.hpp"
#include "cspath/isc.hpp"
#include "cspath/model.hpp"
#include "cspath/value.hpp"

namespace cspath {

/// One parsed run configuration: nested sections of key = value.
struct RunConfig {
  std::string model_name;
  std::map<std::string, double> params;  // by parameter name
  std::string active_param;              // by name; empty = model default
  std::vector<double> init_components;   // constant initial guess per component

  double x_min = 0, x_max = 1;
  int n_nodes = 0;

  ContinuationSettings continuation;
  int save_every = 0;  // 0 = save only special points and endpoints

  IscSettings isc;

  std::vector<double> skiba_grid;
  double skiba_tol = 0.05;
  std::vector<double> skiba_b_alvin = {0.25, 0.5, 0.75, 1.0};
};

/// Parse an INI-style config ([section], key = value, # comments).
RunConfig parse_config(const std::string& file);
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<string>");

/// Build the initial SystemState from the config (model lookup, mesh and
/// FEM assembly, constant per-component initial guess, named parameters).
SystemState make_initial_state(const RunConfig& config);

/// Resolve settings that need the model (active parameter name).
void resolve_active_param(const RunConfig& config, SystemState& state);

}  // namespace cspath
