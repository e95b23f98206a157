#include "cspath/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "cspath/errors.hpp"

namespace cspath {

int Model::param_index(const std::string& name) const {
  auto it = std::find(param_names_.begin(), param_names_.end(), name);
  if (it == param_names_.end())
    throw ConfigError("model '" + name_ + "' has no parameter named '" + name + "'");
  return static_cast<int>(it - param_names_.begin());
}

NodalJacobian Model::reaction_jac(int n_nodes, const Eigen::VectorXd& u,
                                  const Eigen::VectorXd& params) const {
  const int nc = n_comps();
  NodalJacobian jac(nc, std::vector<Eigen::VectorXd>(nc));
  Eigen::VectorXd up = u, um = u;
  for (int cj = 0; cj < nc; ++cj) {
    Eigen::VectorXd eps(n_nodes);
    for (int k = 0; k < n_nodes; ++k)
      eps(k) = 1e-6 * std::max(1.0, std::abs(u(cj * n_nodes + k)));
    up.segment(cj * n_nodes, n_nodes) += eps;
    um.segment(cj * n_nodes, n_nodes) -= eps;
    const Eigen::VectorXd fp = reaction(n_nodes, up, params);
    const Eigen::VectorXd fm = reaction(n_nodes, um, params);
    up.segment(cj * n_nodes, n_nodes) = u.segment(cj * n_nodes, n_nodes);
    um.segment(cj * n_nodes, n_nodes) = u.segment(cj * n_nodes, n_nodes);
    for (int ci = 0; ci < nc; ++ci) {
      jac[ci][cj] = (fp.segment(ci * n_nodes, n_nodes) - fm.segment(ci * n_nodes, n_nodes))
                        .cwiseQuotient(2.0 * eps);
    }
  }
  return jac;
}

Eigen::VectorXd pack_components(const std::vector<Eigen::VectorXd>& comps) {
  if (comps.empty()) throw DimensionError("pack_components: no components");
  const int n = static_cast<int>(comps[0].size());
  Eigen::VectorXd u(static_cast<int>(comps.size()) * n);
  for (size_t c = 0; c < comps.size(); ++c) {
    if (comps[c].size() != n)
      throw DimensionError("pack_components: component lengths differ");
    u.segment(static_cast<int>(c) * n, n) = comps[c];
  }
  return u;
}

std::vector<Eigen::VectorXd> unpack_components(const Eigen::VectorXd& u, int n_comps) {
  if (n_comps <= 0 || u.size() % n_comps != 0)
    throw DimensionError("unpack_components: length not divisible by component count");
  const int n = static_cast<int>(u.size()) / n_comps;
  std::vector<Eigen::VectorXd> comps(n_comps);
  for (int c = 0; c < n_comps; ++c) comps[c] = u.segment(c * n, n);
  return comps;
}

namespace {

void check_state_dims(const SystemState& s) {
  if (!s.model || !s.fem) throw DimensionError("SystemState: model/fem not set");
  if (s.u.size() != s.dim())
    throw DimensionError("SystemState: u has wrong length");
  if (s.params.size() != s.model->n_params())
    throw DimensionError("SystemState: params has wrong length");
  if (s.active_param < 0 || s.active_param >= s.params.size())
    throw DimensionError("SystemState: active_param out of range");
}

}  // namespace

Eigen::VectorXd assemble_G(const SystemState& state) {
  check_state_dims(state);
  const int n = state.n();
  const int nc = state.n_comps();
  const int N = state.model->n_states();
  const Eigen::VectorXd f = state.model->reaction(n, state.u, state.params);
  if (f.size() != state.dim())
    throw DimensionError("reaction returned wrong length");
  const Eigen::VectorXd D = state.model->diffusion(state.params);
  Eigen::VectorXd r(state.dim());
  for (int c = 0; c < nc; ++c) {
    const double d = (c < N ? D(c) : -D(c - N));
    r.segment(c * n, n) =
        d * (state.fem->K * state.comp(c)) - state.fem->M * f.segment(c * n, n);
  }
  return r;
}

Eigen::SparseMatrix<double> assemble_G_jac(const SystemState& state) {
  check_state_dims(state);
  const int n = state.n();
  const int nc = state.n_comps();
  const int N = state.model->n_states();
  const NodalJacobian jac = state.model->reaction_jac(n, state.u, state.params);
  const Eigen::VectorXd D = state.model->diffusion(state.params);
  const auto& M = state.fem->M;
  const auto& K = state.fem->K;

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(nc) * nc * (3 * n) + static_cast<size_t>(nc) * 3 * n);
  for (int ci = 0; ci < nc; ++ci) {
    const double d = (ci < N ? D(ci) : -D(ci - N));
    for (int col = 0; col < K.outerSize(); ++col)
      for (Eigen::SparseMatrix<double>::InnerIterator it(K, col); it; ++it)
        trip.emplace_back(ci * n + static_cast<int>(it.row()), ci * n + col,
                          d * it.value());
    for (int cj = 0; cj < nc; ++cj) {
      const Eigen::VectorXd& diag = jac[ci][cj];
      // -M * diag(dfci/ducj): column k of the block scales M's column k
      for (int col = 0; col < M.outerSize(); ++col)
        for (Eigen::SparseMatrix<double>::InnerIterator it(M, col); it; ++it)
          trip.emplace_back(ci * n + static_cast<int>(it.row()), cj * n + col,
                            -it.value() * diag(col));
    }
  }
  Eigen::SparseMatrix<double> J(state.dim(), state.dim());
  J.setFromTriplets(trip.begin(), trip.end());
  J.makeCompressed();
  return J;
}

Eigen::VectorXd assemble_G_dparam(const SystemState& state) {
  SystemState s = state;
  const double lam = state.lam();
  const double eps = 1e-6 * std::max(1.0, std::abs(lam));
  s.set_lam(lam + eps);
  const Eigen::VectorXd gp = assemble_G(s);
  s.set_lam(lam - eps);
  const Eigen::VectorXd gm = assemble_G(s);
  return (gp - gm) / (2.0 * eps);
}

Eigen::SparseMatrix<double> block_mass(const FemOps& fem, int n_comps) {
  const int n = fem.n();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(n_comps) * 3 * n);
  for (int c = 0; c < n_comps; ++c)
    for (int col = 0; col < fem.M.outerSize(); ++col)
      for (Eigen::SparseMatrix<double>::InnerIterator it(fem.M, col); it; ++it)
        trip.emplace_back(c * n + static_cast<int>(it.row()), c * n + col, it.value());
  Eigen::SparseMatrix<double> Mb(n_comps * n, n_comps * n);
  Mb.setFromTriplets(trip.begin(), trip.end());
  Mb.makeCompressed();
  return Mb;
}

double j_ca(const SystemState& state) {
  check_state_dims(state);
  const Eigen::VectorXd jc = state.model->local_current_value(state.n(), state.u, state.params);
  return integrate(*state.fem, jc) / state.fem->mesh.domain_length;
}

double l2_norm(const SystemState& state) {
  double s = 0.0;
  for (int c = 0; c < state.n_comps(); ++c) {
    const auto uc = state.comp(c);
    s += uc.dot(state.fem->M * uc);
  }
  return std::sqrt(s / state.fem->mesh.domain_length);
}

namespace {

std::map<std::string, std::shared_ptr<const Model>>& registry() {
  static std::map<std::string, std::shared_ptr<const Model>> models;
  return models;
}

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

// defined in sloc.cpp / vegoc.cpp
std::shared_ptr<const Model> make_sloc_model();
std::shared_ptr<const Model> make_vegoc_model();

void register_model(std::shared_ptr<const Model> model) {
  std::lock_guard<std::mutex> lock(registry_mutex());
  registry()[model->name()] = std::move(model);
}

std::shared_ptr<const Model> find_model(const std::string& name) {
  {
    std::lock_guard<std::mutex> lock(registry_mutex());
    auto& reg = registry();
    if (reg.empty()) {
      auto sloc = make_sloc_model();
      auto veg = make_vegoc_model();
      reg[sloc->name()] = sloc;
      reg[veg->name()] = veg;
    }
    auto it = reg.find(name);
    if (it != reg.end()) return it->second;
  }
  throw ConfigError("unknown model '" + name + "'");
}

}  // namespace cspath
