#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <memory>
#include <string>
#include <vector>

#include "cspath/fem1d.hpp"

namespace cspath {

/// Nodal reaction Jacobian: block (ci, cj) holds the diagonal of
/// d f_ci / d u_cj (the reaction couples components only within a node).
using NodalJacobian = std::vector<std::vector<Eigen::VectorXd>>;

/// A canonical-system model: N states followed by N costates, local
/// reaction terms f, local current value j_c and control extraction.
/// Evaluation functions are pure; instances are immutable after
/// construction and safe to share across threads.
class Model {
public:
  virtual ~Model() = default;

  const std::string& name() const { return name_; }
  int n_states() const { return n_states_; }       // N
  int n_comps() const { return 2 * n_states_; }    // states + costates
  int n_params() const { return static_cast<int>(param_names_.size()); }
  const std::vector<std::string>& param_names() const { return param_names_; }
  int param_index(const std::string& name) const;  // throws ConfigError
  int active_param_default() const { return active_param_default_; }
  int rho_index() const { return rho_index_; }

  /// Per-state diffusion constants (D_1..D_N); applied +D to states and
  /// -D to costates when assembling.
  virtual Eigen::VectorXd diffusion(const Eigen::VectorXd& params) const = 0;

  /// Nodal reaction f(u, params), u and f of length 2N*n, component-major.
  /// Throws EvaluationError when the state is not evaluable.
  virtual Eigen::VectorXd reaction(int n_nodes, const Eigen::VectorXd& u,
                                   const Eigen::VectorXd& params) const = 0;

  virtual bool has_analytic_jacobian() const { return false; }

  /// Nodal reaction Jacobian; default is component-wise central finite
  /// differences with step 1e-6 * max(1, |u_i|).
  virtual NodalJacobian reaction_jac(int n_nodes, const Eigen::VectorXd& u,
                                     const Eigen::VectorXd& params) const;

  /// Local current value j_c per node (length n).
  virtual Eigen::VectorXd local_current_value(int n_nodes, const Eigen::VectorXd& u,
                                              const Eigen::VectorXd& params) const = 0;

  /// Control per node (length n).
  virtual Eigen::VectorXd control(int n_nodes, const Eigen::VectorXd& u,
                                  const Eigen::VectorXd& params) const = 0;

  /// Soft admissibility diagnostics (non-throwing); one message per issue.
  virtual std::vector<std::string> admissibility_warnings(int n_nodes,
                                                          const Eigen::VectorXd& u,
                                                          const Eigen::VectorXd& params) const {
    (void)n_nodes;
    (void)u;
    (void)params;
    return {};
  }

protected:
  Model(std::string name, int n_states, std::vector<std::string> param_names,
        int active_param_default, int rho_index)
      : name_(std::move(name)),
        n_states_(n_states),
        param_names_(std::move(param_names)),
        active_param_default_(active_param_default),
        rho_index_(rho_index) {}

private:
  std::string name_;
  int n_states_;
  std::vector<std::string> param_names_;
  int active_param_default_;
  int rho_index_;
};

/// Full unknown vector of a CSS problem: nodal PDE values plus parameters.
struct SystemState {
  std::shared_ptr<const Model> model;
  std::shared_ptr<const FemOps> fem;
  Eigen::VectorXd u;       // 2N*n, component-major
  Eigen::VectorXd params;  // p model parameters
  int active_param = 0;

  int n() const { return fem->n(); }
  int n_comps() const { return model->n_comps(); }
  int dim() const { return n_comps() * n(); }
  double lam() const { return params(active_param); }
  void set_lam(double v) { params(active_param) = v; }
  double rho() const { return params(model->rho_index()); }

  Eigen::VectorBlock<Eigen::VectorXd> comp(int c) { return u.segment(c * n(), n()); }
  Eigen::VectorBlock<const Eigen::VectorXd> comp(int c) const {
    return u.segment(c * n(), n());
  }
  /// States block (first N components).
  Eigen::VectorBlock<const Eigen::VectorXd> states() const {
    return u.segment(0, model->n_states() * n());
  }
};

/// Pack per-component nodal fields into the component-major layout.
Eigen::VectorXd pack_components(const std::vector<Eigen::VectorXd>& comps);
std::vector<Eigen::VectorXd> unpack_components(const Eigen::VectorXd& u, int n_comps);

/// Residual G(u) = K_D u - M_blk f(u); zero residual characterizes a CSS.
Eigen::VectorXd assemble_G(const SystemState& state);

/// Space Jacobian dG/du (sparse, block structure from the P1 stencil).
Eigen::SparseMatrix<double> assemble_G_jac(const SystemState& state);

/// dG/d(active parameter) by central differences.
Eigen::VectorXd assemble_G_dparam(const SystemState& state);

/// Block-diagonal mass matrix, n_comps copies of fem.M.
Eigen::SparseMatrix<double> block_mass(const FemOps& fem, int n_comps);

/// Spatially averaged current value (1/|Omega|) 1^T M j_c(u).
double j_ca(const SystemState& state);

/// ||u||_{L^2} / |Omega|^{1/2} over all components.
double l2_norm(const SystemState& state);

/// Model registry. Built-in models ("sloc", "vegoc") are always available;
/// user models are added with register_model.
void register_model(std::shared_ptr<const Model> model);
std::shared_ptr<const Model> find_model(const std::string& name);

}  // namespace cspath
