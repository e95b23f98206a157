#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "cspath/model.hpp"

namespace cspath {

/// Full solution of the generalized adjoint eigenproblem
/// dG/du(u_hat)^T Phi = Lambda M Phi at a CSS.
struct AdjointEig {
  Eigen::VectorXcd lambda;  // all 2Nn eigenvalues
  Eigen::MatrixXcd phi;     // adjoint eigenvectors, one column per eigenvalue
  double max_residual = 0;  // max_j ||G_u^T phi_j - lambda_j M phi_j|| / ||phi_j||
};

AdjointEig adjoint_eig(const SystemState& state);

/// Eigenvalues only (no vectors); cheaper, used for stability counts along
/// branches.
Eigen::VectorXcd adjoint_eigenvalues(const SystemState& state);

/// Count of dynamics-unstable directions: #{Re Lambda < 0}.
int count_unstable(const Eigen::VectorXcd& lambda);
int count_unstable(const SystemState& state);

/// Defect d = dim E_s - Nn with dim E_s = #{Re Lambda > 0}. Throws
/// DegenerateSpectrum if an eigenvalue has |Re| < 1e-10.
int defect(const Eigen::VectorXcd& lambda, int n_states, int n_nodes);

/// Projection matrix Psi whose rows span (M Phi_j)^T over the adjoint
/// vectors with Re Lambda_j < 0 (unstable dynamics directions), complex
/// pairs realified, rows orthonormalized. Psi annihilates every stable
/// right eigenvector of the dynamics.
Eigen::MatrixXd build_psi(const AdjointEig& eig, const Eigen::SparseMatrix<double>& M_blk);

/// Truncation-time suggestion T = c_T / min{Re Lambda : Re Lambda > 0}
/// (slowest stable dynamics decay rate). Throws SpectralError if no stable
/// direction exists.
double suggest_T(const Eigen::VectorXcd& lambda, double c_T = 15.0);

/// Stable/unstable spectral data at a CSS.
struct Projection {
  Eigen::VectorXcd eigenvalues;
  int defect = 0;
  bool has_spp = false;
  Eigen::MatrixXd psi;  // (2Nn - dim E_s) x 2Nn
  double suggested_T = 0;
};

Projection compute_projection(const SystemState& state, double c_T = 15.0);

/// Right generalized eigenpairs of (dG/du, M). Same eigenvalues as the
/// adjoint problem; vectors are the right eigenvectors (kernel directions
/// at bifurcation points, stable dynamics modes for annihilation checks).
AdjointEig right_eig(const SystemState& state);

}  // namespace cspath
