#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace cspath {

/// 1D mesh with strictly increasing nodes (at least 3).
struct Mesh1D {
  Eigen::VectorXd nodes;
  Eigen::VectorXd element_lengths;
  double domain_length = 0.0;

  int n_nodes() const { return static_cast<int>(nodes.size()); }
  double x_min() const { return nodes(0); }
  double x_max() const { return nodes(nodes.size() - 1); }
};

/// Uniform mesh with n_nodes nodes on [x_min, x_max].
Mesh1D build_mesh(double x_min, double x_max, int n_nodes);

/// Mesh from explicit node positions (must be strictly increasing, >= 3).
Mesh1D make_mesh(Eigen::VectorXd nodes);

/// P1 mass and stiffness matrices on a Mesh1D. Homogeneous Neumann comes
/// from the natural weak form: no boundary rows are modified, so K has the
/// constants in its kernel.
struct FemOps {
  Mesh1D mesh;
  Eigen::SparseMatrix<double> M;  // consistent (non-lumped) mass, SPD tridiagonal
  Eigen::SparseMatrix<double> K;  // stiffness from \int phi_i' phi_j', PSD tridiagonal

  int n() const { return mesh.n_nodes(); }
};

FemOps assemble(const Mesh1D& mesh);

/// 1^T M w, i.e. the integral over the domain of the P1 interpolant of w.
double integrate(const FemOps& fem, const Eigen::Ref<const Eigen::VectorXd>& w);

}  // namespace cspath
