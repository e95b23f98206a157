#include "cspath/fem1d.hpp"

#include <vector>

#include "cspath/errors.hpp"

namespace cspath {

Mesh1D build_mesh(double x_min, double x_max, int n_nodes) {
  if (!(x_min < x_max)) throw ConfigError("build_mesh: x_min must be < x_max");
  if (n_nodes < 3) throw ConfigError("build_mesh: need at least 3 nodes");
  Eigen::VectorXd nodes = Eigen::VectorXd::LinSpaced(n_nodes, x_min, x_max);
  Mesh1D mesh = make_mesh(std::move(nodes));
  // bitwise-equal element lengths make the stiffness kernel property exact
  mesh.element_lengths.setConstant((x_max - x_min) / (n_nodes - 1));
  return mesh;
}

Mesh1D make_mesh(Eigen::VectorXd nodes) {
  const int n = static_cast<int>(nodes.size());
  if (n < 3) throw ConfigError("make_mesh: need at least 3 nodes");
  Mesh1D mesh;
  mesh.element_lengths.resize(n - 1);
  for (int i = 0; i + 1 < n; ++i) {
    const double h = nodes(i + 1) - nodes(i);
    if (!(h > 0)) throw ConfigError("make_mesh: nodes must be strictly increasing");
    mesh.element_lengths(i) = h;
  }
  mesh.domain_length = nodes(n - 1) - nodes(0);
  mesh.nodes = std::move(nodes);
  return mesh;
}

FemOps assemble(const Mesh1D& mesh) {
  const int n = mesh.n_nodes();
  std::vector<Eigen::Triplet<double>> mt, kt;
  mt.reserve(4 * (n - 1));
  kt.reserve(4 * (n - 1));
  for (int e = 0; e + 1 < n; ++e) {
    const double h = mesh.element_lengths(e);
    // element mass h/6 * [2 1; 1 2], element stiffness 1/h * [1 -1; -1 1]
    mt.emplace_back(e, e, h / 3.0);
    mt.emplace_back(e, e + 1, h / 6.0);
    mt.emplace_back(e + 1, e, h / 6.0);
    mt.emplace_back(e + 1, e + 1, h / 3.0);
    kt.emplace_back(e, e, 1.0 / h);
    kt.emplace_back(e, e + 1, -1.0 / h);
    kt.emplace_back(e + 1, e, -1.0 / h);
    kt.emplace_back(e + 1, e + 1, 1.0 / h);
  }
  FemOps ops;
  ops.mesh = mesh;
  ops.M.resize(n, n);
  ops.K.resize(n, n);
  ops.M.setFromTriplets(mt.begin(), mt.end());
  ops.K.setFromTriplets(kt.begin(), kt.end());
  ops.M.makeCompressed();
  ops.K.makeCompressed();
  return ops;
}

double integrate(const FemOps& fem, const Eigen::Ref<const Eigen::VectorXd>& w) {
  if (w.size() != fem.n())
    throw DimensionError("integrate: field length does not match mesh node count");
  return (fem.M * w).sum();
}

}  // namespace cspath
