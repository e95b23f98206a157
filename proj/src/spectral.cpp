#include "cspath/spectral.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "cspath/errors.hpp"

namespace cspath {

namespace {

// Reduce G_u^T Phi = Lambda M Phi to a standard eigenproblem via the
// Cholesky factor M = L L^T:  (L^-1 G_u^T L^-T) y = Lambda y, Phi = L^-T y.
struct Reduced {
  Eigen::MatrixXd B;
  Eigen::LLT<Eigen::MatrixXd> llt;
};

Reduced reduce(const SystemState& state) {
  const Eigen::SparseMatrix<double> J = assemble_G_jac(state);
  const Eigen::SparseMatrix<double> Mb = block_mass(*state.fem, state.n_comps());
  Eigen::MatrixXd Jt = Eigen::MatrixXd(J).transpose();
  Reduced r;
  r.llt.compute(Eigen::MatrixXd(Mb));
  if (r.llt.info() != Eigen::Success)
    throw SpectralError("mass matrix Cholesky failed");
  const Eigen::MatrixXd Linv_Jt = r.llt.matrixL().solve(Jt);
  r.B = r.llt.matrixL().solve(Linv_Jt.transpose()).transpose();
  return r;
}

}  // namespace

Eigen::VectorXcd adjoint_eigenvalues(const SystemState& state) {
  Reduced r = reduce(state);
  Eigen::EigenSolver<Eigen::MatrixXd> es(r.B, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) throw SpectralError("eigenvalue iteration failed");
  return es.eigenvalues();
}

AdjointEig adjoint_eig(const SystemState& state) {
  Reduced r = reduce(state);
  Eigen::EigenSolver<Eigen::MatrixXd> es(r.B, /*computeEigenvectors=*/true);
  if (es.info() != Eigen::Success) throw SpectralError("eigenvalue iteration failed");
  AdjointEig out;
  out.lambda = es.eigenvalues();
  const Eigen::MatrixXcd Y = es.eigenvectors();
  out.phi.resize(Y.rows(), Y.cols());
  // Phi = L^-T y per column
  const Eigen::MatrixXd Lt = Eigen::MatrixXd(r.llt.matrixL()).transpose();
  const auto solveLt = Lt.triangularView<Eigen::Upper>();
  out.phi.real() = solveLt.solve(Y.real());
  out.phi.imag() = solveLt.solve(Y.imag());

  // residual check against the original pencil
  const Eigen::SparseMatrix<double> J = assemble_G_jac(state);
  const Eigen::SparseMatrix<double> Mb = block_mass(*state.fem, state.n_comps());
  const Eigen::SparseMatrix<double> JT = J.transpose();
  double worst = 0;
  for (int j = 0; j < out.lambda.size(); ++j) {
    const Eigen::VectorXcd p = out.phi.col(j);
    const Eigen::VectorXcd res = JT * p - out.lambda(j) * (Mb * p);
    worst = std::max(worst, res.norm() / p.norm());
  }
  out.max_residual = worst;
  const double scale = Eigen::MatrixXd(J).cwiseAbs().maxCoeff();
  if (worst > 1e-8 * std::max(1.0, scale))
    throw SpectralError("adjoint eigenpair residual too large: " + std::to_string(worst));
  return out;
}

int count_unstable(const Eigen::VectorXcd& lambda) {
  int c = 0;
  for (int j = 0; j < lambda.size(); ++j)
    if (lambda(j).real() < 0.0) ++c;
  return c;
}

int count_unstable(const SystemState& state) {
  return count_unstable(adjoint_eigenvalues(state));
}

int defect(const Eigen::VectorXcd& lambda, int n_states, int n_nodes) {
  int dim_es = 0;
  for (int j = 0; j < lambda.size(); ++j) {
    if (std::abs(lambda(j).real()) < 1e-10)
      throw DegenerateSpectrum(
          "eigenvalue on the imaginary axis; stable/unstable split undefined");
    if (lambda(j).real() > 0.0) ++dim_es;
  }
  return dim_es - n_states * n_nodes;
}

Eigen::MatrixXd build_psi(const AdjointEig& eig, const Eigen::SparseMatrix<double>& M_blk) {
  const int dim = static_cast<int>(eig.lambda.size());
  const double imag_tol = 1e-12 * std::max(1.0, eig.lambda.cwiseAbs().maxCoeff());
  std::vector<Eigen::VectorXd> rows;
  for (int j = 0; j < dim; ++j) {
    if (eig.lambda(j).real() >= 0.0) continue;
    const double im = eig.lambda(j).imag();
    if (std::abs(im) <= imag_tol) {
      rows.emplace_back((M_blk * eig.phi.col(j).real()).eval());
    } else if (im > 0.0) {
      // one complex pair contributes its real and imaginary parts once
      rows.emplace_back((M_blk * eig.phi.col(j).real()).eval());
      rows.emplace_back((M_blk * eig.phi.col(j).imag()).eval());
    }
  }
  Eigen::MatrixXd psi_t(dim, static_cast<int>(rows.size()));
  for (size_t r = 0; r < rows.size(); ++r) psi_t.col(static_cast<int>(r)) = rows[r];

  // orthonormalize the rows; only the row space is contractual
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(psi_t);
  const Eigen::MatrixXd R = qr.matrixQR()
                                .topRows(psi_t.cols())
                                .triangularView<Eigen::Upper>();
  const double rmax = R.diagonal().cwiseAbs().maxCoeff();
  for (int j = 0; j < R.cols(); ++j)
    if (std::abs(R(j, j)) < 1e-10 * std::max(1.0, rmax))
      throw SpectralError("projection build failed: realified adjoint rows are rank deficient");
  Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(dim, psi_t.cols());
  Q = qr.householderQ() * Q;
  return Q.transpose();
}

double suggest_T(const Eigen::VectorXcd& lambda, double c_T) {
  double min_rate = std::numeric_limits<double>::infinity();
  for (int j = 0; j < lambda.size(); ++j)
    if (lambda(j).real() > 0.0) min_rate = std::min(min_rate, lambda(j).real());
  if (!std::isfinite(min_rate))
    throw SpectralError("no stable dynamics direction; no path can end here");
  return c_T / min_rate;
}

AdjointEig right_eig(const SystemState& state) {
  // (L^-1 G_u L^-T) y = Lambda y with v = L^-T y solves G_u v = Lambda M v
  const Eigen::SparseMatrix<double> J = assemble_G_jac(state);
  const Eigen::SparseMatrix<double> Mb = block_mass(*state.fem, state.n_comps());
  Eigen::LLT<Eigen::MatrixXd> llt;
  llt.compute(Eigen::MatrixXd(Mb));
  if (llt.info() != Eigen::Success) throw SpectralError("mass matrix Cholesky failed");
  const Eigen::MatrixXd LinvJ = llt.matrixL().solve(Eigen::MatrixXd(J));
  const Eigen::MatrixXd B = llt.matrixL().solve(LinvJ.transpose()).transpose();
  Eigen::EigenSolver<Eigen::MatrixXd> es(B, true);
  if (es.info() != Eigen::Success) throw SpectralError("eigenvalue iteration failed");
  AdjointEig out;
  out.lambda = es.eigenvalues();
  const Eigen::MatrixXcd Y = es.eigenvectors();
  const Eigen::MatrixXd Lt = Eigen::MatrixXd(llt.matrixL()).transpose();
  const auto solveLt = Lt.triangularView<Eigen::Upper>();
  out.phi.resize(Y.rows(), Y.cols());
  out.phi.real() = solveLt.solve(Y.real());
  out.phi.imag() = solveLt.solve(Y.imag());
  return out;
}

Projection compute_projection(const SystemState& state, double c_T) {
  AdjointEig eig = adjoint_eig(state);
  Projection proj;
  proj.eigenvalues = eig.lambda;
  proj.defect = defect(eig.lambda, state.model->n_states(), state.n());
  proj.has_spp = (proj.defect == 0);
  proj.psi = build_psi(eig, block_mass(*state.fem, state.n_comps()));
  proj.suggested_T = suggest_T(eig.lambda, c_T);
  return proj;
}

}  // namespace cspath
