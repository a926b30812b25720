#include "ddhom/lod.hpp"

#include <cmath>

#include "ddhom/error.hpp"
#include "ddhom/interpolation.hpp"
#include "ddhom/parallel.hpp"

namespace ddhom {

ElementCorrectors build_element_correctors(const MeshHierarchy& mesh, const CoefficientField& A,
                                           const SchwarzOperator& op, int ell) {
  if (ell < 0) throw PreconditionError("ell must be nonnegative");
  const int nt = mesh.coarse_triangle_count();
  const int nf = mesh.fine().node_count();
  ElementCorrectors out;
  out.ell = ell;
  out.correctors.resize(nt);
  parallel_for(3 * nt, [&](int task) {
    const int T = task / 3, k = task % 3;
    if (ell == 0) {
      out.correctors[T][k] = Vector::Zero(nf);
      return;
    }
    const Eigen::Vector2d grad = mesh.coarse().gradients(T)[k];
    CorrectorIteration it(op, assemble_flux_load(mesh.fine(), A, mesh.fine_cells_in_triangle(T), grad).values);
    for (int l = 0; l < ell; ++l) it.step();
    out.correctors[T][k] = it.corrector();
  });
  return out;
}

MultiscaleBasis::MultiscaleBasis(int ell, Eigen::MatrixXd phi, Eigen::MatrixXd correction, const SparseMatrix& K)
    : ell_(ell), phi_(std::move(phi)), correction_(std::move(correction)) {
  const Eigen::MatrixXd Kphi = K * phi_;
  coarse_ = phi_.transpose() * Kphi;
  coarse_ = 0.5 * (coarse_ + coarse_.transpose());
}

MultiscaleBasis::MultiscaleBasis(const MeshHierarchy& mesh, const SchwarzOperator& op,
                                 const ElementCorrectors& correctors)
    : MultiscaleBasis(MultiscaleBasis::p1(mesh, op)) {
  ell_ = correctors.ell;
  const PeriodicGrid& coarse = mesh.coarse();
  // Triangles are visited in index order, so the sums are reproducible.
  for (int T = 0; T < coarse.triangle_count(); ++T) {
    const auto nodes = coarse.triangle_nodes(T);
    for (int k = 0; k < 3; ++k) correction_.col(nodes[k]) += correctors.correctors[T][k];
  }
  phi_ -= correction_;
  const Eigen::MatrixXd Kphi = op.stiffness() * phi_;
  coarse_ = phi_.transpose() * Kphi;
  coarse_ = 0.5 * (coarse_ + coarse_.transpose());
}

MultiscaleBasis MultiscaleBasis::p1(const MeshHierarchy&, const SchwarzOperator& op) {
  Eigen::MatrixXd E = Eigen::MatrixXd(op.interpolator().embedding());
  Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(E.rows(), E.cols());
  return MultiscaleBasis(0, std::move(E), std::move(zero), op.stiffness());
}

LodSolution lod_solve(const MultiscaleBasis& basis, const SparseMatrix& K, const LinearForm& b, int fine_n) {
  const Eigen::MatrixXd& Phi = basis.functions();
  if (Phi.rows() != b.values.size() || Phi.rows() != K.rows()) throw PreconditionError("basis and form sizes differ");
  const int n = basis.size();
  const Vector rhs = Phi.transpose() * b.values;

  // Grounded system: coefficient 0 fixed at zero. The corrected functions sum
  // to a constant, so this removes exactly the constants.
  const Eigen::MatrixXd M = basis.coarse_matrix().bottomRightCorner(n - 1, n - 1);
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) throw SolverError("coarse multiscale system is not SPD");

  LodSolution out;
  out.coefficients = Vector::Zero(n);
  out.coefficients.tail(n - 1) = llt.solve(rhs.tail(n - 1));
  out.u.fine_n = fine_n;
  out.u.values = Phi * out.coefficients;
  out.u.remove_mean();

  const Vector residual = Phi.transpose() * (K * out.u.values - b.values);
  // Magnitude of the summands of Phi^T b: stays meaningful when Phi^T b
  // cancels to round-off by symmetry.
  const double scale = (Phi.cwiseAbs().transpose() * b.values.cwiseAbs()).maxCoeff();
  out.galerkin_residual = residual.cwiseAbs().maxCoeff() / (scale > 0.0 ? scale : 1.0);
  if (out.galerkin_residual > 1e-9) {
    throw SolverError("Galerkin identity violated: relative residual " + std::to_string(out.galerkin_residual),
                      out.galerkin_residual);
  }
  return out;
}

double energy_error_vs_reference(const FEFunction& u, const FEFunction& u_ref, const SparseMatrix& K) {
  if (u.fine_n != u_ref.fine_n || u.values.size() != K.rows())
    throw PreconditionError("energy error needs functions on the same fine mesh");
  return energy_error(u, u_ref, K);
}

int ell_rule_log2(int n_coarse) {
  int ell = 0;
  while ((1 << ell) < n_coarse) ++ell;
  return ell;
}

LodRow lod_convergence_row(const CoefficientSpec& spec, int n_coarse, int n_fine, int ell, const ScalarFunction& f,
                           SpectrumOptions spectrum_options, SolveOptions reference_options) {
  const int n_eps = spec.n_eps > 0 ? spec.n_eps : n_fine;
  const MeshHierarchy mesh = build_mesh_hierarchy(n_coarse, n_eps, n_fine);
  const CoefficientField A = generate_coefficient(spec, mesh);
  const QuasiInterpolator interp(mesh);
  SchwarzOperator op(mesh, A, interp);
  op.set_spectrum(estimate_spectrum(op, spectrum_options));
  require_contraction(op.spectrum());

  const FEFunction ref = solve_model_problem(mesh.fine(), A, f, reference_options);
  const LinearForm b = assemble_load(mesh.fine(), f);
  const SparseMatrix& K = op.stiffness();

  const MultiscaleBasis lod(mesh, op, build_element_correctors(mesh, A, op, ell));
  const LodSolution u = lod_solve(lod, K, b, mesh.fine_n());
  const LodSolution p1 = lod_solve(MultiscaleBasis::p1(mesh, op), K, b, mesh.fine_n());

  LodRow row;
  row.H = mesh.H();
  row.ell = ell;
  row.energy_error = energy_error_vs_reference(u.u, ref, K);
  row.l2_error = l2_error(u.u, ref);
  row.p1_baseline_error = energy_error_vs_reference(p1.u, ref, K);
  row.gamma = op.spectrum().gamma;
  return row;
}

}  // namespace ddhom
