#pragma once

// Localized orthogonal decomposition: element correctors built by the
// subspace-correction iteration, the corrected coarse basis and the Galerkin
// solve in its span.

#include <array>
#include <vector>

#include <Eigen/Cholesky>

#include "ddhom/coefficient.hpp"
#include "ddhom/fem.hpp"
#include "ddhom/mesh.hpp"
#include "ddhom/schwarz.hpp"

namespace ddhom {

/// C_T^ell applied to the three local shape functions of every coarse triangle.
struct ElementCorrectors {
  int ell = 0;
  /// correctors[T][k]: corrector of the shape function of the k-th vertex of T.
  std::vector<std::array<Vector, 3>> correctors;
};

/// Runs C_T^{l+1} = C_T^l + theta P(a_T(lambda, .) - a(C_T^l, .)) from C_T^0 = 0.
ElementCorrectors build_element_correctors(const MeshHierarchy& mesh, const CoefficientField& A,
                                           const SchwarzOperator& op, int ell);

/// Corrected basis phi_z = lambda_z - C^ell lambda_z with
/// C^ell lambda_z = sum over T containing z of C_T^ell(lambda_z|_T).
class MultiscaleBasis {
public:
  /// Corrected basis from element correctors.
  MultiscaleBasis(const MeshHierarchy& mesh, const SchwarzOperator& op, const ElementCorrectors& correctors);
  /// Plain coarse P1 basis (no correction).
  static MultiscaleBasis p1(const MeshHierarchy& mesh, const SchwarzOperator& op);

  int ell() const { return ell_; }
  int size() const { return int(phi_.cols()); }
  /// Fine nodal values of phi_z in column z.
  const Eigen::MatrixXd& functions() const { return phi_; }
  /// C^ell lambda_z in column z (zero for the P1 basis).
  const Eigen::MatrixXd& corrections() const { return correction_; }
  /// Phi^T K Phi.
  const Eigen::MatrixXd& coarse_matrix() const { return coarse_; }

private:
  MultiscaleBasis(int ell, Eigen::MatrixXd phi, Eigen::MatrixXd correction, const SparseMatrix& K);

  int ell_ = 0;
  Eigen::MatrixXd phi_;
  Eigen::MatrixXd correction_;
  Eigen::MatrixXd coarse_;
};

struct LodSolution {
  FEFunction u;
  /// Coarse coefficients, with coefficient 0 pinned to zero.
  Vector coefficients;
  /// max |Phi^T (K u - b)| relative to max |Phi|^T |b|.
  double galerkin_residual = 0.0;
};

/// Galerkin solution in span{phi_z} modulo constants; throws SolverError if
/// the grounded coarse system is not SPD or the Galerkin identity fails to 1e-9.
LodSolution lod_solve(const MultiscaleBasis& basis, const SparseMatrix& K, const LinearForm& b, int fine_n);

/// a-norm of u - u_ref on the common fine mesh.
double energy_error_vs_reference(const FEFunction& u, const FEFunction& u_ref, const SparseMatrix& K);

struct LodRow {
  double H = 0.0;
  int ell = 0;
  double energy_error = 0.0;
  double l2_error = 0.0;
  double p1_baseline_error = 0.0;
  double gamma = 0.0;
};

/// One row of the convergence table: LOD at level ell and the uncorrected P1
/// solution, both measured against the fine reference.
LodRow lod_convergence_row(const CoefficientSpec& spec, int n_coarse, int n_fine, int ell, const ScalarFunction& f,
                           SpectrumOptions spectrum_options = {}, SolveOptions reference_options = {});

/// ell(H) = ceil(log2(1/H)).
int ell_rule_log2(int n_coarse);

}  // namespace ddhom
