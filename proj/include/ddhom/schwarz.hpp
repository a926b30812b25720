#pragma once

// Additive subspace correction on the kernel W = ker I_H.
//
// The local spaces are W_i = {v - I_H v : v in H^1_0(omega_i)} over the node
// patches omega_i. P_i is the a-orthogonal projection onto W_i and
// P = sum_i P_i. All operators take the *dual* form r = a(v, .) of their
// argument, which also covers the flux forms int_Q A e_j . grad(.) that play
// the role of a(x_j 1_Q, .).

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "ddhom/coefficient.hpp"
#include "ddhom/fem.hpp"
#include "ddhom/homogenization.hpp"
#include "ddhom/interpolation.hpp"
#include "ddhom/mesh.hpp"

namespace ddhom {

/// Direct solver for the projection onto one W_i.
///
/// W_i is parametrized by the patch-interior fine hats with the center node
/// removed: the coarse hat at z_i lies in H^1_0(omega_i) and is annihilated
/// by id - I_H, so dropping one interior dof at z_i makes the map onto W_i
/// injective. The resulting local matrix is the Dirichlet patch stiffness
/// plus a low-rank term from the coarse halo and is inverted by Woodbury.
class LocalSubspaceSolver {
public:
  LocalSubspaceSolver(const MeshHierarchy& mesh, const SparseMatrix& K, const QuasiInterpolator& interp,
                      const SparseMatrix& K_embed, const Eigen::MatrixXd& coarse_stiffness, int coarse_node);

  const Patch& patch() const { return patch_; }
  int local_dimension() const { return int(dofs_.size()); }
  /// Coarse nodes where I_H of a patch function can be nonzero.
  const std::vector<int>& halo() const { return halo_; }
  /// Sorted fine nodes where functions of W_i can be nonzero.
  const std::vector<int>& footprint() const { return footprint_; }

  /// True when `form` has a nonzero entry on the footprint, i.e. when the
  /// projection can be nonzero.
  bool touches(const Vector& form) const;

  /// P_i v for the form a(v, .), as values on footprint().
  Vector project(const Vector& form) const;
  /// target += scale * P_i v.
  void add_projection(const Vector& form, double scale, Vector& target) const;

  /// B_i^T form: the form tested against the local spanning set of W_i.
  Vector test_against_basis(const Vector& form) const;

private:
  Vector gather(const Vector& global) const;
  Vector solve_local(const Vector& g) const;

  Patch patch_;
  std::vector<int> dofs_;
  std::vector<int> halo_;
  std::vector<int> footprint_;
  std::vector<int> dof_slot_;  // position of dofs_[a] inside footprint_
  Eigen::MatrixXd G_;          // (I_H)_{halo, dofs}
  Eigen::MatrixXd EN_;         // embedding columns of halo, restricted to footprint
  std::unique_ptr<Eigen::SimplicialLLT<SparseMatrix>> interior_;
  Eigen::MatrixXd U_;  // [G^T, (K E)_{dofs, halo}]
  Eigen::MatrixXd Z_;  // interior^{-1} U
  Eigen::PartialPivLU<Eigen::MatrixXd> capacitance_;
};

struct SpectrumEstimate {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double K1 = 0.0;  // 1 / lambda_min
  double K2 = 0.0;  // lambda_max
  double theta = 0.0;
  double gamma = 1.0;
  int lanczos_steps = 0;
  int restarts = 0;
  bool converged = false;
};

class SchwarzOperator {
public:
  SchwarzOperator(const MeshHierarchy& mesh, const CoefficientField& A, const QuasiInterpolator& interp);

  const MeshHierarchy& mesh() const { return *mesh_; }
  const QuasiInterpolator& interpolator() const { return *interp_; }
  const SparseMatrix& stiffness() const { return K_; }
  int size() const { return int(local_.size()); }
  const LocalSubspaceSolver& local(int i) const { return local_[i]; }

  /// P_i v as a full fine vector.
  Vector apply_local(int i, const Vector& form) const;
  /// P v = sum_i P_i v, summed in node order.
  Vector apply_P(const Vector& form) const;
  /// Same sum restricted to `patches` (sorted); the caller guarantees the
  /// remaining projections vanish.
  Vector apply_P(const Vector& form, const std::vector<int>& patches) const;
  /// Patches whose projection of `form` can be nonzero.
  std::vector<int> active_patches(const Vector& form) const;

  /// a(u, v) = u^T K v.
  double energy_product(const Vector& u, const Vector& v) const { return u.dot(K_ * v); }
  double energy_norm(const Vector& v) const { return std::sqrt(std::max(0.0, energy_product(v, v))); }

  const SpectrumEstimate& spectrum() const { return spectrum_; }
  void set_spectrum(const SpectrumEstimate& s) { spectrum_ = s; }
  double theta() const { return spectrum_.theta; }

private:
  const MeshHierarchy* mesh_;
  const QuasiInterpolator* interp_;
  SparseMatrix K_;
  std::vector<LocalSubspaceSolver> local_;
  SpectrumEstimate spectrum_;
};

std::vector<LocalSubspaceSolver> build_local_solvers(const MeshHierarchy& mesh, const SparseMatrix& K,
                                                     const QuasiInterpolator& interp);

struct SpectrumOptions {
  int max_steps = 400;
  double tol = 1e-8;
  std::uint64_t seed = 1;
  int max_restarts = 3;
};

/// Extreme eigenvalues of P on W (Lanczos in the a-inner product from a
/// random kernel-projected start), the damping theta = 2/(lmin + lmax) and the
/// contraction factor gamma = (lmax - lmin)/(lmax + lmin).
SpectrumEstimate estimate_spectrum(const SchwarzOperator& op, SpectrumOptions options = {});

/// Random element of W with the given seed (mean-free fine noise pushed
/// through id - E I_H).
Vector random_kernel_vector(const QuasiInterpolator& interp, int fine_nodes, std::uint64_t seed);

/// ||(id - theta P) v||_a / ||v||_a.
double contraction_ratio(const SchwarzOperator& op, const Vector& v);

/// Throws CertificationError when gamma >= 1.
void require_contraction(const SpectrumEstimate& s);

// ---- localized correctors -------------------------------------------------

/// Richardson iteration q <- q + theta P(rhs - a(q, .)) started from q = 0.
/// Only local problems whose footprint meets the current residual are solved.
class CorrectorIteration {
public:
  CorrectorIteration(const SchwarzOperator& op, Vector rhs_form, bool verify_active_set = false);

  void step();
  int level() const { return level_; }
  const Vector& corrector() const { return q_; }
  int last_active_count() const { return last_active_; }

private:
  const SchwarzOperator* op_;
  Vector rhs_;
  Vector q_;
  int level_ = 0;
  int last_active_ = 0;
  bool verify_;
};

struct LocalizedCorrectors {
  int square = 0;
  int j = 1;
  /// q^ell for ell = 0..ell_max when keep_all, otherwise only q^{ell_max}.
  std::vector<Vector> iterates;
  /// support_radius(q^ell) for every level, -1 for the zero corrector.
  std::vector<int> support;
  std::vector<int> active_patches;
};

LocalizedCorrectors iterate_localized_corrector(const SchwarzOperator& op, const CoefficientField& A, int square,
                                                int j, int ell_max, bool keep_all = false);

/// Tensor built from correctors at one common level.
EffectiveTensor localized_tensor(const MeshHierarchy& mesh, const CoefficientField& A,
                                 const std::vector<std::array<Vector, 2>>& q);

struct DecaySequence {
  /// A_H^ell for ell = 0..ell_max.
  std::vector<EffectiveTensor> tensors;
  /// max over (Q, j) of the support radius at each level.
  std::vector<int> max_support;
};

/// A_H^ell for every level up to ell_max, one iteration per (Q, j).
DecaySequence localized_tensor_sequence(const SchwarzOperator& op, const CoefficientField& A, int ell_max);

/// Fit log e = a + ell log(gamma_fit) over entries above `floor`, ignoring ell = 0.
double fit_decay_ratio(const std::vector<double>& errors, double floor);

struct Prop2Level {
  int n_coarse = 0;
  double H = 0.0;
  double gamma_est = 1.0;
  int ell = 0;
  double error = 0.0;
  double ratio = 0.0;  // error / H
  std::vector<double> decay;
  /// max support radius over (Q, j) per level.
  std::vector<int> support;
};

struct Prop2Report {
  int c_ell = 0;
  double max_gamma = 0.0;
  std::vector<Prop2Level> levels;
  /// max ratio <= 2 * ratio at the coarsest H.
  bool certified = false;
};

/// For each N_H, ell(H) = ceil(log2(1/H)) * c_ell with c_ell = ceil(log 2 / |log gamma|)
/// calibrated from the largest gamma estimate over the list.
Prop2Report check_proposition2(const CoefficientSpec& spec, int n_eps, int n_fine, const std::vector<int>& coarse_list,
                               SpectrumOptions spectrum_options = {});

}  // namespace ddhom
