#pragma once

// Effective coefficients: the classical tensor from periodic cell problems
// and the per-square tensor built from correctors in the kernel of the
// quasi-interpolation.

#include <array>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "ddhom/coefficient.hpp"
#include "ddhom/fem.hpp"
#include "ddhom/interpolation.hpp"
#include "ddhom/mesh.hpp"

namespace ddhom {

/// One 2x2 matrix per coarse square, or a single constant matrix.
class EffectiveTensor {
public:
  static EffectiveTensor constant(const Eigen::Matrix2d& value) { return EffectiveTensor({value}, true); }
  static EffectiveTensor piecewise(std::vector<Eigen::Matrix2d> per_square) {
    return EffectiveTensor(std::move(per_square), false);
  }

  bool is_constant() const { return constant_; }
  int size() const { return int(values_.size()); }
  const Eigen::Matrix2d& on_square(int q) const { return constant_ ? values_.front() : values_[q]; }
  const std::vector<Eigen::Matrix2d>& values() const { return values_; }

  /// max over squares of |M - M^T|.
  double max_asymmetry() const;
  /// (min, max) eigenvalue of the symmetric parts over all squares.
  std::pair<double, double> spectral_range() const;
  /// max over squares and entries of |M_Q - M_0|.
  double spread() const;
  /// max over squares and entries of |M_Q - other_Q|.
  double max_entry_diff(const EffectiveTensor& other) const;

private:
  EffectiveTensor(std::vector<Eigen::Matrix2d> v, bool c) : values_(std::move(v)), constant_(c) {}
  std::vector<Eigen::Matrix2d> values_;
  bool constant_;
};

// ---- classical homogenization -------------------------------------------

struct CellCorrectors {
  /// Solutions of int A_1 (grad w_j - e_j) . grad v = 0, mean zero.
  std::array<FEFunction, 2> w;
  std::array<SolveReport, 2> reports;
};

CellCorrectors solve_cell_problems(const PeriodicGrid& unit_grid, const CoefficientField& A1,
                                   SolveOptions options = {});

/// A_0 e_j = int A_1 (e_j - grad w_j), evaluated as a linear flux functional.
EffectiveTensor classical_tensor(const PeriodicGrid& unit_grid, const CoefficientField& A1, const CellCorrectors& w);

/// Energy form int A_1 (e_j + s grad w_j) . (e_k + s grad w_k) with s = sign.
/// With s = -1 this equals classical_tensor at exact cell solutions; s = +1
/// is the opposite orientation convention and does not reproduce A_0.
Eigen::Matrix2d cell_energy_tensor(const PeriodicGrid& unit_grid, const CoefficientField& A1,
                                   const CellCorrectors& w, int sign);

// ---- kernel correctors ---------------------------------------------------

/// Galerkin solves over W = ker I_H. Uses the grounded Cholesky factor of K
/// and a dense Schur complement on the coarse constraints; returned vectors
/// satisfy I_H q = 0 exactly (the representative with zero coarse image).
class KernelSolver {
public:
  KernelSolver(const SparseMatrix& K, const QuasiInterpolator& interpolator);

  /// q in W with a(q, w) = form(w) for all w in W.
  Vector solve(const Vector& form) const;

private:
  const QuasiInterpolator* interp_;
  GroundedCholesky chol_;
  SparseMatrix constraints_;  // rows (I_H)_k - (I_H)_0, k >= 1
  Eigen::MatrixXd y_;         // K_g^{-1} C^T
  Eigen::LLT<Eigen::MatrixXd> schur_;
};

struct IdealCorrectors {
  /// q[Q][j-1]
  std::vector<std::array<Vector, 2>> q;
};

Vector solve_ideal_corrector(const MeshHierarchy& mesh, const CoefficientField& A, const KernelSolver& solver,
                             int square, int j);
IdealCorrectors solve_ideal_correctors(const MeshHierarchy& mesh, const CoefficientField& A,
                                       const KernelSolver& solver);

/// (1/|Q|) int_Q A e_j.e_k - (1/|Q|) int_Omega A grad q_j . e_k for a pair of
/// correctors attached to square Q.
Eigen::Matrix2d corrector_tensor(const MeshHierarchy& mesh, const CoefficientField& A, int square,
                                 const std::array<Vector, 2>& q);

EffectiveTensor ideal_tensor(const MeshHierarchy& mesh, const CoefficientField& A, const IdealCorrectors& q);

/// Arithmetic mean of A over each square (the tensor with zero correctors).
EffectiveTensor square_average(const MeshHierarchy& mesh, const CoefficientField& A);

struct Prop1Report {
  Eigen::Matrix2d classical;  // A_0 on the matched unit-cell grid
  EffectiveTensor ideal = EffectiveTensor::constant(Eigen::Matrix2d::Zero());
  double max_entry_diff = 0.0;
  double per_square_spread = 0.0;
  /// H is an integer multiple of eps; without it the comparison is a negative control.
  bool precondition_ok = true;
  /// max over (Q, j) of ||q_{Q,j}||_a / |Q|^{1/2}.
  double corrector_energy_constant = 0.0;
};

/// Runs both pipelines at matching fine resolution (N_h/N_eps cells per period).
Prop1Report check_proposition1(const CoefficientSpec& spec, const MeshHierarchy& mesh, SolveOptions options = {});

}  // namespace ddhom
