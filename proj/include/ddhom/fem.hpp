#pragma once

// P1 finite elements on a periodic structured grid. The solution space is
// the periodic P1 space modulo constants; the canonical representative of a
// class has zero nodal mean (equivalently zero integral, since every hat
// function carries the same mass h^2 on the uniform grid).

#include <functional>
#include <span>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "ddhom/coefficient.hpp"
#include "ddhom/mesh.hpp"

namespace ddhom {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using ScalarFunction = std::function<double(double, double)>;

struct FEFunction {
  int fine_n = 0;
  Vector values;

  static FEFunction zero(int fine_n) { return {fine_n, Vector::Zero(std::size_t(fine_n) * fine_n)}; }
  double mean() const { return values.mean(); }
  FEFunction& remove_mean() {
    values.array() -= values.mean();
    return *this;
  }
};

/// Dual vector: one entry per fine node, f(phi_i).
struct LinearForm {
  Vector values;
  double total() const { return values.sum(); }
};

SparseMatrix assemble_stiffness(const PeriodicGrid& grid, const CoefficientField& A);
SparseMatrix assemble_stiffness(const PeriodicGrid& grid, const Eigen::Matrix2d& A);
/// Exact P1 mass matrix.
SparseMatrix assemble_mass(const PeriodicGrid& grid);

/// Vertex-rule quadrature of int f phi_i. With `compatible`, the mean is
/// removed so the form annihilates constants.
LinearForm assemble_load(const PeriodicGrid& grid, const ScalarFunction& f, bool compatible = true);
/// Exact load for P1 nodal data.
LinearForm assemble_load(const PeriodicGrid& grid, const FEFunction& f, bool compatible = true);

/// v -> sum over `cells` of int A d . grad v, for a constant vector d.
LinearForm assemble_flux_load(const PeriodicGrid& grid, const CoefficientField& A, std::span<const int> cells,
                              const Eigen::Vector2d& direction);
/// v -> int_Q A e_j . grad v, j in {1, 2}.
LinearForm assemble_flux_load(const MeshHierarchy& mesh, const CoefficientField& A, int square, int j);

/// int A grad u over `cells` (all cells when empty).
Eigen::Vector2d flux_integral(const PeriodicGrid& grid, const CoefficientField& A, const Vector& u,
                              std::span<const int> cells = {});
/// int A over `cells` (all cells when empty).
Eigen::Matrix2d coefficient_integral(const CoefficientField& A, double cell_area, std::span<const int> cells = {});

FEFunction interpolate(const PeriodicGrid& grid, const ScalarFunction& f);
/// Exact embedding of a P1 function into a nested finer grid.
FEFunction prolongate(const FEFunction& u, int fine_n);

struct SolveOptions {
  double tol = 1e-10;  // relative residual
  int max_iters = 50000;
};

struct SolveReport {
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Jacobi-preconditioned CG on the mean-zero subspace. b must annihilate
/// constants; throws PreconditionError otherwise and SolverError on
/// non-convergence.
FEFunction solve_mean_zero(const SparseMatrix& K, const LinearForm& b, SolveOptions options = {},
                           SolveReport* report = nullptr);

/// Sparse Cholesky of K + K_00 e_0 e_0^T. For a compatible right-hand side
/// the grounded system returns the exact solution with node 0 fixed at zero.
class GroundedCholesky {
public:
  explicit GroundedCholesky(const SparseMatrix& K);
  Vector solve(const Vector& b) const;

private:
  Eigen::SimplicialLLT<SparseMatrix> llt_;
};

FEFunction solve_model_problem(const PeriodicGrid& grid, const CoefficientField& A, const ScalarFunction& f,
                               SolveOptions options = {});
FEFunction solve_homogenized(const PeriodicGrid& grid, const Eigen::Matrix2d& A0, const ScalarFunction& f,
                             SolveOptions options = {});

/// L2 norm of u - v modulo constants; the coarser function is embedded first.
double l2_error(const FEFunction& u, const FEFunction& v);
double energy_error(const FEFunction& u, const FEFunction& v, const SparseMatrix& K);

}  // namespace ddhom
