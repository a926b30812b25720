#include "ddhom/homogenization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "ddhom/error.hpp"
#include "ddhom/parallel.hpp"

namespace ddhom {

double EffectiveTensor::max_asymmetry() const {
  double worst = 0.0;
  for (const auto& m : values_) worst = std::max(worst, std::abs(m(0, 1) - m(1, 0)));
  return worst;
}

std::pair<double, double> EffectiveTensor::spectral_range() const {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& m : values_) {
    const Eigen::Matrix2d sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(sym, Eigen::EigenvaluesOnly);
    lo = std::min(lo, es.eigenvalues()[0]);
    hi = std::max(hi, es.eigenvalues()[1]);
  }
  return {lo, hi};
}

double EffectiveTensor::spread() const {
  double worst = 0.0;
  for (const auto& m : values_) worst = std::max(worst, (m - values_.front()).cwiseAbs().maxCoeff());
  return worst;
}

double EffectiveTensor::max_entry_diff(const EffectiveTensor& other) const {
  const int n = std::max(size(), other.size());
  double worst = 0.0;
  for (int q = 0; q < n; ++q) worst = std::max(worst, (on_square(q) - other.on_square(q)).cwiseAbs().maxCoeff());
  return worst;
}

CellCorrectors solve_cell_problems(const PeriodicGrid& unit_grid, const CoefficientField& A1, SolveOptions options) {
  const SparseMatrix K = assemble_stiffness(unit_grid, A1);
  std::vector<int> all(unit_grid.triangle_count());
  for (int t = 0; t < unit_grid.triangle_count(); ++t) all[t] = t;
  CellCorrectors out;
  for (int j = 0; j < 2; ++j) {
    const LinearForm b = assemble_flux_load(unit_grid, A1, all, Eigen::Vector2d::Unit(j));
    out.w[j] = solve_mean_zero(K, b, options, &out.reports[j]);
  }
  return out;
}

EffectiveTensor classical_tensor(const PeriodicGrid& unit_grid, const CoefficientField& A1, const CellCorrectors& w) {
  Eigen::Matrix2d A0 = coefficient_integral(A1, unit_grid.triangle_area());
  for (int j = 0; j < 2; ++j) A0.col(j) -= flux_integral(unit_grid, A1, w.w[j].values);
  if (std::abs(A0(0, 1) - A0(1, 0)) > 1e-8) {
    throw SolverError("classical tensor asymmetry " + std::to_string(std::abs(A0(0, 1) - A0(1, 0))) +
                      " exceeds 1e-8; tighten the cell-problem tolerance");
  }
  return EffectiveTensor::constant(A0);
}

Eigen::Matrix2d cell_energy_tensor(const PeriodicGrid& unit_grid, const CoefficientField& A1,
                                   const CellCorrectors& w, int sign) {
  Eigen::Matrix2d out = Eigen::Matrix2d::Zero();
  const double area = unit_grid.triangle_area();
  for (int t = 0; t < unit_grid.triangle_count(); ++t) {
    const auto nodes = unit_grid.triangle_nodes(t);
    const auto grads = unit_grid.gradients(t);
    Eigen::Matrix2d cols;  // column j: e_j + sign * grad w_j
    for (int j = 0; j < 2; ++j) {
      const Vector& v = w.w[j].values;
      const Eigen::Vector2d g = v[nodes[0]] * grads[0] + v[nodes[1]] * grads[1] + v[nodes[2]] * grads[2];
      cols.col(j) = Eigen::Vector2d::Unit(j) + sign * g;
    }
    out += area * cols.transpose() * A1[t] * cols;
  }
  return out;
}

KernelSolver::KernelSolver(const SparseMatrix& K, const QuasiInterpolator& interpolator)
    : interp_(&interpolator), chol_(K) {
  const SparseMatrix& IH = interpolator.matrix();
  const int nc = int(IH.rows());
  const SparseMatrix IHt = IH.transpose();  // column access to rows of I_H
  std::vector<Eigen::Triplet<double>> trips;
  for (int k = 1; k < nc; ++k) {
    for (SparseMatrix::InnerIterator it(IHt, k); it; ++it) trips.emplace_back(k - 1, int(it.row()), it.value());
    for (SparseMatrix::InnerIterator it(IHt, 0); it; ++it) trips.emplace_back(k - 1, int(it.row()), -it.value());
  }
  constraints_.resize(nc - 1, IH.cols());
  constraints_.setFromTriplets(trips.begin(), trips.end());

  y_.resize(IH.cols(), nc - 1);
  const SparseMatrix Ct = constraints_.transpose();
  for (int k = 0; k < nc - 1; ++k) y_.col(k) = chol_.solve(Vector(Ct.col(k)));
  const Eigen::MatrixXd schur = constraints_ * y_;
  schur_.compute(schur);
  if (schur_.info() != Eigen::Success) throw SolverError("coarse constraint Schur complement is not SPD");
}

Vector KernelSolver::solve(const Vector& form) const {
  Vector x = chol_.solve(form);
  const Vector lambda = schur_.solve(constraints_ * x);
  x -= y_ * lambda;
  // I_H x is now a constant; shift to the zero-image representative.
  x.array() -= interp_->apply(x).mean();
  return x;
}

Vector solve_ideal_corrector(const MeshHierarchy& mesh, const CoefficientField& A, const KernelSolver& solver,
                             int square, int j) {
  return solver.solve(assemble_flux_load(mesh, A, square, j).values);
}

IdealCorrectors solve_ideal_correctors(const MeshHierarchy& mesh, const CoefficientField& A,
                                       const KernelSolver& solver) {
  IdealCorrectors out;
  out.q.resize(mesh.square_count());
  parallel_for(2 * mesh.square_count(), [&](int task) {
    const int q = task / 2, j = task % 2;
    out.q[q][j] = solve_ideal_corrector(mesh, A, solver, q, j + 1);
  });
  return out;
}

Eigen::Matrix2d corrector_tensor(const MeshHierarchy& mesh, const CoefficientField& A, int square,
                                 const std::array<Vector, 2>& q) {
  const double area_Q = mesh.H() * mesh.H();
  Eigen::Matrix2d out = coefficient_integral(A, mesh.fine().triangle_area(), mesh.fine_cells_in_square(square));
  for (int j = 0; j < 2; ++j) out.col(j) -= flux_integral(mesh.fine(), A, q[j]);
  return out / area_Q;
}

EffectiveTensor ideal_tensor(const MeshHierarchy& mesh, const CoefficientField& A, const IdealCorrectors& q) {
  std::vector<Eigen::Matrix2d> per(mesh.square_count());
  for (int s = 0; s < mesh.square_count(); ++s) per[s] = corrector_tensor(mesh, A, s, q.q[s]);
  return EffectiveTensor::piecewise(std::move(per));
}

EffectiveTensor square_average(const MeshHierarchy& mesh, const CoefficientField& A) {
  std::vector<Eigen::Matrix2d> per(mesh.square_count());
  for (int s = 0; s < mesh.square_count(); ++s) {
    per[s] = coefficient_integral(A, mesh.fine().triangle_area(), mesh.fine_cells_in_square(s)) /
             (mesh.H() * mesh.H());
  }
  return EffectiveTensor::piecewise(std::move(per));
}

Prop1Report check_proposition1(const CoefficientSpec& spec, const MeshHierarchy& mesh, SolveOptions options) {
  if (!spec.periodic()) throw PreconditionError("Proposition-1 comparison needs a periodic coefficient");
  Prop1Report rep;
  rep.precondition_ok = mesh.commensurate();

  const PeriodicGrid unit(mesh.fine_n() / mesh.eps_n());
  const CoefficientField A1 = generate_coefficient(spec, unit, 1);
  const CellCorrectors w = solve_cell_problems(unit, A1, options);
  rep.classical = classical_tensor(unit, A1, w).on_square(0);

  const CoefficientField A = generate_coefficient(spec, mesh);
  const QuasiInterpolator interp(mesh);
  const SparseMatrix K = assemble_stiffness(mesh.fine(), A);
  const KernelSolver solver(K, interp);
  const IdealCorrectors q = solve_ideal_correctors(mesh, A, solver);
  rep.ideal = ideal_tensor(mesh, A, q);

  rep.max_entry_diff = rep.ideal.max_entry_diff(EffectiveTensor::constant(rep.classical));
  rep.per_square_spread = rep.ideal.spread();
  const double sqrt_area = mesh.H();
  for (const auto& pair : q.q)
    for (const auto& v : pair)
      rep.corrector_energy_constant = std::max(rep.corrector_energy_constant, std::sqrt(v.dot(K * v)) / sqrt_area);
  return rep;
}

}  // namespace ddhom
