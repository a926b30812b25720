#include "ddhom/fem.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "ddhom/error.hpp"

namespace ddhom {

namespace {

using Triplet = Eigen::Triplet<double>;

template <class CellMatrix>
SparseMatrix assemble_with(const PeriodicGrid& grid, CellMatrix&& cell_matrix) {
  std::vector<Triplet> trips;
  trips.reserve(std::size_t(grid.triangle_count()) * 9);
  const double area = grid.triangle_area();
  for (int t = 0; t < grid.triangle_count(); ++t) {
    const auto nodes = grid.triangle_nodes(t);
    const auto grads = grid.gradients(t);
    const Eigen::Matrix2d& A = cell_matrix(t);
    for (int a = 0; a < 3; ++a) {
      const Eigen::Vector2d flux = A * grads[a];
      for (int b = 0; b < 3; ++b) trips.emplace_back(nodes[b], nodes[a], area * flux.dot(grads[b]));
    }
  }
  SparseMatrix K(grid.node_count(), grid.node_count());
  K.setFromTriplets(trips.begin(), trips.end());
  return K;
}

void check_grid(const PeriodicGrid& grid, const CoefficientField& A) {
  if (A.fine_n() != grid.cells_per_side()) {
    throw PreconditionError("coefficient field lives on a different fine grid");
  }
}

// Hat functions carry equal mass, so the compatible part of a form is its
// deviation from the entrywise mean.
void make_compatible(Vector& v) { v.array() -= v.mean(); }

}  // namespace

SparseMatrix assemble_stiffness(const PeriodicGrid& grid, const CoefficientField& A) {
  check_grid(grid, A);
  return assemble_with(grid, [&](int t) -> const Eigen::Matrix2d& { return A[t]; });
}

SparseMatrix assemble_stiffness(const PeriodicGrid& grid, const Eigen::Matrix2d& A) {
  return assemble_with(grid, [&](int) -> const Eigen::Matrix2d& { return A; });
}

SparseMatrix assemble_mass(const PeriodicGrid& grid) {
  std::vector<Triplet> trips;
  trips.reserve(std::size_t(grid.triangle_count()) * 9);
  const double area = grid.triangle_area();
  for (int t = 0; t < grid.triangle_count(); ++t) {
    const auto nodes = grid.triangle_nodes(t);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) trips.emplace_back(nodes[a], nodes[b], area / 12.0 * (a == b ? 2.0 : 1.0));
  }
  SparseMatrix M(grid.node_count(), grid.node_count());
  M.setFromTriplets(trips.begin(), trips.end());
  return M;
}

LinearForm assemble_load(const PeriodicGrid& grid, const ScalarFunction& f, bool compatible) {
  // Vertex rule: each of the six triangles around a node contributes |T|/3 f(z).
  const double h = grid.spacing();
  const double weight = 6.0 * grid.triangle_area() / 3.0;
  const int n = grid.cells_per_side();
  LinearForm b{Vector(grid.node_count())};
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) b.values[grid.node(i, j)] = weight * f(i * h, j * h);
  if (compatible) make_compatible(b.values);
  return b;
}

LinearForm assemble_load(const PeriodicGrid& grid, const FEFunction& f, bool compatible) {
  if (f.fine_n != grid.cells_per_side()) throw PreconditionError("load data lives on a different grid");
  LinearForm b{assemble_mass(grid) * f.values};
  if (compatible) make_compatible(b.values);
  return b;
}

LinearForm assemble_flux_load(const PeriodicGrid& grid, const CoefficientField& A, std::span<const int> cells,
                              const Eigen::Vector2d& direction) {
  check_grid(grid, A);
  LinearForm b{Vector::Zero(grid.node_count())};
  const double area = grid.triangle_area();
  for (int t : cells) {
    const Eigen::Vector2d flux = area * (A[t] * direction);
    const auto nodes = grid.triangle_nodes(t);
    const auto grads = grid.gradients(t);
    for (int a = 0; a < 3; ++a) b.values[nodes[a]] += flux.dot(grads[a]);
  }
  return b;
}

LinearForm assemble_flux_load(const MeshHierarchy& mesh, const CoefficientField& A, int square, int j) {
  if (square < 0 || square >= mesh.square_count()) throw PreconditionError("square index out of range");
  if (j != 1 && j != 2) throw PreconditionError("direction must be 1 or 2");
  return assemble_flux_load(mesh.fine(), A, mesh.fine_cells_in_square(square), Eigen::Vector2d::Unit(j - 1));
}

Eigen::Vector2d flux_integral(const PeriodicGrid& grid, const CoefficientField& A, const Vector& u,
                              std::span<const int> cells) {
  Eigen::Vector2d acc = Eigen::Vector2d::Zero();
  auto add = [&](int t) {
    const auto nodes = grid.triangle_nodes(t);
    const auto grads = grid.gradients(t);
    const Eigen::Vector2d g = u[nodes[0]] * grads[0] + u[nodes[1]] * grads[1] + u[nodes[2]] * grads[2];
    acc += A[t] * g;
  };
  if (cells.empty()) {
    for (int t = 0; t < grid.triangle_count(); ++t) add(t);
  } else {
    for (int t : cells) add(t);
  }
  return grid.triangle_area() * acc;
}

Eigen::Matrix2d coefficient_integral(const CoefficientField& A, double cell_area, std::span<const int> cells) {
  Eigen::Matrix2d acc = Eigen::Matrix2d::Zero();
  if (cells.empty()) {
    for (int t = 0; t < A.size(); ++t) acc += A[t];
  } else {
    for (int t : cells) acc += A[t];
  }
  return cell_area * acc;
}

FEFunction interpolate(const PeriodicGrid& grid, const ScalarFunction& f) {
  const int n = grid.cells_per_side();
  const double h = grid.spacing();
  FEFunction u = FEFunction::zero(n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) u.values[grid.node(i, j)] = f(i * h, j * h);
  return u;
}

FEFunction prolongate(const FEFunction& u, int fine_n) {
  if (fine_n % u.fine_n != 0) {
    throw PreconditionError("grids are not nested: " + std::to_string(fine_n) + " vs " + std::to_string(u.fine_n));
  }
  if (fine_n == u.fine_n) return u;
  const int s = fine_n / u.fine_n;
  const PeriodicGrid coarse(u.fine_n);
  const PeriodicGrid fine(fine_n);
  FEFunction out = FEFunction::zero(fine_n);
  for (int j = 0; j < fine_n; ++j) {
    for (int i = 0; i < fine_n; ++i) {
      const int I = i / s, J = j / s;
      const double a = double(i - I * s) / s, b = double(j - J * s) / s;
      double v;
      if (a >= b) {
        v = (1.0 - a) * u.values[coarse.node(I, J)] + (a - b) * u.values[coarse.node(I + 1, J)] +
            b * u.values[coarse.node(I + 1, J + 1)];
      } else {
        v = (1.0 - b) * u.values[coarse.node(I, J)] + a * u.values[coarse.node(I + 1, J + 1)] +
            (b - a) * u.values[coarse.node(I, J + 1)];
      }
      out.values[fine.node(i, j)] = v;
    }
  }
  return out;
}

FEFunction solve_mean_zero(const SparseMatrix& K, const LinearForm& b, SolveOptions options,
                           SolveReport* report) {
  const Eigen::Index n = K.rows();
  if (b.values.size() != n) throw PreconditionError("right-hand side size does not match operator");
  const int fine_n = int(std::lround(std::sqrt(double(n))));
  const double b1 = b.values.lpNorm<1>();
  if (std::abs(b.total()) > 1e-12 * std::max(b1, 1e-300)) {
    throw PreconditionError("right-hand side does not annihilate constants (sum = " + std::to_string(b.total()) +
                            ")");
  }
  FEFunction x = FEFunction::zero(fine_n);
  const double bnorm = b.values.norm();
  if (bnorm == 0.0) {
    if (report) *report = {0, 0.0};
    return x;
  }
  const Vector inv_diag = K.diagonal().cwiseInverse();
  auto precondition = [&](const Vector& r) {
    Vector z = inv_diag.cwiseProduct(r);
    z.array() -= z.mean();
    return z;
  };

  Vector r = b.values;
  r.array() -= r.mean();
  Vector z = precondition(r);
  Vector p = z;
  double rz = r.dot(z);
  int it = 0;
  double rel = r.norm() / bnorm;
  while (rel > options.tol && it < options.max_iters) {
    const Vector Kp = K * p;
    const double alpha = rz / p.dot(Kp);
    x.values += alpha * p;
    r -= alpha * Kp;
    r.array() -= r.mean();
    z = precondition(r);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
    ++it;
    rel = r.norm() / bnorm;
  }
  x.remove_mean();
  if (report) *report = {it, rel};
  if (rel > options.tol) {
    throw SolverError("CG did not converge in " + std::to_string(it) + " iterations, residual " +
                          std::to_string(rel),
                      rel);
  }
  return x;
}

GroundedCholesky::GroundedCholesky(const SparseMatrix& K) {
  SparseMatrix G = K;
  G.coeffRef(0, 0) += K.coeff(0, 0);
  llt_.compute(G);
  if (llt_.info() != Eigen::Success) throw SolverError("grounded Cholesky factorization failed");
}

Vector GroundedCholesky::solve(const Vector& b) const { return llt_.solve(b); }

FEFunction solve_model_problem(const PeriodicGrid& grid, const CoefficientField& A, const ScalarFunction& f,
                               SolveOptions options) {
  return solve_mean_zero(assemble_stiffness(grid, A), assemble_load(grid, f), options);
}

FEFunction solve_homogenized(const PeriodicGrid& grid, const Eigen::Matrix2d& A0, const ScalarFunction& f,
                             SolveOptions options) {
  validate_ellipticity(std::span<const Eigen::Matrix2d>(&A0, 1));
  return solve_mean_zero(assemble_stiffness(grid, A0), assemble_load(grid, f), options);
}

namespace {
std::pair<FEFunction, FEFunction> align(const FEFunction& u, const FEFunction& v) {
  const int n = std::max(u.fine_n, v.fine_n);
  return {prolongate(u, n), prolongate(v, n)};
}
}  // namespace

double l2_error(const FEFunction& u, const FEFunction& v) {
  auto [a, b] = align(u, v);
  Vector e = a.values - b.values;
  e.array() -= e.mean();
  const SparseMatrix M = assemble_mass(PeriodicGrid(a.fine_n));
  return std::sqrt(std::max(0.0, e.dot(M * e)));
}

double energy_error(const FEFunction& u, const FEFunction& v, const SparseMatrix& K) {
  auto [a, b] = align(u, v);
  if (K.rows() != a.values.size()) throw PreconditionError("energy matrix does not match the functions");
  const Vector e = a.values - b.values;
  return std::sqrt(std::max(0.0, e.dot(K * e)));
}

}  // namespace ddhom
