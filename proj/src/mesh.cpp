#include "ddhom/mesh.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "ddhom/error.hpp"

namespace ddhom {

PeriodicGrid::PeriodicGrid(int cells_per_side) : n_(cells_per_side) {
  if (n_ < 1) throw PreconditionError("grid needs at least one cell per side");
}

std::array<GridIndex, 3> PeriodicGrid::triangle_vertices(int t) const {
  const int sq = t / 2;
  const int i = sq % n_;
  const int j = sq / n_;
  if (t % 2 == 0) return {GridIndex{i, j}, GridIndex{i + 1, j}, GridIndex{i + 1, j + 1}};
  return {GridIndex{i, j}, GridIndex{i + 1, j + 1}, GridIndex{i, j + 1}};
}

std::array<int, 3> PeriodicGrid::triangle_nodes(int t) const {
  const auto v = triangle_vertices(t);
  return {node(v[0].i, v[0].j), node(v[1].i, v[1].j), node(v[2].i, v[2].j)};
}

std::array<Eigen::Vector2d, 3> PeriodicGrid::gradients(int t) const {
  const double s = n_;
  if (t % 2 == 0) {
    // (0,0), (h,0), (h,h): 1 - x/h, (x - y)/h, y/h
    return {Eigen::Vector2d(-s, 0.0), Eigen::Vector2d(s, -s), Eigen::Vector2d(0.0, s)};
  }
  // (0,0), (h,h), (0,h): 1 - y/h, x/h, (y - x)/h
  return {Eigen::Vector2d(0.0, -s), Eigen::Vector2d(s, 0.0), Eigen::Vector2d(-s, s)};
}

Eigen::Vector2d PeriodicGrid::barycenter(int t) const {
  const auto v = triangle_vertices(t);
  const double h = spacing();
  return {h * (v[0].i + v[1].i + v[2].i) / 3.0, h * (v[0].j + v[1].j + v[2].j) / 3.0};
}

MeshHierarchy::MeshHierarchy(int n_coarse, int n_eps, int n_fine)
    : coarse_(n_coarse), fine_(n_fine), n_eps_(n_eps) {
  const int r = n_fine / n_coarse;
  fine_to_square_.resize(fine_.triangle_count());
  fine_to_triangle_.resize(fine_.triangle_count());
  square_cells_.assign(coarse_.square_count(), {});
  triangle_cells_.assign(coarse_.triangle_count(), {});
  for (int t = 0; t < fine_.triangle_count(); ++t) {
    const int sq = t / 2;
    const int i = sq % n_fine;
    const int j = sq / n_fine;
    const int I = i / r;
    const int J = j / r;
    const int a = i - I * r;
    const int b = j - J * r;
    // Lower coarse triangle holds local points below the diagonal. Fine
    // squares on the diagonal split along it, matching the coarse split.
    int upper = 0;
    if (a < b) upper = 1;
    else if (a == b) upper = t % 2;
    const int q = coarse_.square(I, J);
    fine_to_square_[t] = q;
    fine_to_triangle_[t] = 2 * q + upper;
    square_cells_[q].push_back(t);
    triangle_cells_[2 * q + upper].push_back(t);
  }
}

Eigen::Vector2d MeshHierarchy::square_corner(int q) const {
  const auto g = coarse_.node_index(q);
  return {g.i * H(), g.j * H()};
}

MeshHierarchy build_mesh_hierarchy(int n_coarse, int n_eps, int n_fine, MeshOptions options) {
  if (n_coarse < 2) throw PreconditionError("N_H must be at least 2, got " + std::to_string(n_coarse));
  if (n_eps < 1 || n_fine < 1) throw PreconditionError("N_eps and N_h must be positive");
  if (n_eps % n_coarse != 0 && !options.allow_incommensurate) {
    throw PreconditionError("N_eps/N_H: " + std::to_string(n_eps) + " is not a multiple of " +
                            std::to_string(n_coarse));
  }
  if (n_fine % n_eps != 0) {
    throw PreconditionError("N_h/N_eps: " + std::to_string(n_fine) + " is not a multiple of " +
                            std::to_string(n_eps));
  }
  if (n_fine % n_coarse != 0) {
    throw PreconditionError("N_h/N_H: " + std::to_string(n_fine) + " is not a multiple of " +
                            std::to_string(n_coarse));
  }
  const std::int64_t cells = 2 * std::int64_t(n_fine) * n_fine;
  if (cells > std::numeric_limits<int>::max() / 4) {
    throw PreconditionError("N_h = " + std::to_string(n_fine) + " overflows the cell index range");
  }
  return MeshHierarchy(n_coarse, n_eps, n_fine);
}

Patch node_patch(const MeshHierarchy& mesh, int coarse_node) {
  const auto& coarse = mesh.coarse();
  if (coarse_node < 0 || coarse_node >= coarse.node_count()) {
    throw PreconditionError("coarse node index out of range");
  }
  const auto z = coarse.node_index(coarse_node);
  Patch p;
  p.center_node = coarse_node;
  p.squares = {coarse.square(z.i - 1, z.j - 1), coarse.square(z.i, z.j - 1),
               coarse.square(z.i - 1, z.j), coarse.square(z.i, z.j)};
  const int r = mesh.ratio();
  const auto& fine = mesh.fine();
  p.fine_interior_nodes.reserve(std::size_t(2 * r - 1) * (2 * r - 1));
  for (int b = -r + 1; b < r; ++b)
    for (int a = -r + 1; a < r; ++a) p.fine_interior_nodes.push_back(fine.node(z.i * r + a, z.j * r + b));
  return p;
}

namespace {
int torus_gap(int a, int b, int n) {
  const int d = wrap(a - b, n);
  return std::min(d, n - d);
}
}  // namespace

int square_distance(const MeshHierarchy& mesh, int q1, int q2) {
  const auto& c = mesh.coarse();
  const auto a = c.node_index(q1);
  const auto b = c.node_index(q2);
  return std::max(torus_gap(a.i, b.i, c.cells_per_side()), torus_gap(a.j, b.j, c.cells_per_side()));
}

std::vector<int> square_neighborhood(const MeshHierarchy& mesh, int q, int ell) {
  if (ell < 0) throw PreconditionError("neighborhood depth must be nonnegative");
  std::vector<int> out;
  for (int s = 0; s < mesh.square_count(); ++s)
    if (square_distance(mesh, q, s) <= ell) out.push_back(s);
  return out;
}

int support_radius(const MeshHierarchy& mesh, int q, const Eigen::VectorXd& fine_values) {
  const auto& fine = mesh.fine();
  const auto& coarse = mesh.coarse();
  const int r = mesh.ratio();
  int radius = -1;
  for (int k = 0; k < fine.node_count(); ++k) {
    if (fine_values[k] == 0.0) continue;
    const auto g = fine.node_index(k);
    const int i0 = g.i % r == 0 ? g.i / r - 1 : g.i / r;
    const int j0 = g.j % r == 0 ? g.j / r - 1 : g.j / r;
    int best = std::numeric_limits<int>::max();
    for (int I = i0; I <= g.i / r; ++I)
      for (int J = j0; J <= g.j / r; ++J)
        best = std::min(best, square_distance(mesh, q, coarse.square(I, J)));
    radius = std::max(radius, best);
  }
  return radius;
}

}  // namespace ddhom
