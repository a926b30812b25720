#pragma once

// Nested structured meshes on the unit torus [0,1)^2.
//
// Every grid is an n x n array of squares, each split into a "lower" and an
// "upper" triangle along its lower-left to upper-right diagonal. Nodes are
// identified periodically by reducing grid coordinates modulo n, so a grid
// with n cells per side has exactly n*n nodes. Numbering is row-major by
// lower-left corner: node(i, j) = j*n + i, square(i, j) = j*n + i and
// triangle = 2*square + {0: lower, 1: upper}.

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace ddhom {

struct GridIndex {
  int i = 0;
  int j = 0;
  friend bool operator==(const GridIndex&, const GridIndex&) = default;
};

/// Reduce k into [0, n).
inline int wrap(int k, int n) {
  const int r = k % n;
  return r < 0 ? r + n : r;
}

class PeriodicGrid {
public:
  explicit PeriodicGrid(int cells_per_side);

  int cells_per_side() const { return n_; }
  double spacing() const { return 1.0 / n_; }
  int node_count() const { return n_ * n_; }
  int square_count() const { return n_ * n_; }
  int triangle_count() const { return 2 * n_ * n_; }
  double triangle_area() const { return 0.5 / (double(n_) * n_); }

  int node(int i, int j) const { return wrap(j, n_) * n_ + wrap(i, n_); }
  GridIndex node_index(int node) const { return {node % n_, node / n_}; }
  int square(int i, int j) const { return node(i, j); }
  int triangle(int i, int j, int upper) const { return 2 * square(i, j) + upper; }

  /// Vertices of triangle t in unwrapped grid coordinates, counter-clockwise,
  /// starting at the square's lower-left corner.
  std::array<GridIndex, 3> triangle_vertices(int t) const;
  std::array<int, 3> triangle_nodes(int t) const;

  /// Gradients of the three barycentric functions of triangle t.
  std::array<Eigen::Vector2d, 3> gradients(int t) const;

  /// Barycenter in unwrapped coordinates (lies in [0,1)^2).
  Eigen::Vector2d barycenter(int t) const;

private:
  int n_;
};

struct MeshOptions {
  /// Admit N_eps that is not a multiple of N_H. Only used for negative
  /// controls; the resulting hierarchy reports commensurate() == false.
  bool allow_incommensurate = false;
};

class MeshHierarchy {
public:
  MeshHierarchy(int n_coarse, int n_eps, int n_fine);

  int coarse_n() const { return coarse_.cells_per_side(); }
  int eps_n() const { return n_eps_; }
  int fine_n() const { return fine_.cells_per_side(); }
  double H() const { return 1.0 / coarse_n(); }
  double eps() const { return 1.0 / n_eps_; }
  double h() const { return 1.0 / fine_n(); }

  /// Fine cells per coarse square edge.
  int ratio() const { return fine_n() / coarse_n(); }
  /// True when H is an integer multiple of eps.
  bool commensurate() const { return n_eps_ % coarse_n() == 0; }

  const PeriodicGrid& fine() const { return fine_; }
  const PeriodicGrid& coarse() const { return coarse_; }

  int square_count() const { return coarse_.square_count(); }
  int coarse_triangle_count() const { return coarse_.triangle_count(); }
  int coarse_node_count() const { return coarse_.node_count(); }

  Eigen::Vector2d square_corner(int q) const;

  int coarse_square_of(int fine_triangle) const { return fine_to_square_[fine_triangle]; }
  int coarse_triangle_of(int fine_triangle) const { return fine_to_triangle_[fine_triangle]; }
  const std::vector<int>& fine_cells_in_square(int q) const { return square_cells_[q]; }
  const std::vector<int>& fine_cells_in_triangle(int t) const { return triangle_cells_[t]; }

private:
  PeriodicGrid coarse_;
  PeriodicGrid fine_;
  int n_eps_;
  std::vector<int> fine_to_square_;
  std::vector<int> fine_to_triangle_;
  std::vector<std::vector<int>> square_cells_;
  std::vector<std::vector<int>> triangle_cells_;
};

/// Validates the nesting ratios and builds the hierarchy. Throws
/// PreconditionError naming the failed ratio.
MeshHierarchy build_mesh_hierarchy(int n_coarse, int n_eps, int n_fine,
                                   MeshOptions options = {});

/// Union of the four coarse squares sharing the vertex z_i.
struct Patch {
  int center_node = -1;
  /// Lower-left, lower-right, upper-left, upper-right.
  std::array<int, 4> squares{};
  /// Fine nodes strictly inside the 2H x 2H square around z_i (periodic cover).
  std::vector<int> fine_interior_nodes;
};

Patch node_patch(const MeshHierarchy& mesh, int coarse_node);

/// Chebyshev distance on the torus measured in square layers.
int square_distance(const MeshHierarchy& mesh, int q1, int q2);

/// All squares within `ell` layers of q, sorted by index.
std::vector<int> square_neighborhood(const MeshHierarchy& mesh, int q, int ell);

/// Smallest L such that every fine node with a nonzero value lies in the
/// closure of square_neighborhood(q, L); -1 when all values are zero.
int support_radius(const MeshHierarchy& mesh, int q, const Eigen::VectorXd& fine_values);

}  // namespace ddhom
