#include "ddhom/interpolation.hpp"

#include <Eigen/Dense>

#include "ddhom/error.hpp"

namespace ddhom {

namespace {

using Triplet = Eigen::Triplet<double>;

// Monomials {1, x1, x2} at a point in local coordinates.
Eigen::Vector3d monomials(double x1, double x2) { return {1.0, x1, x2}; }

// Exact int_T p q for affine p, q given by their vertex values.
double affine_product_integral(double area, const Eigen::Vector3d& p, const Eigen::Vector3d& q) {
  return area / 12.0 * (p.dot(q) + p.sum() * q.sum());
}

}  // namespace

QuasiInterpolator::QuasiInterpolator(const MeshHierarchy& mesh) : fine_n_(mesh.fine_n()) {
  const auto& coarse = mesh.coarse();
  const auto& fine = mesh.fine();
  const int r = mesh.ratio();
  const int n_tri = coarse.triangle_count();
  const double coarse_area = coarse.triangle_area();
  const double fine_area = fine.triangle_area();

  valence_.assign(coarse.node_count(), 0);
  for (int T = 0; T < n_tri; ++T)
    for (int z : coarse.triangle_nodes(T)) ++valence_[z];

  std::vector<Triplet> pi_trips;
  std::vector<Triplet> eh_trips;
  for (int T = 0; T < n_tri; ++T) {
    const auto cv = coarse.triangle_vertices(T);
    const GridIndex origin = cv[0];
    // Vertex monomial table (rows: vertices, cols: monomials).
    Eigen::Matrix3d at_vertices;
    for (int k = 0; k < 3; ++k)
      at_vertices.row(k) = monomials(cv[k].i - origin.i, cv[k].j - origin.j).transpose();
    Eigen::Matrix3d gram;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) gram(a, b) = affine_product_integral(coarse_area, at_vertices.col(a), at_vertices.col(b));
    const Eigen::Matrix3d gram_inv = gram.inverse();
    if (!gram_inv.allFinite()) throw InternalError("singular local Gram matrix");

    for (int t : mesh.fine_cells_in_triangle(T)) {
      const auto fv = fine.triangle_vertices(t);
      const auto nodes = fine.triangle_nodes(t);
      Eigen::Matrix3d m_at;  // monomials at the fine vertices
      for (int k = 0; k < 3; ++k) {
        m_at.row(k) = monomials(double(fv[k].i - origin.i * r) / r, double(fv[k].j - origin.j * r) / r).transpose();
      }
      // moment_m(v) += sum_k v_k * |t|/12 (m(p_k) + sum_l m(p_l))
      for (int k = 0; k < 3; ++k) {
        Eigen::Vector3d moment;
        for (int m = 0; m < 3; ++m) moment[m] = fine_area / 12.0 * (m_at(k, m) + m_at.col(m).sum());
        const Eigen::Vector3d coeff = gram_inv * moment;
        for (int m = 0; m < 3; ++m) pi_trips.emplace_back(3 * T + m, nodes[k], coeff[m]);
      }
    }

    const auto cn = coarse.triangle_nodes(T);
    for (int k = 0; k < 3; ++k)
      for (int m = 0; m < 3; ++m) eh_trips.emplace_back(cn[k], 3 * T + m, at_vertices(k, m) / valence_[cn[k]]);
  }

  PiH_.resize(3 * n_tri, fine.node_count());
  PiH_.setFromTriplets(pi_trips.begin(), pi_trips.end());
  EH_.resize(coarse.node_count(), 3 * n_tri);
  EH_.setFromTriplets(eh_trips.begin(), eh_trips.end());
  IH_ = (EH_ * PiH_).pruned();

  std::vector<Triplet> em_trips;
  const int nf = fine.cells_per_side();
  for (int j = 0; j < nf; ++j) {
    for (int i = 0; i < nf; ++i) {
      const int I = i / r, J = j / r;
      const int a = i - I * r, b = j - J * r;
      const int node = fine.node(i, j);
      auto put = [&](int ci, int cj, int num) {
        if (num != 0) em_trips.emplace_back(node, coarse.node(ci, cj), double(num) / r);
      };
      if (a >= b) {
        put(I, J, r - a);
        put(I + 1, J, a - b);
        put(I + 1, J + 1, b);
      } else {
        put(I, J, r - b);
        put(I + 1, J + 1, a);
        put(I, J + 1, b - a);
      }
    }
  }
  embed_.resize(fine.node_count(), coarse.node_count());
  embed_.setFromTriplets(em_trips.begin(), em_trips.end());
}

QuasiInterpolator build_interpolator(const MeshHierarchy& mesh) { return QuasiInterpolator(mesh); }

Vector apply_IH(const QuasiInterpolator& op, const FEFunction& v) {
  if (v.fine_n != op.fine_n()) throw PreconditionError("function lives on a different fine mesh");
  return op.apply(v.values);
}

double kernel_residual(const QuasiInterpolator& op, const Vector& v) {
  Vector c = op.apply(v);
  c.array() -= c.mean();
  return c.lpNorm<Eigen::Infinity>();
}

}  // namespace ddhom
