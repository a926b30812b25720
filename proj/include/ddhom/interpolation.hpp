#pragma once

// Quasi-interpolation I_H = E_H o Pi_H from the fine P1 space onto coarse P1:
// an elementwise L2 projection onto affine functions followed by averaging
// the per-element vertex values over all coarse triangles sharing a vertex.

#include <vector>

#include "ddhom/fem.hpp"
#include "ddhom/mesh.hpp"

namespace ddhom {

class QuasiInterpolator {
public:
  explicit QuasiInterpolator(const MeshHierarchy& mesh);

  /// Coarse nodal values from fine nodal values (N_H^2 x N_h^2).
  const SparseMatrix& matrix() const { return IH_; }
  /// Monomial coefficients {1, x1, x2} (local coordinates scaled by H) of
  /// the L2 projection on each coarse triangle, 3 rows per triangle.
  const SparseMatrix& projection() const { return PiH_; }
  /// Vertex averaging of per-triangle affine functions (N_H^2 x 3 n_T).
  const SparseMatrix& averaging() const { return EH_; }
  /// Exact embedding of coarse P1 into the fine space (N_h^2 x N_H^2).
  const SparseMatrix& embedding() const { return embed_; }
  /// Number of coarse triangles sharing each coarse vertex.
  const std::vector<int>& valence() const { return valence_; }

  int fine_n() const { return fine_n_; }

  Vector apply(const Vector& fine_values) const { return IH_ * fine_values; }
  Vector embed(const Vector& coarse_values) const { return embed_ * coarse_values; }

  /// v - E I_H v: the projection onto ker I_H along coarse P1.
  Vector project_to_kernel(const Vector& fine_values) const {
    return fine_values - embed_ * (IH_ * fine_values);
  }

private:
  int fine_n_;
  SparseMatrix PiH_;
  SparseMatrix EH_;
  SparseMatrix IH_;
  SparseMatrix embed_;
  std::vector<int> valence_;
};

QuasiInterpolator build_interpolator(const MeshHierarchy& mesh);

Vector apply_IH(const QuasiInterpolator& op, const FEFunction& v);

/// max |I_H v - mean(I_H v)|: zero exactly when v lies in W = ker I_H modulo
/// constants.
double kernel_residual(const QuasiInterpolator& op, const Vector& v);

}  // namespace ddhom
