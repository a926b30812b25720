#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "ddhom/mesh.hpp"

namespace ddhom {

// Test-coefficient catalog. Periodic kinds are described on the unit cell
// [0,1)^2 and rescaled to period eps on the mesh.

/// c * identity.
struct ConstantCoefficient {
  double value = 1.0;
  bool operator==(const ConstantCoefficient&) const = default;
};
/// Layers perpendicular to `axis` (1 or 2): a_minus on the first half of each
/// period, a_plus on the second half.
struct LaminateCoefficient {
  double a_minus = 1.0;
  double a_plus = 4.0;
  int axis = 1;
  bool operator==(const LaminateCoefficient&) const = default;
};
/// Scalar field on an (eps/2)-checkerboard, value a on the square at the origin.
struct CheckerboardCoefficient {
  double a = 1.0;
  double b = 4.0;
  bool operator==(const CheckerboardCoefficient&) const = default;
};
/// mean + amplitude * sin(2 pi y1) sin(2 pi y2) sampled at cell barycenters.
struct TrigCoefficient {
  double amplitude = 0.5;
  double mean = 1.0;
  bool operator==(const TrigCoefficient&) const = default;
};
/// Non-periodic: per-cell scalar, log-uniform in [1, contrast].
struct RandomFieldCoefficient {
  std::uint64_t seed = 0;
  double contrast = 10.0;
  bool operator==(const RandomFieldCoefficient&) const = default;
};

using CoefficientKind = std::variant<ConstantCoefficient, LaminateCoefficient, CheckerboardCoefficient,
                                     TrigCoefficient, RandomFieldCoefficient>;

struct CoefficientSpec {
  CoefficientKind kind = ConstantCoefficient{};
  /// Number of periods per unit length; 0 means "take N_eps from the mesh".
  int n_eps = 0;

  bool operator==(const CoefficientSpec&) const = default;
  bool periodic() const { return !std::holds_alternative<RandomFieldCoefficient>(kind); }
  std::string name() const;
};

/// Piecewise constant symmetric 2x2 field, one matrix per fine triangle.
class CoefficientField {
public:
  /// Throws PreconditionError if any matrix is non-symmetric or not positive definite.
  CoefficientField(int fine_n, std::vector<Eigen::Matrix2d> cells);

  static CoefficientField uniform(int fine_n, const Eigen::Matrix2d& value);

  int fine_n() const { return fine_n_; }
  int size() const { return int(cells_.size()); }
  const Eigen::Matrix2d& operator[](int t) const { return cells_[t]; }
  std::span<const Eigen::Matrix2d> cells() const { return cells_; }

  double alpha() const { return alpha_; }
  double beta() const { return beta_; }

  CoefficientField scaled(double factor) const;

private:
  int fine_n_;
  std::vector<Eigen::Matrix2d> cells_;
  double alpha_ = 0.0;
  double beta_ = 0.0;
};

CoefficientField generate_coefficient(const CoefficientSpec& spec, const MeshHierarchy& mesh);

/// Sample on a bare periodic grid with `n_eps` periods per side (n_eps = 1
/// gives the unit-cell coefficient A_1).
CoefficientField generate_coefficient(const CoefficientSpec& spec, const PeriodicGrid& fine, int n_eps);

/// Extreme eigenvalues (alpha, beta) over all cells.
std::pair<double, double> validate_ellipticity(std::span<const Eigen::Matrix2d> cells);
std::pair<double, double> validate_ellipticity(const CoefficientField& field);

}  // namespace ddhom
