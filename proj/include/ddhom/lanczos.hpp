#pragma once

// Extreme eigenvalues of an operator that is self-adjoint in a weighted inner
// product <u, v> = u^T M v. Full reorthogonalization; the Krylov basis and its
// M-images are kept in memory.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace ddhom {

struct LanczosResult {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  int steps = 0;
  bool converged = false;
  /// Krylov space became invariant before the extremes converged.
  bool breakdown = false;
};

/// `apply(v)` returns T v, `weight(v)` returns M v. `restrict(v)` maps back
/// onto the invariant subspace of interest and is applied after each
/// orthogonalization pass. Converged when the Ritz residual bound of both
/// extreme pairs is below tol * max|theta|.
template <class Apply, class Weight, class Restrict>
LanczosResult lanczos_extremes(Apply&& apply, Weight&& weight, Restrict&& restrict, Eigen::VectorXd start,
                               int max_steps, double tol) {
  using Eigen::VectorXd;
  LanczosResult res;
  std::vector<VectorXd> basis, weighted;
  std::vector<double> alpha, beta;

  start = restrict(start);
  VectorXd Mv = weight(start);
  double norm = std::sqrt(start.dot(Mv));
  if (!(norm > 0.0)) {
    res.breakdown = true;
    return res;
  }
  basis.push_back(start / norm);
  weighted.push_back(Mv / norm);

  for (int k = 0; k < max_steps; ++k) {
    VectorXd w = apply(basis[k]);
    const double a = w.dot(weighted[k]);
    alpha.push_back(a);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i < basis.size(); ++i) w -= w.dot(weighted[i]) * basis[i];
      w = restrict(w);
    }
    VectorXd Mw = weight(w);
    const double b = std::sqrt(std::max(0.0, w.dot(Mw)));

    const int m = int(alpha.size());
    Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      tri(i, i) = alpha[i];
      if (i + 1 < m) tri(i, i + 1) = tri(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tri);
    const auto& theta = es.eigenvalues();
    const double scale = std::max(std::abs(theta[0]), std::abs(theta[m - 1]));
    const double r_min = b * std::abs(es.eigenvectors()(m - 1, 0));
    const double r_max = b * std::abs(es.eigenvectors()(m - 1, m - 1));
    res.lambda_min = theta[0];
    res.lambda_max = theta[m - 1];
    res.steps = m;
    if (b <= 1e-13 * scale) {
      res.breakdown = true;
      return res;
    }
    if (m >= 2 && r_min <= tol * scale && r_max <= tol * scale) {
      res.converged = true;
      return res;
    }
    beta.push_back(b);
    basis.push_back(w / b);
    weighted.push_back(Mw / b);
  }
  return res;
}

template <class Apply, class Weight>
LanczosResult lanczos_extremes(Apply&& apply, Weight&& weight, Eigen::VectorXd start, int max_steps, double tol) {
  return lanczos_extremes(apply, weight, [](const Eigen::VectorXd& v) { return v; }, std::move(start), max_steps,
                          tol);
}

}  // namespace ddhom
