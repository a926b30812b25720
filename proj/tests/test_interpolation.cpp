#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "ddhom/fem.hpp"
#include "ddhom/interpolation.hpp"

using namespace ddhom;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

Vector random_vector(int n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector v(n);
  for (int k = 0; k < n; ++k) v[k] = u(gen);
  return v;
}
}  // namespace

TEST_SUITE("interpolation") {
  TEST_CASE("projection property on coarse P1") {
    const MeshHierarchy mesh = build_mesh_hierarchy(4, 8, 32);
    const QuasiInterpolator I(mesh);
    for (int trial = 0; trial < 100; ++trial) {
      const Vector vH = random_vector(mesh.coarse_node_count(), trial);
      CHECK((I.apply(I.embed(vH)) - vH).cwiseAbs().maxCoeff() <= 1e-12 * vH.cwiseAbs().maxCoeff());
    }
    // An embedded hat comes back as the same hat.
    Vector hat = Vector::Zero(mesh.coarse_node_count());
    hat[5] = 1.0;
    CHECK((I.apply(I.embed(hat)) - hat).cwiseAbs().maxCoeff() < 1e-13);
  }

  TEST_CASE("constants are reproduced") {
    const MeshHierarchy mesh = build_mesh_hierarchy(4, 4, 24);
    const QuasiInterpolator I(mesh);
    const Vector one = I.apply(Vector::Ones(mesh.fine().node_count()));
    CHECK((one.array() - 1.0).abs().maxCoeff() < 1e-13);
  }

  TEST_CASE("vertex valence is six on the structured torus") {
    const QuasiInterpolator I(build_mesh_hierarchy(4, 4, 8));
    for (int v : I.valence()) CHECK(v == 6);
  }

  TEST_CASE("linearity and projection onto the kernel") {
    const MeshHierarchy mesh = build_mesh_hierarchy(2, 4, 16);
    const QuasiInterpolator I(mesh);
    const int n = mesh.fine().node_count();
    const Vector v = random_vector(n, 1), w = random_vector(n, 2);
    CHECK((I.apply(2.0 * v - 3.0 * w) - (2.0 * I.apply(v) - 3.0 * I.apply(w))).cwiseAbs().maxCoeff() < 1e-13);
    const Vector p = I.project_to_kernel(v);
    CHECK((I.project_to_kernel(p) - p).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(kernel_residual(I, p) < 1e-13);
  }

  TEST_CASE("embedded hat minus its image lies in the kernel, the hat itself does not") {
    const MeshHierarchy mesh = build_mesh_hierarchy(4, 4, 16);
    const QuasiInterpolator I(mesh);
    Vector hat = Vector::Zero(mesh.coarse_node_count());
    hat[6] = 1.0;
    const Vector fine_hat = I.embed(hat);
    CHECK(kernel_residual(I, fine_hat - I.embed(I.apply(fine_hat))) < 1e-13);
    CHECK(kernel_residual(I, fine_hat) == doctest::Approx(1.0 - 1.0 / 16));
  }

  TEST_CASE("eps-periodic functions are in the kernel when H is a multiple of eps") {
    for (auto [nc, ne, nf] : {std::tuple{2, 4, 16}, {4, 8, 32}, {4, 16, 64}, {2, 6, 24}, {3, 9, 36}}) {
      const MeshHierarchy mesh = build_mesh_hierarchy(nc, ne, nf);
      const QuasiInterpolator I(mesh);
      const double eps = mesh.eps();
      const FEFunction s = interpolate(mesh.fine(), [&](double x, double) { return std::sin(kTwoPi * x / eps); });
      const Vector image = I.apply(s.values);
      CHECK((image.array() - image.mean()).abs().maxCoeff() < 1e-11);

      // Random fields repeated period by period.
      const int p = nf / ne;
      const Vector cell = random_vector(p * p, 100 + nc);
      Vector v(mesh.fine().node_count());
      for (int j = 0; j < nf; ++j)
        for (int i = 0; i < nf; ++i) v[mesh.fine().node(i, j)] = cell[(j % p) * p + i % p];
      CHECK(kernel_residual(I, v) <= 1e-11 * v.cwiseAbs().maxCoeff());
    }
  }

  TEST_CASE("incommensurate periodic functions leave the kernel") {
    const MeshHierarchy mesh = build_mesh_hierarchy(4, 6, 48, MeshOptions{true});
    const QuasiInterpolator I(mesh);
    const int p = 48 / 6;
    const Vector cell = random_vector(p * p, 11);
    Vector v(mesh.fine().node_count());
    for (int j = 0; j < 48; ++j)
      for (int i = 0; i < 48; ++i) v[mesh.fine().node(i, j)] = cell[(j % p) * p + i % p];
    CHECK(kernel_residual(I, v) > 1e-3);
  }

  TEST_CASE("a fine node only reaches coarse vertices of triangles containing it") {
    const MeshHierarchy mesh = build_mesh_hierarchy(4, 4, 16);
    const QuasiInterpolator I(mesh);
    const auto& fine = mesh.fine();
    const auto& coarse = mesh.coarse();
    // Coarse triangles whose closure contains fine node v: those holding a fine triangle at v.
    std::vector<std::set<int>> allowed(fine.node_count());
    for (int t = 0; t < fine.triangle_count(); ++t) {
      const auto nodes = coarse.triangle_nodes(mesh.coarse_triangle_of(t));
      for (int v : fine.triangle_nodes(t)) allowed[v].insert(nodes.begin(), nodes.end());
    }
    const SparseMatrix& IH = I.matrix();
    for (int v = 0; v < IH.outerSize(); ++v)
      for (SparseMatrix::InnerIterator it(IH, v); it; ++it) CHECK(allowed[v].count(int(it.row())) == 1);
  }

  TEST_CASE("the factors compose to the assembled matrix") {
    const MeshHierarchy mesh = build_mesh_hierarchy(2, 2, 8);
    const QuasiInterpolator I(mesh);
    const Eigen::MatrixXd composed = Eigen::MatrixXd(I.averaging() * I.projection());
    CHECK((composed - Eigen::MatrixXd(I.matrix())).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(I.projection().rows() == 3 * mesh.coarse_triangle_count());
  }
}
