#include <doctest.h>

#include <algorithm>
#include <set>

#include "ddhom/error.hpp"
#include "ddhom/mesh.hpp"

using namespace ddhom;

TEST_SUITE("mesh") {
  TEST_CASE("node and triangle counts after periodic identification") {
    const MeshHierarchy mesh = build_mesh_hierarchy(4, 8, 32);
    CHECK(mesh.fine().node_count() == 32 * 32);
    CHECK(mesh.coarse_node_count() == 16);
    CHECK(mesh.square_count() == 16);
    CHECK(mesh.coarse_triangle_count() == 32);
    CHECK(mesh.fine().triangle_count() == 2 * 32 * 32);
    CHECK(mesh.ratio() == 8);
    CHECK(mesh.H() == doctest::Approx(0.25));
    CHECK(mesh.eps() == doctest::Approx(0.125));
    CHECK(mesh.h() == doctest::Approx(1.0 / 32));
  }

  TEST_CASE("inadmissible ratios are rejected with the failing ratio named") {
    auto message = [](int nc, int ne, int nf) {
      try {
        build_mesh_hierarchy(nc, ne, nf);
      } catch (const PreconditionError& e) {
        return std::string(e.what());
      }
      return std::string();
    };
    CHECK(message(4, 6, 48).find("N_eps/N_H") != std::string::npos);
    CHECK(message(4, 8, 36).find("N_h/N_eps") != std::string::npos);
    CHECK_THROWS_AS(build_mesh_hierarchy(1, 4, 16), PreconditionError);
    CHECK_THROWS_AS(build_mesh_hierarchy(4, 0, 16), PreconditionError);
    CHECK_THROWS_AS(build_mesh_hierarchy(4, 8, -8), PreconditionError);
  }

  TEST_CASE("negative-control hierarchies need an explicit opt-in") {
    const MeshHierarchy mesh = build_mesh_hierarchy(4, 6, 48, MeshOptions{true});
    CHECK_FALSE(mesh.commensurate());
    CHECK(build_mesh_hierarchy(4, 8, 32).commensurate());
  }

  TEST_CASE("every fine triangle lies in exactly one coarse triangle and square") {
    const MeshHierarchy mesh = build_mesh_hierarchy(4, 4, 24);
    const auto& fine = mesh.fine();
    const auto& coarse = mesh.coarse();
    std::vector<int> hits(fine.triangle_count(), 0);
    for (int T = 0; T < mesh.coarse_triangle_count(); ++T)
      for (int t : mesh.fine_cells_in_triangle(T)) {
        ++hits[t];
        CHECK(mesh.coarse_triangle_of(t) == T);
        CHECK(mesh.coarse_square_of(t) == T / 2);
      }
    CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));

    // Barycentric coordinates of each fine barycenter in its coarse triangle are positive.
    for (int t = 0; t < fine.triangle_count(); ++t) {
      const int T = mesh.coarse_triangle_of(t);
      const auto v = coarse.triangle_vertices(T);
      const auto grads = coarse.gradients(T);
      const Eigen::Vector2d x = fine.barycenter(t);
      const Eigen::Vector2d z0(v[0].i * mesh.H(), v[0].j * mesh.H());
      const double l1 = grads[1].dot(x - z0), l2 = grads[2].dot(x - z0);
      CHECK(l1 > 0.0);
      CHECK(l2 > 0.0);
      CHECK(1.0 - l1 - l2 > 0.0);
    }
  }

  TEST_CASE("barycentric gradients sum to zero and reproduce vertex differences") {
    const PeriodicGrid grid(5);
    for (int t = 0; t < grid.triangle_count(); ++t) {
      const auto g = grid.gradients(t);
      CHECK((g[0] + g[1] + g[2]).norm() < 1e-12);
      const auto v = grid.triangle_vertices(t);
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          const Eigen::Vector2d d((v[b].i - v[0].i) * grid.spacing(), (v[b].j - v[0].j) * grid.spacing());
          const double expected = (a == b ? 1.0 : 0.0) - (a == 0 ? 1.0 : 0.0);
          CHECK(g[a].dot(d) == doctest::Approx(expected).epsilon(1e-12));
        }
    }
  }

  TEST_CASE("node patches cover four distinct squares and the open 2H box") {
    const MeshHierarchy mesh = build_mesh_hierarchy(4, 4, 16);
    for (int z = 0; z < mesh.coarse_node_count(); ++z) {
      const Patch p = node_patch(mesh, z);
      CHECK(std::set<int>(p.squares.begin(), p.squares.end()).size() == 4);
      CHECK(p.fine_interior_nodes.size() == std::size_t(7 * 7));
      CHECK(std::set<int>(p.fine_interior_nodes.begin(), p.fine_interior_nodes.end()).size() == 49);
    }
    CHECK_THROWS_AS(node_patch(mesh, 16), PreconditionError);
  }

  TEST_CASE("square neighborhoods wrap around the torus") {
    const MeshHierarchy mesh = build_mesh_hierarchy(8, 8, 16);
    const auto n1 = square_neighborhood(mesh, 0, 1);
    CHECK(n1.size() == 9);
    CHECK(std::is_sorted(n1.begin(), n1.end()));
    CHECK(std::find(n1.begin(), n1.end(), mesh.coarse().square(7, 7)) != n1.end());
    CHECK(square_neighborhood(mesh, 5, 0) == std::vector<int>{5});
    CHECK(square_neighborhood(mesh, 3, 4).size() == 64);
    CHECK(square_distance(mesh, mesh.coarse().square(0, 0), mesh.coarse().square(6, 1)) == 2);
  }

  TEST_CASE("support radius counts square layers around Q") {
    const MeshHierarchy mesh = build_mesh_hierarchy(8, 8, 32);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(mesh.fine().node_count());
    CHECK(support_radius(mesh, 0, v) == -1);
    // A node on the closure of square 0 (its upper-right corner).
    v[mesh.fine().node(4, 4)] = 1.0;
    CHECK(support_radius(mesh, 0, v) == 0);
    // A node strictly inside the square two layers to the left (wrapping).
    v[mesh.fine().node(-6, 2)] = 1.0;
    CHECK(support_radius(mesh, 0, v) == 2);
  }
}
