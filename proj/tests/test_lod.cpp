#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>

#include "ddhom/lod.hpp"

using namespace ddhom;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double sine(double x, double) { return kTwoPi * kTwoPi * std::sin(kTwoPi * x); }

struct Fixture {
  MeshHierarchy mesh;
  CoefficientField A;
  QuasiInterpolator interp;
  SchwarzOperator op;

  Fixture(int nc, int ne, int nf, const CoefficientKind& kind)
      : mesh(build_mesh_hierarchy(nc, ne, nf)),
        A(generate_coefficient(CoefficientSpec{kind, 0}, mesh)),
        interp(mesh),
        op(mesh, A, interp) {
    op.set_spectrum(estimate_spectrum(op));
  }
};

double galerkin_energy_error(const Eigen::MatrixXd& Phi, const SparseMatrix& K, const LinearForm& b,
                             const FEFunction& ref) {
  const int n = int(Phi.cols());
  const Eigen::MatrixXd M = Phi.transpose() * (K * Phi);
  const Vector rhs = Phi.transpose() * b.values;
  Vector c = Vector::Zero(n);
  c.tail(n - 1) = M.bottomRightCorner(n - 1, n - 1).llt().solve(rhs.tail(n - 1));
  const Vector e = Phi * c - ref.values;
  return std::sqrt(e.dot(K * e));
}
}  // namespace

TEST_SUITE("lod") {
  TEST_CASE("level zero gives the plain P1 basis") {
    Fixture f(4, 16, 32, LaminateCoefficient{});
    const ElementCorrectors c = build_element_correctors(f.mesh, f.A, f.op, 0);
    CHECK(c.correctors.size() == std::size_t(f.mesh.coarse_triangle_count()));
    for (const auto& tri : c.correctors)
      for (const auto& v : tri) CHECK(v.norm() == 0.0);
    const MultiscaleBasis basis(f.mesh, f.op, c);
    const MultiscaleBasis p1 = MultiscaleBasis::p1(f.mesh, f.op);
    CHECK((basis.functions() - p1.functions()).norm() == 0.0);
  }

  TEST_CASE("corrected basis keeps the coarse nodal values") {
    Fixture f(4, 16, 64, RandomFieldCoefficient{7, 10.0});
    const MultiscaleBasis basis(f.mesh, f.op, build_element_correctors(f.mesh, f.A, f.op, 2));
    CHECK(basis.ell() == 2);
    CHECK(basis.size() == f.mesh.coarse_node_count());
    const Eigen::MatrixXd image = Eigen::MatrixXd(f.interp.matrix()) * basis.functions();
    CHECK((image - Eigen::MatrixXd::Identity(basis.size(), basis.size())).cwiseAbs().maxCoeff() < 1e-11);
    CHECK(basis.corrections().norm() > 0.0);
    // Corrections of all hats sum to zero: the basis still reproduces constants.
    CHECK(basis.corrections().rowwise().sum().cwiseAbs().maxCoeff() < 1e-10);
  }

  TEST_CASE("zero load gives the zero solution and the Galerkin identity holds") {
    Fixture f(4, 16, 64, CheckerboardCoefficient{});
    const MultiscaleBasis basis(f.mesh, f.op, build_element_correctors(f.mesh, f.A, f.op, 1));
    const LinearForm zero{Vector::Zero(f.mesh.fine().node_count())};
    CHECK(lod_solve(basis, f.op.stiffness(), zero, f.mesh.fine_n()).u.values.norm() == 0.0);

    const LinearForm b = assemble_load(f.mesh.fine(), sine);
    const LodSolution s = lod_solve(basis, f.op.stiffness(), b, f.mesh.fine_n());
    CHECK(s.galerkin_residual <= 1e-9);
    CHECK(s.coefficients[0] == 0.0);
    CHECK(std::abs(s.u.mean()) < 1e-12);
    // The grounded coarse matrix is SPD.
    const int n = basis.size();
    CHECK(Eigen::LLT<Eigen::MatrixXd>(basis.coarse_matrix().bottomRightCorner(n - 1, n - 1)).info() == Eigen::Success);
  }

  TEST_CASE("LOD beats coarse P1 for an oscillating coefficient and improves with the level") {
    Fixture f(4, 16, 64, LaminateCoefficient{});
    const SparseMatrix& K = f.op.stiffness();
    const FEFunction ref = solve_model_problem(f.mesh.fine(), f.A, sine, {1e-12, 20000});
    const LinearForm b = assemble_load(f.mesh.fine(), sine);
    const double p1 =
        energy_error_vs_reference(lod_solve(MultiscaleBasis::p1(f.mesh, f.op), K, b, 64).u, ref, K);
    const double lod1 = energy_error_vs_reference(
        lod_solve(MultiscaleBasis(f.mesh, f.op, build_element_correctors(f.mesh, f.A, f.op, 1)), K, b, 64).u, ref, K);
    const double lod4 = energy_error_vs_reference(
        lod_solve(MultiscaleBasis(f.mesh, f.op, build_element_correctors(f.mesh, f.A, f.op, 4)), K, b, 64).u, ref, K);
    CHECK(lod1 < p1);
    CHECK(lod4 < lod1);
    CHECK(lod4 < 0.5 * p1);
  }

  TEST_CASE("subtracting the corrector is the right orientation") {
    Fixture f(4, 16, 64, LaminateCoefficient{});
    const SparseMatrix& K = f.op.stiffness();
    const FEFunction ref = solve_model_problem(f.mesh.fine(), f.A, sine, {1e-12, 20000});
    const LinearForm b = assemble_load(f.mesh.fine(), sine);
    const MultiscaleBasis basis(f.mesh, f.op, build_element_correctors(f.mesh, f.A, f.op, 3));
    const Eigen::MatrixXd E = Eigen::MatrixXd(f.interp.embedding());
    const double minus = galerkin_energy_error(basis.functions(), K, b, ref);
    const double plus = galerkin_energy_error(E + basis.corrections(), K, b, ref);
    CHECK(minus == doctest::Approx(energy_error_vs_reference(lod_solve(basis, K, b, 64).u, ref, K)).epsilon(1e-6));
    CHECK(plus > 2.0 * minus);
  }

  TEST_CASE("LOD energy error for a smooth problem converges at least linearly") {
    const CoefficientSpec spec{ConstantCoefficient{1.0}, 0};
    std::vector<LodRow> rows;
    for (int nc : {4, 8, 16}) rows.push_back(lod_convergence_row(spec, nc, 64, ell_rule_log2(nc), sine));
    CHECK(rows[0].gamma < 1.0);
    CHECK(rows[0].H == doctest::Approx(0.25));
    CHECK(rows[1].ell == 3);
    for (std::size_t k = 1; k < rows.size(); ++k) {
      const double rate = std::log(rows[k - 1].energy_error / rows[k].energy_error) / std::log(2.0);
      CHECK(rate >= 0.9);
      CHECK(rows[k].energy_error <= rows[k].p1_baseline_error);
    }
  }

  TEST_CASE("the error also decreases with the level for a rough coefficient") {
    // Before the localization error drops below the ideal-basis error.
    Fixture f(8, 64, 64, RandomFieldCoefficient{7, 10.0});
    const SparseMatrix& K = f.op.stiffness();
    const FEFunction ref = solve_model_problem(f.mesh.fine(), f.A, sine, {1e-12, 20000});
    const LinearForm b = assemble_load(f.mesh.fine(), sine);
    double prev = energy_error_vs_reference(lod_solve(MultiscaleBasis::p1(f.mesh, f.op), K, b, 64).u, ref, K);
    for (int ell : {1, 2, 3}) {
      const MultiscaleBasis basis(f.mesh, f.op, build_element_correctors(f.mesh, f.A, f.op, ell));
      const double e = energy_error_vs_reference(lod_solve(basis, K, b, 64).u, ref, K);
      CHECK(e < prev);
      prev = e;
    }
  }

  TEST_CASE("basis corrections decay away from their node") {
    Fixture f(8, 32, 32, RandomFieldCoefficient{3, 10.0});
    const MultiscaleBasis basis(f.mesh, f.op, build_element_correctors(f.mesh, f.A, f.op, 8));
    const int ratio = f.mesh.fine_n() / f.mesh.coarse_n();
    auto torus = [&](int i) { return std::min(i, f.mesh.fine_n() - i); };
    // Largest |C lambda_0| on the ring of coarse distance k from the origin.
    std::array<double, 5> ring{};
    const Vector c = basis.corrections().col(0);
    for (int v = 0; v < c.size(); ++v) {
      const auto g = f.mesh.fine().node_index(v);
      const int k = std::max(torus(g.i), torus(g.j)) / ratio;
      ring[k] = std::max(ring[k], std::abs(c[v]));
    }
    for (int k = 2; k <= 4; ++k) CHECK(ring[k] < ring[k - 1]);
    CHECK(ring[4] < 0.05 * ring[0]);
  }

  TEST_CASE("Galerkin check tolerates loads that vanish on the coarse space by symmetry") {
    Fixture f(2, 2, 32, ConstantCoefficient{1.0});
    const LinearForm b = assemble_load(f.mesh.fine(), sine);
    const MultiscaleBasis p1 = MultiscaleBasis::p1(f.mesh, f.op);
    CHECK((p1.functions().transpose() * b.values).cwiseAbs().maxCoeff() < 1e-12);
    CHECK_NOTHROW(lod_solve(p1, f.op.stiffness(), b, 32));
  }

  TEST_CASE("level rule") {
    CHECK(ell_rule_log2(2) == 1);
    CHECK(ell_rule_log2(4) == 2);
    CHECK(ell_rule_log2(5) == 3);
    CHECK(ell_rule_log2(16) == 4);
  }
}
