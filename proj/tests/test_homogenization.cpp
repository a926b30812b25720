#include <doctest.h>

#include <random>

#include "ddhom/error.hpp"
#include "ddhom/homogenization.hpp"

using namespace ddhom;

namespace {
CoefficientSpec spec_of(CoefficientKind k) { return CoefficientSpec{k, 0}; }

Eigen::Matrix2d cell_tensor(const CoefficientSpec& spec, int n) {
  const PeriodicGrid unit(n);
  const CoefficientField A1 = generate_coefficient(spec, unit, 1);
  return classical_tensor(unit, A1, solve_cell_problems(unit, A1, {1e-12, 20000})).on_square(0);
}
}  // namespace

TEST_SUITE("homogenization") {
  TEST_CASE("constant coefficient homogenizes to itself") {
    CHECK((cell_tensor(spec_of(ConstantCoefficient{2.5}), 8) - 2.5 * Eigen::Matrix2d::Identity()).norm() < 1e-12);
    const MeshHierarchy mesh = build_mesh_hierarchy(2, 2, 16);
    const Prop1Report r = check_proposition1(spec_of(ConstantCoefficient{2.5}), mesh);
    CHECK(r.max_entry_diff < 1e-10);
    // The correctors are not zero; only their flux averages vanish.
    CHECK(r.corrector_energy_constant > 0.0);
  }

  TEST_CASE("laminate tensor is harmonic across and arithmetic along the layers") {
    Eigen::Matrix2d expected;
    expected << 1.6, 0.0, 0.0, 2.5;
    for (int n : {4, 8, 16}) CHECK((cell_tensor(spec_of(LaminateCoefficient{1.0, 4.0, 1}), n) - expected).norm() < 1e-10);
    const Eigen::Matrix2d y = cell_tensor(spec_of(LaminateCoefficient{1.0, 4.0, 2}), 8);
    CHECK(y(0, 0) == doctest::Approx(2.5));
    CHECK(y(1, 1) == doctest::Approx(1.6));
  }

  TEST_CASE("checkerboard tensor is isotropic and inside the elementary bounds") {
    const Eigen::Matrix2d A0 = cell_tensor(spec_of(CheckerboardCoefficient{1.0, 4.0}), 8);
    CHECK(std::abs(A0(0, 1)) < 1e-10);
    CHECK(A0(0, 0) == doctest::Approx(A0(1, 1)).epsilon(1e-10));
    CHECK(A0(0, 0) > 1.6);
    CHECK(A0(0, 0) < 2.5);
    // The discrete value approaches the geometric mean from above.
    CHECK(A0(0, 0) > 2.0);
  }

  TEST_CASE("energy form reproduces the tensor with the subtractive orientation only") {
    for (const CoefficientKind& k :
         std::vector<CoefficientKind>{LaminateCoefficient{}, CheckerboardCoefficient{}, TrigCoefficient{}}) {
      const PeriodicGrid unit(8);
      const CoefficientField A1 = generate_coefficient(spec_of(k), unit, 1);
      const CellCorrectors w = solve_cell_problems(unit, A1, {1e-12, 20000});
      const Eigen::Matrix2d A0 = classical_tensor(unit, A1, w).on_square(0);
      CHECK((cell_energy_tensor(unit, A1, w, -1) - A0).norm() < 1e-9);
      CHECK((cell_energy_tensor(unit, A1, w, +1) - A0).norm() > 0.1);
    }
  }

  TEST_CASE("tensor scales linearly with the coefficient") {
    const PeriodicGrid unit(8);
    const CoefficientField A1 = generate_coefficient(spec_of(CheckerboardCoefficient{}), unit, 1);
    const CoefficientField B1 = A1.scaled(3.0);
    const Eigen::Matrix2d a = classical_tensor(unit, A1, solve_cell_problems(unit, A1, {1e-12, 20000})).on_square(0);
    const Eigen::Matrix2d b = classical_tensor(unit, B1, solve_cell_problems(unit, B1, {1e-12, 20000})).on_square(0);
    CHECK((b - 3.0 * a).norm() < 1e-9);
  }

  TEST_CASE("kernel correctors equal the classical tensor for commensurate periodic coefficients") {
    for (const CoefficientKind& k :
         std::vector<CoefficientKind>{LaminateCoefficient{}, CheckerboardCoefficient{}, TrigCoefficient{}}) {
      const MeshHierarchy mesh = build_mesh_hierarchy(2, 4, 32);
      const Prop1Report r = check_proposition1(spec_of(k), mesh, {1e-12, 20000});
      CHECK(r.precondition_ok);
      CHECK(r.max_entry_diff < 1e-8);
      CHECK(r.per_square_spread < 1e-9);
      CHECK(r.ideal.max_asymmetry() < 1e-9);
      const CoefficientField A = generate_coefficient(spec_of(k), mesh);
      const auto [lo, hi] = r.ideal.spectral_range();
      CHECK(lo >= A.alpha() - 1e-9);
      CHECK(hi <= A.beta() + 1e-9);
    }
  }

  TEST_CASE("incommensurate H breaks the equivalence") {
    const MeshHierarchy mesh = build_mesh_hierarchy(4, 6, 48, MeshOptions{true});
    const Prop1Report r = check_proposition1(spec_of(LaminateCoefficient{}), mesh);
    CHECK_FALSE(r.precondition_ok);
    CHECK(r.max_entry_diff > 0.1);
  }

  TEST_CASE("random fields are not a cell problem") {
    const MeshHierarchy mesh = build_mesh_hierarchy(2, 4, 16);
    CHECK_THROWS_AS(check_proposition1(spec_of(RandomFieldCoefficient{}), mesh), PreconditionError);
  }

  TEST_CASE("kernel solver returns the Galerkin solution in the kernel") {
    const MeshHierarchy mesh = build_mesh_hierarchy(4, 8, 32);
    const CoefficientField A = generate_coefficient(spec_of(RandomFieldCoefficient{5, 20.0}), mesh);
    const QuasiInterpolator I(mesh);
    const SparseMatrix K = assemble_stiffness(mesh.fine(), A);
    const KernelSolver solver(K, I);
    const Vector form = assemble_flux_load(mesh, A, 5, 2).values;
    const Vector q = solver.solve(form);
    CHECK(I.apply(q).cwiseAbs().maxCoeff() < 1e-12);

    std::mt19937_64 gen(3);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 10; ++trial) {
      Vector v(q.size());
      for (auto& x : v) x = normal(gen);
      const Vector w = I.project_to_kernel(v);
      CHECK(std::abs(w.dot(K * q) - form.dot(w)) <= 1e-9 * std::abs(form.dot(w)) + 1e-12);
    }
    // Correctors of the ideal family have bounded energy relative to |Q|.
    const Vector q11 = solve_ideal_corrector(mesh, A, solver, 0, 1);
    CHECK(std::sqrt(q11.dot(K * q11)) / mesh.H() < std::sqrt(A.beta()));
  }

  TEST_CASE("square average is the zero-corrector tensor") {
    const MeshHierarchy mesh = build_mesh_hierarchy(2, 4, 16);
    const CoefficientField A = generate_coefficient(spec_of(LaminateCoefficient{}), mesh);
    const EffectiveTensor avg = square_average(mesh, A);
    const Vector zero = Vector::Zero(mesh.fine().node_count());
    for (int q = 0; q < mesh.square_count(); ++q) {
      CHECK((corrector_tensor(mesh, A, q, {zero, zero}) - avg.on_square(q)).norm() < 1e-14);
      CHECK(avg.on_square(q)(0, 0) == doctest::Approx(2.5));
    }
  }

  TEST_CASE("effective tensor summaries") {
    Eigen::Matrix2d a = Eigen::Matrix2d::Identity(), b;
    b << 2.0, 0.5, 0.25, 3.0;
    const EffectiveTensor t = EffectiveTensor::piecewise({a, b});
    CHECK(t.max_asymmetry() == doctest::Approx(0.25));
    CHECK(t.spread() == doctest::Approx(2.0));
    CHECK(t.max_entry_diff(EffectiveTensor::constant(a)) == doctest::Approx(2.0));
    CHECK(EffectiveTensor::constant(b).on_square(7) == b);
  }
}
