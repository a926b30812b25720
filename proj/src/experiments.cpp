#include "ddhom/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <sstream>

#include "ddhom/error.hpp"
#include "ddhom/homogenization.hpp"
#include "ddhom/lod.hpp"
#include "ddhom/schwarz.hpp"

namespace ddhom {

namespace {

constexpr double kDecayFloor = 1e-9;

SolveOptions reference_options(const ExperimentConfig& c) { return {c.solver.tol_reference, c.solver.max_iters}; }
SolveOptions corrector_options(const ExperimentConfig& c) { return {c.solver.tol_corrector, c.solver.max_iters}; }

SpectrumOptions spectrum_options(const ExperimentConfig& c) {
  SpectrumOptions s;
  s.max_steps = c.spectrum.max_steps;
  s.tol = c.spectrum.tol;
  s.seed = c.seed;
  return s;
}

nlohmann::json matrix_json(const Eigen::Matrix2d& m) {
  return {{m(0, 0), m(0, 1)}, {m(1, 0), m(1, 1)}};
}

// A rate column entry; the first row of a sweep has none.
std::string rate_cell(double r) { return std::isfinite(r) ? format_number(r) : "nan"; }

}  // namespace

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

double fitted_rate(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int n = int(std::min(x.size(), y.size()));
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  for (int i = 0; i < n; ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

RunOutput run_prop1(const ExperimentConfig& c) {
  RunOutput out;
  const MeshHierarchy mesh =
      build_mesh_hierarchy(c.mesh.n_coarse, c.mesh.n_eps, c.mesh.n_fine, MeshOptions{c.mesh.allow_incommensurate});
  if (!mesh.commensurate()) {
    out.warnings.push_back("H is not an integer multiple of eps; the comparison is a negative control");
  }
  const Prop1Report rep = check_proposition1(c.coefficient, mesh, corrector_options(c));

  std::ostringstream csv;
  csv << "tensor,square,a11,a12,a21,a22\n";
  auto row = [&](const char* name, int q, const Eigen::Matrix2d& m) {
    csv << name << ',' << q << ',' << format_number(m(0, 0)) << ',' << format_number(m(0, 1)) << ','
        << format_number(m(1, 0)) << ',' << format_number(m(1, 1)) << '\n';
  };
  row("classical", -1, rep.classical);
  for (int q = 0; q < rep.ideal.size(); ++q) row("ideal", q, rep.ideal.on_square(q));
  out.csv = csv.str();

  nlohmann::json per = nlohmann::json::array();
  for (const auto& m : rep.ideal.values()) per.push_back(matrix_json(m));
  out.report = {{"classical", matrix_json(rep.classical)},
                {"ideal", per},
                {"max_entry_diff", rep.max_entry_diff},
                {"per_square_spread", rep.per_square_spread},
                {"precondition_ok", rep.precondition_ok},
                {"corrector_energy_constant", rep.corrector_energy_constant}};
  return out;
}

RunOutput run_decay(const ExperimentConfig& c) {
  struct Level {
    MeshHierarchy mesh;
    CoefficientField A;
    QuasiInterpolator interp;
    SchwarzOperator op;
    Level(MeshHierarchy m, const CoefficientSpec& spec)
        : mesh(std::move(m)), A(generate_coefficient(spec, mesh)), interp(mesh), op(mesh, A, interp) {}
  };
  std::vector<std::unique_ptr<Level>> levels;
  double max_gamma = 0.0;
  for (int nc : c.mesh.coarse_list) {
    auto lvl = std::make_unique<Level>(build_mesh_hierarchy(nc, c.mesh.n_eps, c.mesh.n_fine), c.coefficient);
    lvl->op.set_spectrum(estimate_spectrum(lvl->op, spectrum_options(c)));
    require_contraction(lvl->op.spectrum());
    max_gamma = std::max(max_gamma, lvl->op.spectrum().gamma);
    levels.push_back(std::move(lvl));
  }
  const int c_ell = int(std::ceil(std::log(2.0) / std::abs(std::log(max_gamma))));

  RunOutput out;
  std::ostringstream csv;
  csv << "H,ell,max_entry_error,gamma_fit,gamma_est,support\n";
  nlohmann::json rows = nlohmann::json::array();
  nlohmann::json per_h = nlohmann::json::array();
  std::vector<double> ratios;
  for (auto& lvl : levels) {
    const int nc = lvl->mesh.coarse_n();
    int ell_max = c.localization.ell;
    if (c.localization.rule == EllRule::ceil_log2) ell_max = ell_rule_log2(nc);
    if (c.localization.rule == EllRule::calibrated) ell_max = ell_rule_log2(nc) * c_ell;

    const KernelSolver solver(lvl->op.stiffness(), lvl->interp);
    const EffectiveTensor ideal = ideal_tensor(lvl->mesh, lvl->A, solve_ideal_correctors(lvl->mesh, lvl->A, solver));
    const DecaySequence seq = localized_tensor_sequence(lvl->op, lvl->A, ell_max);
    std::vector<double> errors;
    for (const auto& t : seq.tensors) errors.push_back(t.max_entry_diff(ideal));
    const double gamma_fit = fit_decay_ratio(errors, kDecayFloor);
    const double gamma_est = lvl->op.spectrum().gamma;
    for (int ell = 0; ell <= ell_max; ++ell) {
      csv << format_number(lvl->mesh.H()) << ',' << ell << ',' << format_number(errors[ell]) << ','
          << rate_cell(gamma_fit) << ',' << format_number(gamma_est) << ',' << seq.max_support[ell] << '\n';
      rows.push_back({{"H", lvl->mesh.H()},
                      {"ell", ell},
                      {"max_entry_error", errors[ell]},
                      {"support", seq.max_support[ell]}});
    }
    const double ratio = std::max(errors.back(), kDecayFloor) / lvl->mesh.H();
    ratios.push_back(ratio);
    const auto& s = lvl->op.spectrum();
    per_h.push_back({{"H", lvl->mesh.H()},
                     {"ell_max", ell_max},
                     {"gamma_est", gamma_est},
                     {"gamma_fit", std::isfinite(gamma_fit) ? nlohmann::json(gamma_fit) : nlohmann::json()},
                     {"lambda_min", s.lambda_min},
                     {"lambda_max", s.lambda_max},
                     {"theta", s.theta},
                     {"lanczos_steps", s.lanczos_steps},
                     {"error_over_H", ratio}});
  }
  out.csv = csv.str();
  out.report = {{"rows", rows}, {"levels", per_h}, {"c_ell", c_ell}, {"max_gamma", max_gamma}};
  if (c.localization.rule == EllRule::calibrated && !ratios.empty()) {
    double worst = 0.0;
    for (double r : ratios) worst = std::max(worst, r);
    out.report["certified"] = worst <= 2.0 * ratios.front();
  }
  return out;
}

RunOutput run_hom_error(const ExperimentConfig& c) {
  const ScalarFunction f = rhs_function(c.rhs);
  const PeriodicGrid unit(c.mesh.fine_per_eps);
  const CoefficientField A1 = generate_coefficient(c.coefficient, unit, 1);
  const Eigen::Matrix2d A0 =
      classical_tensor(unit, A1, solve_cell_problems(unit, A1, corrector_options(c))).on_square(0);

  RunOutput out;
  std::ostringstream csv;
  csv << "eps,l2_error,rate\n";
  nlohmann::json rows = nlohmann::json::array();
  std::vector<double> eps, err;
  for (int ne : c.mesh.eps_list) {
    const PeriodicGrid fine(ne * c.mesh.fine_per_eps);
    const CoefficientField A = generate_coefficient(c.coefficient, fine, ne);
    const FEFunction u_eps = solve_model_problem(fine, A, f, reference_options(c));
    const FEFunction u_0 = solve_homogenized(fine, A0, f, reference_options(c));
    eps.push_back(1.0 / ne);
    err.push_back(l2_error(u_eps, u_0));
    double rate = std::numeric_limits<double>::quiet_NaN();
    if (eps.size() >= 2) {
      const std::size_t k = eps.size() - 1;
      rate = std::log(err[k - 1] / err[k]) / std::log(eps[k - 1] / eps[k]);
    }
    csv << format_number(eps.back()) << ',' << format_number(err.back()) << ',' << rate_cell(rate) << '\n';
    rows.push_back({{"eps", eps.back()},
                    {"l2_error", err.back()},
                    {"rate", std::isfinite(rate) ? nlohmann::json(rate) : nlohmann::json()}});
  }
  out.csv = csv.str();
  const double fit = fitted_rate(eps, err);
  out.report = {{"rows", rows}, {"A0", matrix_json(A0)}, {"fitted_rate", fit}};
  return out;
}

RunOutput run_lod(const ExperimentConfig& c) {
  const ScalarFunction f = rhs_function(c.rhs);
  CoefficientSpec spec = c.coefficient;
  if (spec.periodic() && spec.n_eps == 0) spec.n_eps = c.mesh.n_eps;

  RunOutput out;
  std::ostringstream csv;
  csv << "H,ell,energy_error,l2_error,p1_baseline_error,gamma_est\n";
  nlohmann::json rows = nlohmann::json::array();
  std::vector<double> hs, lod_err, p1_err;
  for (int nc : c.mesh.coarse_list) {
    const int ell = c.localization.rule == EllRule::fixed ? c.localization.ell : ell_rule_log2(nc);
    const LodRow r = lod_convergence_row(spec, nc, c.mesh.n_fine, ell, f, spectrum_options(c), reference_options(c));
    csv << format_number(r.H) << ',' << r.ell << ',' << format_number(r.energy_error) << ','
        << format_number(r.l2_error) << ',' << format_number(r.p1_baseline_error) << ',' << format_number(r.gamma)
        << '\n';
    rows.push_back({{"H", r.H},
                    {"ell", r.ell},
                    {"energy_error", r.energy_error},
                    {"l2_error", r.l2_error},
                    {"p1_baseline_error", r.p1_baseline_error},
                    {"gamma_est", r.gamma}});
    hs.push_back(r.H);
    lod_err.push_back(r.energy_error);
    p1_err.push_back(r.p1_baseline_error);
  }
  out.csv = csv.str();
  out.report = {{"rows", rows}, {"lod_rate", fitted_rate(hs, lod_err)}, {"p1_rate", fitted_rate(hs, p1_err)}};
  return out;
}

RunOutput run_experiment(const ExperimentConfig& config) {
  validate_config(config);
  switch (config.experiment) {
    case ExperimentKind::prop1: return run_prop1(config);
    case ExperimentKind::decay: return run_decay(config);
    case ExperimentKind::hom_error: return run_hom_error(config);
    case ExperimentKind::lod: return run_lod(config);
  }
  throw InternalError("unknown experiment kind");
}

}  // namespace ddhom
