#include "ddhom/schwarz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <numeric>
#include <random>

#include "ddhom/error.hpp"
#include "ddhom/lanczos.hpp"
#include "ddhom/parallel.hpp"

namespace ddhom {

// ---- LocalSubspaceSolver ----------------------------------------------------

LocalSubspaceSolver::LocalSubspaceSolver(const MeshHierarchy& mesh, const SparseMatrix& K,
                                         const QuasiInterpolator& interp, const SparseMatrix& K_embed,
                                         const Eigen::MatrixXd& coarse_stiffness, int coarse_node)
    : patch_(node_patch(mesh, coarse_node)) {
  const auto& fine = mesh.fine();
  const auto z = mesh.coarse().node_index(coarse_node);
  const int center = fine.node(z.i * mesh.ratio(), z.j * mesh.ratio());
  for (int v : patch_.fine_interior_nodes)
    if (v != center) dofs_.push_back(v);
  const int m = int(dofs_.size());

  const SparseMatrix& IH = interp.matrix();
  const SparseMatrix& E = interp.embedding();
  std::vector<int> halo_slot(IH.rows(), -1);
  for (int v : dofs_)
    for (SparseMatrix::InnerIterator it(IH, v); it; ++it) halo_slot[it.row()] = 0;
  for (int c = 0; c < int(IH.rows()); ++c)
    if (halo_slot[c] == 0) {
      halo_slot[c] = int(halo_.size());
      halo_.push_back(c);
    }
  const int k = int(halo_.size());

  G_ = Eigen::MatrixXd::Zero(k, m);
  for (int a = 0; a < m; ++a)
    for (SparseMatrix::InnerIterator it(IH, dofs_[a]); it; ++it) G_(halo_slot[it.row()], a) = it.value();

  std::vector<char> in_footprint(fine.node_count(), 0);
  for (int v : dofs_) in_footprint[v] = 1;
  for (int c : halo_)
    for (SparseMatrix::InnerIterator it(E, c); it; ++it) in_footprint[it.row()] = 1;
  std::vector<int> slot(fine.node_count(), -1);
  for (int v = 0; v < fine.node_count(); ++v)
    if (in_footprint[v]) {
      slot[v] = int(footprint_.size());
      footprint_.push_back(v);
    }
  dof_slot_.resize(m);
  for (int a = 0; a < m; ++a) dof_slot_[a] = slot[dofs_[a]];

  EN_ = Eigen::MatrixXd::Zero(int(footprint_.size()), k);
  for (int c = 0; c < k; ++c)
    for (SparseMatrix::InnerIterator it(E, halo_[c]); it; ++it) EN_(slot[it.row()], c) = it.value();

  std::vector<int> local(fine.node_count(), -1);
  for (int a = 0; a < m; ++a) local[dofs_[a]] = a;
  std::vector<Eigen::Triplet<double>> trips;
  for (int a = 0; a < m; ++a)
    for (SparseMatrix::InnerIterator it(K, dofs_[a]); it; ++it)
      if (local[it.row()] >= 0) trips.emplace_back(local[it.row()], a, it.value());
  SparseMatrix Kii(m, m);
  Kii.setFromTriplets(trips.begin(), trips.end());
  interior_ = std::make_unique<Eigen::SimplicialLLT<SparseMatrix>>(Kii);
  if (interior_->info() != Eigen::Success) throw SolverError("patch stiffness factorization failed");

  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(m, k);
  for (int c = 0; c < k; ++c)
    for (SparseMatrix::InnerIterator it(K_embed, halo_[c]); it; ++it)
      if (local[it.row()] >= 0) F(local[it.row()], c) = it.value();
  Eigen::MatrixXd S(k, k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) S(a, b) = coarse_stiffness(halo_[a], halo_[b]);

  // B^T K B = K_ii + U C U^T with U = [G^T, F], C = [[S, -I], [-I, 0]].
  U_.resize(m, 2 * k);
  U_ << G_.transpose(), F;
  Z_ = interior_->solve(U_);
  Eigen::MatrixXd c_inv = Eigen::MatrixXd::Zero(2 * k, 2 * k);
  c_inv.topRightCorner(k, k) = -Eigen::MatrixXd::Identity(k, k);
  c_inv.bottomLeftCorner(k, k) = -Eigen::MatrixXd::Identity(k, k);
  c_inv.bottomRightCorner(k, k) = -S;
  capacitance_.compute(c_inv + U_.transpose() * Z_);
}

Vector LocalSubspaceSolver::gather(const Vector& global) const {
  Vector out(footprint_.size());
  for (std::size_t s = 0; s < footprint_.size(); ++s) out[s] = global[footprint_[s]];
  return out;
}

bool LocalSubspaceSolver::touches(const Vector& form) const {
  for (int v : footprint_)
    if (form[v] != 0.0) return true;
  return false;
}

Vector LocalSubspaceSolver::test_against_basis(const Vector& form) const {
  const Vector rf = gather(form);
  Vector g(dofs_.size());
  for (std::size_t a = 0; a < dofs_.size(); ++a) g[a] = rf[dof_slot_[a]];
  g -= G_.transpose() * (EN_.transpose() * rf);
  return g;
}

Vector LocalSubspaceSolver::solve_local(const Vector& g) const {
  const Vector y0 = interior_->solve(g);
  return y0 - Z_ * capacitance_.solve(U_.transpose() * y0);
}

Vector LocalSubspaceSolver::project(const Vector& form) const {
  const Vector y = solve_local(test_against_basis(form));
  Vector out = -(EN_ * (G_ * y));
  for (std::size_t a = 0; a < dofs_.size(); ++a) out[dof_slot_[a]] += y[a];
  return out;
}

void LocalSubspaceSolver::add_projection(const Vector& form, double scale, Vector& target) const {
  const Vector w = project(form);
  for (std::size_t s = 0; s < footprint_.size(); ++s) target[footprint_[s]] += scale * w[s];
}

std::vector<LocalSubspaceSolver> build_local_solvers(const MeshHierarchy& mesh, const SparseMatrix& K,
                                                     const QuasiInterpolator& interp) {
  const SparseMatrix& E = interp.embedding();
  const SparseMatrix KE = K * E;
  const Eigen::MatrixXd coarse = Eigen::MatrixXd(E.transpose() * KE);
  const int n = mesh.coarse_node_count();
  std::vector<std::optional<LocalSubspaceSolver>> built(n);
  parallel_for(n, [&](int i) { built[i].emplace(mesh, K, interp, KE, coarse, i); });
  std::vector<LocalSubspaceSolver> out;
  out.reserve(n);
  for (auto& b : built) out.push_back(std::move(*b));
  return out;
}

// ---- SchwarzOperator --------------------------------------------------------

SchwarzOperator::SchwarzOperator(const MeshHierarchy& mesh, const CoefficientField& A,
                                 const QuasiInterpolator& interp)
    : mesh_(&mesh), interp_(&interp), K_(assemble_stiffness(mesh.fine(), A)) {
  local_ = build_local_solvers(mesh, K_, interp);
}

Vector SchwarzOperator::apply_local(int i, const Vector& form) const {
  Vector out = Vector::Zero(K_.rows());
  local_[i].add_projection(form, 1.0, out);
  return out;
}

std::vector<int> SchwarzOperator::active_patches(const Vector& form) const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i)
    if (local_[i].touches(form)) out.push_back(i);
  return out;
}

Vector SchwarzOperator::apply_P(const Vector& form) const {
  std::vector<int> all(size());
  std::iota(all.begin(), all.end(), 0);
  return apply_P(form, all);
}

Vector SchwarzOperator::apply_P(const Vector& form, const std::vector<int>& patches) const {
  std::vector<Vector> parts(patches.size());
  parallel_for(int(patches.size()), [&](int p) { parts[p] = local_[patches[p]].project(form); });
  Vector out = Vector::Zero(K_.rows());
  for (std::size_t p = 0; p < patches.size(); ++p) {
    const auto& fp = local_[patches[p]].footprint();
    for (std::size_t s = 0; s < fp.size(); ++s) out[fp[s]] += parts[p][s];
  }
  return out;
}

Vector random_kernel_vector(const QuasiInterpolator& interp, int fine_nodes, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(fine_nodes);
  for (int k = 0; k < fine_nodes; ++k) v[k] = normal(gen);
  return interp.project_to_kernel(v);
}

SpectrumEstimate estimate_spectrum(const SchwarzOperator& op, SpectrumOptions options) {
  const SparseMatrix& K = op.stiffness();
  auto apply = [&](const Vector& v) { return op.apply_P(K * v); };
  // P vanishes on the a-complement of W, so drift out of W would surface as
  // spurious zero Ritz values. The mean shift only moves along constants.
  auto restrict = [&](const Vector& v) {
    Vector w = op.interpolator().project_to_kernel(v);
    w.array() -= w.mean();
    return w;
  };
  auto weight = [&](const Vector& v) { return Vector(K * v); };

  SpectrumEstimate est;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int attempt = 0; attempt <= options.max_restarts; ++attempt) {
    const Vector start = random_kernel_vector(op.interpolator(), int(K.rows()), options.seed + attempt);
    const LanczosResult r = lanczos_extremes(apply, weight, restrict, start, options.max_steps, options.tol);
    lo = std::min(lo, r.lambda_min);
    hi = std::max(hi, r.lambda_max);
    est.lanczos_steps += r.steps;
    est.restarts = attempt;
    est.converged = r.converged;
    if (!r.breakdown) break;
    // An invariant Krylov space holds exact eigenvalues; a fresh start checks
    // that the extremes were not missed.
    est.converged = true;
  }
  est.lambda_min = lo;
  est.lambda_max = hi;
  est.K1 = 1.0 / lo;
  est.K2 = hi;
  est.theta = 2.0 / (lo + hi);
  est.gamma = (hi - lo) / (hi + lo);
  return est;
}

double contraction_ratio(const SchwarzOperator& op, const Vector& v) {
  const Vector Kv = op.stiffness() * v;
  const Vector w = v - op.theta() * op.apply_P(Kv);
  return op.energy_norm(w) / op.energy_norm(v);
}

void require_contraction(const SpectrumEstimate& s) {
  if (!(s.gamma < 1.0)) {
    throw CertificationError("estimated contraction factor " + std::to_string(s.gamma) + " is not below 1");
  }
}

// ---- localized correctors -----------------------------------------------------

CorrectorIteration::CorrectorIteration(const SchwarzOperator& op, Vector rhs_form, bool verify_active_set)
    : op_(&op), rhs_(std::move(rhs_form)), q_(Vector::Zero(op.stiffness().rows())), verify_(verify_active_set) {
  if (!(op.theta() > 0.0)) throw PreconditionError("estimate the spectrum before iterating correctors");
}

void CorrectorIteration::step() {
  const Vector residual = rhs_ - op_->stiffness() * q_;
  const std::vector<int> active = op_->active_patches(residual);
  const Vector update = op_->apply_P(residual, active);
  if (verify_) {
    const Vector full = op_->apply_P(residual);
    if (full != update) throw InternalError("inactive local problem produced a nonzero correction");
  }
  q_ += op_->theta() * update;
  last_active_ = int(active.size());
  ++level_;
}

LocalizedCorrectors iterate_localized_corrector(const SchwarzOperator& op, const CoefficientField& A, int square,
                                                int j, int ell_max, bool keep_all) {
  if (ell_max < 0) throw PreconditionError("ell_max must be nonnegative");
  const MeshHierarchy& mesh = op.mesh();
  LocalizedCorrectors out;
  out.square = square;
  out.j = j;
  CorrectorIteration it(op, assemble_flux_load(mesh, A, square, j).values);
  out.support.push_back(-1);
  out.active_patches.push_back(0);
  if (keep_all) out.iterates.push_back(it.corrector());
  for (int ell = 1; ell <= ell_max; ++ell) {
    it.step();
    out.support.push_back(support_radius(mesh, square, it.corrector()));
    out.active_patches.push_back(it.last_active_count());
    if (keep_all) out.iterates.push_back(it.corrector());
  }
  if (!keep_all) out.iterates.push_back(it.corrector());
  return out;
}

EffectiveTensor localized_tensor(const MeshHierarchy& mesh, const CoefficientField& A,
                                 const std::vector<std::array<Vector, 2>>& q) {
  std::vector<Eigen::Matrix2d> per(mesh.square_count());
  for (int s = 0; s < mesh.square_count(); ++s) per[s] = corrector_tensor(mesh, A, s, q[s]);
  return EffectiveTensor::piecewise(std::move(per));
}

DecaySequence localized_tensor_sequence(const SchwarzOperator& op, const CoefficientField& A, int ell_max) {
  const MeshHierarchy& mesh = op.mesh();
  const int nq = mesh.square_count();
  const double area_Q = mesh.H() * mesh.H();
  // columns[task][ell] = (A_H^ell|_Q) e_j
  std::vector<std::vector<Eigen::Vector2d>> columns(2 * nq);
  std::vector<std::vector<int>> support(2 * nq);
  parallel_for(2 * nq, [&](int task) {
    const int s = task / 2, j = task % 2 + 1;
    const Eigen::Vector2d avg =
        coefficient_integral(A, mesh.fine().triangle_area(), mesh.fine_cells_in_square(s)).col(j - 1) / area_Q;
    CorrectorIteration it(op, assemble_flux_load(mesh, A, s, j).values);
    columns[task].push_back(avg);
    support[task].push_back(-1);
    for (int ell = 1; ell <= ell_max; ++ell) {
      it.step();
      columns[task].push_back(avg - flux_integral(mesh.fine(), A, it.corrector()) / area_Q);
      support[task].push_back(support_radius(mesh, s, it.corrector()));
    }
  });
  DecaySequence out;
  for (int ell = 0; ell <= ell_max; ++ell) {
    std::vector<Eigen::Matrix2d> per(nq);
    int radius = -1;
    for (int s = 0; s < nq; ++s) {
      per[s].col(0) = columns[2 * s][ell];
      per[s].col(1) = columns[2 * s + 1][ell];
      radius = std::max({radius, support[2 * s][ell], support[2 * s + 1][ell]});
    }
    out.tensors.push_back(EffectiveTensor::piecewise(std::move(per)));
    out.max_support.push_back(radius);
  }
  return out;
}

double fit_decay_ratio(const std::vector<double>& errors, double floor) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t ell = 1; ell < errors.size(); ++ell) {
    if (!(errors[ell] > floor)) break;
    const double x = double(ell), y = std::log(errors[ell]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return std::exp(slope);
}

Prop2Report check_proposition2(const CoefficientSpec& spec, int n_eps, int n_fine, const std::vector<int>& coarse_list,
                               SpectrumOptions spectrum_options) {
  constexpr double floor = 1e-9;
  struct Setup {
    MeshHierarchy mesh;
    CoefficientField A;
    QuasiInterpolator interp;
    SchwarzOperator op;
    EffectiveTensor ideal = EffectiveTensor::constant(Eigen::Matrix2d::Zero());
    Setup(MeshHierarchy m, const CoefficientSpec& spec)
        : mesh(std::move(m)), A(generate_coefficient(spec, mesh)), interp(mesh), op(mesh, A, interp) {}
  };
  std::vector<std::unique_ptr<Setup>> setups;
  Prop2Report rep;
  for (int nc : coarse_list) {
    auto s = std::make_unique<Setup>(build_mesh_hierarchy(nc, n_eps, n_fine), spec);
    s->op.set_spectrum(estimate_spectrum(s->op, spectrum_options));
    require_contraction(s->op.spectrum());
    const KernelSolver solver(s->op.stiffness(), s->interp);
    s->ideal = ideal_tensor(s->mesh, s->A, solve_ideal_correctors(s->mesh, s->A, solver));
    rep.max_gamma = std::max(rep.max_gamma, s->op.spectrum().gamma);
    setups.push_back(std::move(s));
  }
  rep.c_ell = int(std::ceil(std::log(2.0) / std::abs(std::log(rep.max_gamma))));
  for (auto& s : setups) {
    Prop2Level lvl;
    lvl.n_coarse = s->mesh.coarse_n();
    lvl.H = s->mesh.H();
    lvl.gamma_est = s->op.spectrum().gamma;
    lvl.ell = int(std::ceil(std::log2(double(lvl.n_coarse)) - 1e-12)) * rep.c_ell;
    const DecaySequence seq = localized_tensor_sequence(s->op, s->A, lvl.ell);
    for (const auto& t : seq.tensors) lvl.decay.push_back(t.max_entry_diff(s->ideal));
    lvl.support = seq.max_support;
    lvl.error = lvl.decay.back();
    lvl.ratio = std::max(lvl.error, floor) / lvl.H;
    rep.levels.push_back(std::move(lvl));
  }
  double worst = 0.0;
  for (const auto& l : rep.levels) worst = std::max(worst, l.ratio);
  rep.certified = !rep.levels.empty() && worst <= 2.0 * rep.levels.front().ratio;
  return rep;
}

}  // namespace ddhom
