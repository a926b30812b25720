#include "ddhom/coefficient.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "ddhom/error.hpp"

namespace ddhom {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Uniform in [0, 1), a pure function of (seed, counter).
double counter_uniform(std::uint64_t seed, std::uint64_t counter) {
  const std::uint64_t bits = splitmix64(splitmix64(seed) ^ counter);
  return double(bits >> 11) * 0x1.0p-53;
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw PreconditionError(std::string(what) + " must be positive and finite");
  }
}

}  // namespace

std::string CoefficientSpec::name() const {
  std::ostringstream os;
  std::visit(overloaded{
                 [&](const ConstantCoefficient& c) { os << "constant(" << c.value << ")"; },
                 [&](const LaminateCoefficient& c) {
                   os << "laminate(" << c.a_minus << "," << c.a_plus << ",axis=" << c.axis << ")";
                 },
                 [&](const CheckerboardCoefficient& c) { os << "checkerboard(" << c.a << "," << c.b << ")"; },
                 [&](const TrigCoefficient& c) { os << "trig(" << c.amplitude << "," << c.mean << ")"; },
                 [&](const RandomFieldCoefficient& c) {
                   os << "random_field(seed=" << c.seed << ",contrast=" << c.contrast << ")";
                 },
             },
             kind);
  return os.str();
}

std::pair<double, double> validate_ellipticity(std::span<const Eigen::Matrix2d> cells) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t t = 0; t < cells.size(); ++t) {
    const auto& m = cells[t];
    const double scale = std::max({std::abs(m(0, 0)), std::abs(m(1, 1)), std::abs(m(0, 1))});
    if (!m.allFinite()) throw PreconditionError("coefficient has non-finite entries in cell " + std::to_string(t));
    if (std::abs(m(0, 1) - m(1, 0)) > 1e-14 * scale) {
      throw PreconditionError("coefficient is not symmetric in cell " + std::to_string(t));
    }
    const double mean = 0.5 * (m(0, 0) + m(1, 1));
    const double rad = std::hypot(0.5 * (m(0, 0) - m(1, 1)), m(0, 1));
    const double emin = mean - rad;
    const double emax = mean + rad;
    if (!(emin > 0.0)) {
      throw PreconditionError("coefficient is not positive definite in cell " + std::to_string(t));
    }
    lo = std::min(lo, emin);
    hi = std::max(hi, emax);
  }
  return {lo, hi};
}

std::pair<double, double> validate_ellipticity(const CoefficientField& field) {
  return validate_ellipticity(field.cells());
}

CoefficientField::CoefficientField(int fine_n, std::vector<Eigen::Matrix2d> cells)
    : fine_n_(fine_n), cells_(std::move(cells)) {
  if (int(cells_.size()) != 2 * fine_n * fine_n) {
    throw PreconditionError("coefficient needs one matrix per fine triangle");
  }
  std::tie(alpha_, beta_) = validate_ellipticity(cells_);
}

CoefficientField CoefficientField::uniform(int fine_n, const Eigen::Matrix2d& value) {
  return CoefficientField(fine_n, std::vector<Eigen::Matrix2d>(std::size_t(2) * fine_n * fine_n, value));
}

CoefficientField CoefficientField::scaled(double factor) const {
  std::vector<Eigen::Matrix2d> out(cells_.begin(), cells_.end());
  for (auto& m : out) m *= factor;
  return CoefficientField(fine_n_, std::move(out));
}

CoefficientField generate_coefficient(const CoefficientSpec& spec, const MeshHierarchy& mesh) {
  if (spec.periodic() && spec.n_eps != 0 && spec.n_eps != mesh.eps_n()) {
    throw PreconditionError("coefficient period 1/" + std::to_string(spec.n_eps) +
                            " does not match mesh eps 1/" + std::to_string(mesh.eps_n()));
  }
  return generate_coefficient(spec, mesh.fine(), mesh.eps_n());
}

CoefficientField generate_coefficient(const CoefficientSpec& spec, const PeriodicGrid& fine, int n_eps) {
  const int n = fine.cells_per_side();
  if (spec.periodic()) {
    if (n_eps < 1 || n % n_eps != 0) {
      throw PreconditionError("fine grid does not resolve the period: N_h/N_eps not integral");
    }
  }
  const int p = spec.periodic() ? n / n_eps : 0;  // fine cells per period
  auto need_even = [&](const char* kind) {
    if (p % 2 != 0) {
      throw PreconditionError(std::string(kind) + " needs an even number of fine cells per period, got " +
                              std::to_string(p));
    }
  };

  std::vector<Eigen::Matrix2d> cells(std::size_t(fine.triangle_count()));
  const Eigen::Matrix2d id = Eigen::Matrix2d::Identity();

  std::visit(overloaded{
                 [&](const ConstantCoefficient& c) {
                   require_positive(c.value, "constant value");
                   std::fill(cells.begin(), cells.end(), c.value * id);
                 },
                 [&](const LaminateCoefficient& c) {
                   require_positive(c.a_minus, "laminate a_minus");
                   require_positive(c.a_plus, "laminate a_plus");
                   if (c.axis != 1 && c.axis != 2) throw PreconditionError("laminate axis must be 1 or 2");
                   need_even("laminate");
                   for (int t = 0; t < fine.triangle_count(); ++t) {
                     const auto g = fine.node_index(t / 2);
                     const int local = (c.axis == 1 ? g.i : g.j) % p;
                     cells[t] = (local < p / 2 ? c.a_minus : c.a_plus) * id;
                   }
                 },
                 [&](const CheckerboardCoefficient& c) {
                   require_positive(c.a, "checkerboard a");
                   require_positive(c.b, "checkerboard b");
                   need_even("checkerboard");
                   for (int t = 0; t < fine.triangle_count(); ++t) {
                     const auto g = fine.node_index(t / 2);
                     const bool left = g.i % p < p / 2;
                     const bool bottom = g.j % p < p / 2;
                     cells[t] = (left == bottom ? c.a : c.b) * id;
                   }
                 },
                 [&](const TrigCoefficient& c) {
                   if (!(c.mean > std::abs(c.amplitude))) {
                     throw PreconditionError("trig coefficient needs mean > |amplitude|");
                   }
                   if (p < 4) throw PreconditionError("trig coefficient needs at least 4 fine cells per period");
                   const double two_pi = 2.0 * std::numbers::pi;
                   for (int t = 0; t < fine.triangle_count(); ++t) {
                     const auto g = fine.node_index(t / 2);
                     // Barycenter offset inside the fine square: lower (2/3,1/3), upper (1/3,2/3).
                     const double ox = t % 2 == 0 ? 2.0 / 3.0 : 1.0 / 3.0;
                     const double y1 = (g.i % p + ox) / p;
                     const double y2 = (g.j % p + 1.0 - ox) / p;
                     cells[t] = (c.mean + c.amplitude * std::sin(two_pi * y1) * std::sin(two_pi * y2)) * id;
                   }
                 },
                 [&](const RandomFieldCoefficient& c) {
                   if (!(c.contrast >= 1.0)) throw PreconditionError("random_field contrast must be >= 1");
                   const double log_c = std::log(c.contrast);
                   for (int t = 0; t < fine.triangle_count(); ++t) {
                     cells[t] = std::exp(log_c * counter_uniform(c.seed, std::uint64_t(t))) * id;
                   }
                 },
             },
             spec.kind);

  return CoefficientField(n, std::move(cells));
}

}  // namespace ddhom
