#include "ddhom/config.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <set>
#include <sstream>

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include "ddhom/error.hpp"
#include "ddhom/mesh.hpp"

namespace ddhom {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

[[noreturn]] void fail(const std::string& msg) { throw PreconditionError("config: " + msg); }

void check_keys(const YAML::Node& node, const std::string& where, const std::set<std::string>& allowed) {
  if (!node.IsMap()) fail(where + " must be a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) fail("unknown key '" + key + "' in " + where);
  }
}

template <class T>
void read(const YAML::Node& node, const char* key, T& out, const std::string& where) {
  if (!node[key]) return;
  try {
    out = node[key].as<T>();
  } catch (const YAML::Exception&) {
    fail("bad value for " + where + "." + key);
  }
}

ExperimentKind parse_experiment(const std::string& s) {
  if (s == "prop1") return ExperimentKind::prop1;
  if (s == "decay") return ExperimentKind::decay;
  if (s == "hom-error") return ExperimentKind::hom_error;
  if (s == "lod") return ExperimentKind::lod;
  fail("unknown experiment '" + s + "'");
}

EllRule parse_rule(const std::string& s) {
  if (s == "fixed") return EllRule::fixed;
  if (s == "ceil-log2-H") return EllRule::ceil_log2;
  if (s == "calibrated") return EllRule::calibrated;
  fail("unknown ell_rule '" + s + "'");
}

RhsKind parse_rhs(const std::string& s) {
  if (s == "sine") return RhsKind::sine;
  if (s == "bump") return RhsKind::bump;
  if (s == "indicator") return RhsKind::indicator;
  fail("unknown rhs '" + s + "'");
}

CoefficientSpec parse_coefficient(const YAML::Node& node) {
  const std::string where = "coefficient";
  if (!node.IsMap() || !node["kind"]) fail("coefficient needs a kind");
  const auto kind = node["kind"].as<std::string>();
  CoefficientSpec spec;
  read(node, "n_eps", spec.n_eps, where);
  if (kind == "constant") {
    check_keys(node, where, {"kind", "n_eps", "value"});
    ConstantCoefficient c;
    read(node, "value", c.value, where);
    spec.kind = c;
  } else if (kind == "laminate") {
    check_keys(node, where, {"kind", "n_eps", "a_minus", "a_plus", "axis"});
    LaminateCoefficient c;
    read(node, "a_minus", c.a_minus, where);
    read(node, "a_plus", c.a_plus, where);
    read(node, "axis", c.axis, where);
    spec.kind = c;
  } else if (kind == "checkerboard") {
    check_keys(node, where, {"kind", "n_eps", "a", "b"});
    CheckerboardCoefficient c;
    read(node, "a", c.a, where);
    read(node, "b", c.b, where);
    spec.kind = c;
  } else if (kind == "trig") {
    check_keys(node, where, {"kind", "n_eps", "amplitude", "mean"});
    TrigCoefficient c;
    read(node, "amplitude", c.amplitude, where);
    read(node, "mean", c.mean, where);
    spec.kind = c;
  } else if (kind == "random_field") {
    check_keys(node, where, {"kind", "n_eps", "seed", "contrast"});
    RandomFieldCoefficient c;
    read(node, "seed", c.seed, where);
    read(node, "contrast", c.contrast, where);
    spec.kind = c;
  } else {
    fail("unknown coefficient kind '" + kind + "'");
  }
  return spec;
}

void emit_coefficient(YAML::Emitter& out, const CoefficientSpec& spec) {
  out << YAML::Key << "coefficient" << YAML::Value << YAML::BeginMap;
  std::visit(overloaded{
                 [&](const ConstantCoefficient& c) {
                   out << YAML::Key << "kind" << YAML::Value << "constant";
                   out << YAML::Key << "value" << YAML::Value << c.value;
                 },
                 [&](const LaminateCoefficient& c) {
                   out << YAML::Key << "kind" << YAML::Value << "laminate";
                   out << YAML::Key << "a_minus" << YAML::Value << c.a_minus;
                   out << YAML::Key << "a_plus" << YAML::Value << c.a_plus;
                   out << YAML::Key << "axis" << YAML::Value << c.axis;
                 },
                 [&](const CheckerboardCoefficient& c) {
                   out << YAML::Key << "kind" << YAML::Value << "checkerboard";
                   out << YAML::Key << "a" << YAML::Value << c.a;
                   out << YAML::Key << "b" << YAML::Value << c.b;
                 },
                 [&](const TrigCoefficient& c) {
                   out << YAML::Key << "kind" << YAML::Value << "trig";
                   out << YAML::Key << "amplitude" << YAML::Value << c.amplitude;
                   out << YAML::Key << "mean" << YAML::Value << c.mean;
                 },
                 [&](const RandomFieldCoefficient& c) {
                   out << YAML::Key << "kind" << YAML::Value << "random_field";
                   out << YAML::Key << "seed" << YAML::Value << c.seed;
                   out << YAML::Key << "contrast" << YAML::Value << c.contrast;
                 },
             },
             spec.kind);
  out << YAML::Key << "n_eps" << YAML::Value << spec.n_eps;
  out << YAML::EndMap;
}

void require(bool ok, const std::string& msg) {
  if (!ok) fail(msg);
}

// Runs the generator's parameter and resolution checks on one period.
void check_coefficient(const CoefficientSpec& spec, int cells_per_period) {
  if (spec.periodic()) {
    require(cells_per_period > 0, "mesh.n_fine must be a multiple of mesh.n_eps");
    generate_coefficient(spec, PeriodicGrid(cells_per_period), 1);
  } else {
    generate_coefficient(spec, PeriodicGrid(2), 2);
  }
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::prop1: return "prop1";
    case ExperimentKind::decay: return "decay";
    case ExperimentKind::hom_error: return "hom-error";
    case ExperimentKind::lod: return "lod";
  }
  return "?";
}

std::string to_string(EllRule rule) {
  switch (rule) {
    case EllRule::fixed: return "fixed";
    case EllRule::ceil_log2: return "ceil-log2-H";
    case EllRule::calibrated: return "calibrated";
  }
  return "?";
}

std::string to_string(RhsKind kind) {
  switch (kind) {
    case RhsKind::sine: return "sine";
    case RhsKind::bump: return "bump";
    case RhsKind::indicator: return "indicator";
  }
  return "?";
}

ExperimentConfig parse_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    fail(std::string("YAML syntax error: ") + e.what());
  }
  if (!root || root.IsNull()) fail("empty document");
  check_keys(root, "top level",
             {"experiment", "seed", "mesh", "coefficient", "solver", "spectrum", "localization", "rhs", "output"});

  ExperimentConfig c;
  if (!root["experiment"]) fail("missing 'experiment'");
  c.experiment = parse_experiment(root["experiment"].as<std::string>());
  read(root, "seed", c.seed, "top level");

  if (const auto m = root["mesh"]) {
    check_keys(m, "mesh",
               {"n_coarse", "n_eps", "n_fine", "coarse_list", "eps_list", "fine_per_eps", "allow_incommensurate"});
    read(m, "n_coarse", c.mesh.n_coarse, "mesh");
    read(m, "n_eps", c.mesh.n_eps, "mesh");
    read(m, "n_fine", c.mesh.n_fine, "mesh");
    read(m, "coarse_list", c.mesh.coarse_list, "mesh");
    read(m, "eps_list", c.mesh.eps_list, "mesh");
    read(m, "fine_per_eps", c.mesh.fine_per_eps, "mesh");
    read(m, "allow_incommensurate", c.mesh.allow_incommensurate, "mesh");
  }
  if (const auto n = root["coefficient"]) c.coefficient = parse_coefficient(n);
  if (const auto s = root["solver"]) {
    check_keys(s, "solver", {"tol_corrector", "tol_reference", "max_iters"});
    read(s, "tol_corrector", c.solver.tol_corrector, "solver");
    read(s, "tol_reference", c.solver.tol_reference, "solver");
    read(s, "max_iters", c.solver.max_iters, "solver");
  }
  if (const auto s = root["spectrum"]) {
    check_keys(s, "spectrum", {"max_steps", "tol"});
    read(s, "max_steps", c.spectrum.max_steps, "spectrum");
    read(s, "tol", c.spectrum.tol, "spectrum");
  }
  if (const auto l = root["localization"]) {
    check_keys(l, "localization", {"ell", "ell_rule"});
    read(l, "ell", c.localization.ell, "localization");
    if (l["ell_rule"]) c.localization.rule = parse_rule(l["ell_rule"].as<std::string>());
  }
  if (root["rhs"]) c.rhs = parse_rhs(root["rhs"].as<std::string>());
  if (const auto o = root["output"]) {
    check_keys(o, "output", {"path", "format"});
    read(o, "path", c.output.path, "output");
    if (o["format"]) {
      const auto f = o["format"].as<std::string>();
      if (f == "csv")
        c.output.format = OutputFormat::csv;
      else if (f == "json")
        c.output.format = OutputFormat::json;
      else
        fail("unknown output format '" + f + "'");
    }
  }
  validate_config(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "experiment" << YAML::Value << to_string(c.experiment);
  out << YAML::Key << "seed" << YAML::Value << c.seed;

  out << YAML::Key << "mesh" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "n_coarse" << YAML::Value << c.mesh.n_coarse;
  out << YAML::Key << "n_eps" << YAML::Value << c.mesh.n_eps;
  out << YAML::Key << "n_fine" << YAML::Value << c.mesh.n_fine;
  out << YAML::Key << "coarse_list" << YAML::Value << YAML::Flow << c.mesh.coarse_list;
  out << YAML::Key << "eps_list" << YAML::Value << YAML::Flow << c.mesh.eps_list;
  out << YAML::Key << "fine_per_eps" << YAML::Value << c.mesh.fine_per_eps;
  out << YAML::Key << "allow_incommensurate" << YAML::Value << c.mesh.allow_incommensurate;
  out << YAML::EndMap;

  emit_coefficient(out, c.coefficient);

  out << YAML::Key << "solver" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "tol_corrector" << YAML::Value << c.solver.tol_corrector;
  out << YAML::Key << "tol_reference" << YAML::Value << c.solver.tol_reference;
  out << YAML::Key << "max_iters" << YAML::Value << c.solver.max_iters;
  out << YAML::EndMap;

  out << YAML::Key << "spectrum" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "max_steps" << YAML::Value << c.spectrum.max_steps;
  out << YAML::Key << "tol" << YAML::Value << c.spectrum.tol;
  out << YAML::EndMap;

  out << YAML::Key << "localization" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "ell" << YAML::Value << c.localization.ell;
  out << YAML::Key << "ell_rule" << YAML::Value << to_string(c.localization.rule);
  out << YAML::EndMap;

  out << YAML::Key << "rhs" << YAML::Value << to_string(c.rhs);

  out << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "path" << YAML::Value << c.output.path;
  out << YAML::Key << "format" << YAML::Value << (c.output.format == OutputFormat::csv ? "csv" : "json");
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

void validate_config(const ExperimentConfig& c) {
  require(c.solver.tol_corrector > 0.0 && c.solver.tol_reference > 0.0, "solver tolerances must be positive");
  require(c.solver.max_iters > 0, "solver.max_iters must be positive");
  require(c.spectrum.max_steps >= 2, "spectrum.max_steps must be at least 2");
  require(c.spectrum.tol > 0.0, "spectrum.tol must be positive");
  require(c.localization.ell >= 0, "localization.ell must be nonnegative");
  require(c.output.path.size() > 0, "output.path must not be empty");
  const MeshOptions opts{c.mesh.allow_incommensurate};

  switch (c.experiment) {
    case ExperimentKind::prop1: {
      require(c.coefficient.periodic(), "prop1 needs a periodic coefficient");
      build_mesh_hierarchy(c.mesh.n_coarse, c.mesh.n_eps, c.mesh.n_fine, opts);
      check_coefficient(c.coefficient, c.mesh.n_fine / c.mesh.n_eps);
      break;
    }
    case ExperimentKind::decay: {
      require(!c.mesh.coarse_list.empty(), "mesh.coarse_list must not be empty");
      for (int nc : c.mesh.coarse_list) build_mesh_hierarchy(nc, c.mesh.n_eps, c.mesh.n_fine);
      check_coefficient(c.coefficient, c.mesh.n_fine / c.mesh.n_eps);
      break;
    }
    case ExperimentKind::hom_error: {
      require(c.coefficient.periodic(), "hom-error needs a periodic coefficient");
      require(c.mesh.eps_list.size() >= 2, "mesh.eps_list needs at least two entries");
      require(c.mesh.fine_per_eps >= 2, "mesh.fine_per_eps must be at least 2");
      for (int ne : c.mesh.eps_list) require(ne > 0, "mesh.eps_list entries must be positive");
      check_coefficient(c.coefficient, c.mesh.fine_per_eps);
      break;
    }
    case ExperimentKind::lod: {
      require(!c.mesh.coarse_list.empty(), "mesh.coarse_list must not be empty");
      const int ne = c.coefficient.periodic() ? c.mesh.n_eps : c.mesh.n_fine;
      for (int nc : c.mesh.coarse_list) build_mesh_hierarchy(nc, ne, c.mesh.n_fine);
      check_coefficient(c.coefficient, c.mesh.n_fine / ne);
      break;
    }
  }
}

std::string config_hash(const ExperimentConfig& config) {
  const std::string text = serialize_config(config);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw InternalError("SHA-256 digest failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

ScalarFunction rhs_function(RhsKind kind) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  switch (kind) {
    case RhsKind::sine:
      return [](double x, double) { return two_pi * two_pi * std::sin(two_pi * x); };
    case RhsKind::bump:
      return [](double x, double y) {
        const double dx = std::remainder(x - 0.5, 1.0), dy = std::remainder(y - 0.5, 1.0);
        return std::exp(-50.0 * (dx * dx + dy * dy));
      };
    case RhsKind::indicator:
      return [](double x, double) { return x < 0.5 ? 1.0 : 0.0; };
  }
  return {};
}

}  // namespace ddhom
