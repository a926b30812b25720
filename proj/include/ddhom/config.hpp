#pragma once

// Experiment configuration: a YAML document with nested tables.
//
//   experiment: prop1 | decay | hom-error | lod
//   seed: 1
//   mesh:         {n_coarse, n_eps, n_fine, coarse_list, eps_list, fine_per_eps, allow_incommensurate}
//   coefficient:  {kind: constant|laminate|checkerboard|trig|random_field, ...kind parameters}
//   solver:       {tol_corrector, tol_reference, max_iters}
//   spectrum:     {max_steps, tol}
//   localization: {ell, ell_rule: fixed|ceil-log2-H|calibrated}
//   rhs: sine | bump | indicator
//   output:       {path, format: csv|json}

#include <cstdint>
#include <string>
#include <vector>

#include "ddhom/coefficient.hpp"
#include "ddhom/fem.hpp"

namespace ddhom {

enum class ExperimentKind { prop1, decay, hom_error, lod };
enum class EllRule { fixed, ceil_log2, calibrated };
enum class RhsKind { sine, bump, indicator };
enum class OutputFormat { csv, json };

struct MeshConfig {
  int n_coarse = 4;
  int n_eps = 16;
  int n_fine = 128;
  std::vector<int> coarse_list{4, 8};
  std::vector<int> eps_list{8, 16, 32};
  int fine_per_eps = 8;
  bool allow_incommensurate = false;
  bool operator==(const MeshConfig&) const = default;
};

struct SolverConfig {
  double tol_corrector = 1e-10;
  double tol_reference = 1e-10;
  int max_iters = 50000;
  bool operator==(const SolverConfig&) const = default;
};

struct SpectrumConfig {
  int max_steps = 400;
  double tol = 1e-8;
  bool operator==(const SpectrumConfig&) const = default;
};

struct LocalizationConfig {
  /// Level for the fixed rule; for `calibrated` the decay table runs to
  /// ceil(log2(1/H)) * c_ell.
  int ell = 8;
  EllRule rule = EllRule::fixed;
  bool operator==(const LocalizationConfig&) const = default;
};

struct OutputConfig {
  std::string path = "results";
  OutputFormat format = OutputFormat::csv;
  bool operator==(const OutputConfig&) const = default;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::prop1;
  std::uint64_t seed = 1;
  MeshConfig mesh;
  CoefficientSpec coefficient{LaminateCoefficient{}, 0};
  SolverConfig solver;
  SpectrumConfig spectrum;
  LocalizationConfig localization;
  RhsKind rhs = RhsKind::sine;
  OutputConfig output;
  bool operator==(const ExperimentConfig&) const = default;
};

/// Throws PreconditionError on malformed documents, unknown keys or values,
/// and on failed admissibility checks.
ExperimentConfig parse_config(const std::string& yaml_text);
ExperimentConfig load_config(const std::string& path);
/// Canonical YAML; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& config);
/// Divisibility and range checks that run before any solve.
void validate_config(const ExperimentConfig& config);
/// Hex SHA-256 of the canonical serialization.
std::string config_hash(const ExperimentConfig& config);

std::string to_string(ExperimentKind kind);
std::string to_string(EllRule rule);
std::string to_string(RhsKind kind);

/// Right-hand side from the catalog: sine = (2 pi)^2 sin(2 pi x1),
/// bump = exp(-50 |x - c|^2) around the cell center (torus distance),
/// indicator = 1 on the left half.
ScalarFunction rhs_function(RhsKind kind);

}  // namespace ddhom
