#pragma once

// Config-driven studies. Each run returns the table (CSV text) and a JSON
// report; writing files and metadata is left to the caller.

#include <string>
#include <vector>

#include <json.hpp>

#include "ddhom/config.hpp"

namespace ddhom {

struct RunOutput {
  /// Header row plus data rows, numbers as %.12e.
  std::string csv;
  /// Rows and summary values.
  nlohmann::json report;
  std::vector<std::string> warnings;
};

/// Formats a double as %.12e.
std::string format_number(double v);

/// Classical and ideal tensors on one mesh. Rows: tensor,square,a11,a12,a21,a22.
RunOutput run_prop1(const ExperimentConfig& config);
/// Localization error per level. Rows: H,ell,max_entry_error,gamma_fit,gamma_est,support.
RunOutput run_decay(const ExperimentConfig& config);
/// L2 distance between fine and homogenized solutions. Rows: eps,l2_error,rate.
RunOutput run_hom_error(const ExperimentConfig& config);
/// LOD and plain P1 errors. Rows: H,ell,energy_error,l2_error,p1_baseline_error,gamma_est.
RunOutput run_lod(const ExperimentConfig& config);

RunOutput run_experiment(const ExperimentConfig& config);

/// Least-squares slope of log y against log x.
double fitted_rate(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace ddhom
