#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <json.hpp>

#include "ddhom/config.hpp"
#include "ddhom/error.hpp"
#include "ddhom/experiments.hpp"
#include "ddhom/parallel.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit { ok = 0, precondition = 2, solver = 3, certification = 4, internal = 5 };

std::string compiler_id() {
#if defined(__clang__)
  return "clang " __clang_version__;
#elif defined(__GNUC__)
  return "gcc " __VERSION__;
#else
  return "unknown";
#endif
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ddhom::PreconditionError("cannot write '" + path.string() + "'");
  out << text;
}

int run(const std::string& subcommand, const std::string& config_path, const std::string& output_dir, bool verbose) {
  using namespace ddhom;
  const ExperimentConfig config = load_config(config_path);
  if (to_string(config.experiment) != subcommand) {
    throw PreconditionError("config describes experiment '" + to_string(config.experiment) + "' but subcommand is '" +
                            subcommand + "'");
  }
  if (verbose) std::cerr << "running " << subcommand << " with " << thread_count() << " thread(s)\n";

  const auto t0 = std::chrono::steady_clock::now();
  RunOutput result = run_experiment(config);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';

  const std::filesystem::path dir = std::filesystem::path(output_dir.empty() ? config.output.path : output_dir);
  std::filesystem::create_directories(dir);
  const std::string stem = subcommand;
  if (config.output.format == OutputFormat::csv) {
    write_file(dir / (stem + ".csv"), result.csv);
    if (verbose) std::cerr << "wrote " << (dir / (stem + ".csv")).string() << '\n';
  } else {
    nlohmann::json doc = result.report;
    doc["csv"] = result.csv;
    doc["warnings"] = result.warnings;
    doc["metadata"] = {{"experiment", subcommand},
                       {"config_hash", config_hash(config)},
                       {"config", serialize_config(config)},
                       {"version", kVersion},
                       {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                     "." + std::to_string(EIGEN_MINOR_VERSION)},
                       {"compiler", compiler_id()},
                       {"threads", thread_count()},
                       {"wall_time_seconds", wall}};
    write_file(dir / (stem + ".json"), doc.dump(2) + "\n");
    if (verbose) std::cerr << "wrote " << (dir / (stem + ".json")).string() << '\n';
  }
  std::cout << result.csv;
  return Exit::ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Effective diffusion tensors: cell problems, kernel correctors, localized correctors and LOD"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, output_dir;
  int threads = 0;
  bool verbose = false;
  app.add_option("--threads", threads, "Worker threads (default: available parallelism)")->check(CLI::NonNegativeNumber);
  app.add_flag("--verbose", verbose, "Progress messages on stderr");

  const char* descriptions[][2] = {
      {"prop1", "Compare the classical tensor with the kernel-corrector tensor"},
      {"decay", "Localization error of the iterated correctors per level"},
      {"hom-error", "L2 distance between fine and homogenized solutions over an eps sweep"},
      {"lod", "LOD and coarse P1 energy errors over a coarse-mesh sweep"},
  };
  for (const auto& d : descriptions) {
    auto* sub = app.add_subcommand(d[0], d[1]);
    sub->add_option("--config", config_path, "YAML experiment file")->required()->check(CLI::ExistingFile);
    sub->add_option("--output", output_dir, "Output directory (default: output.path from the config)");
  }
  auto* validate = app.add_subcommand("validate-config", "Parse and check a config; print its canonical form and hash");
  validate->add_option("--config", config_path, "YAML experiment file")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : Exit::precondition;
  }

  if (threads > 0) ddhom::set_thread_count(threads);
  try {
    if (validate->parsed()) {
      const auto config = ddhom::load_config(config_path);
      std::cout << ddhom::serialize_config(config) << "# sha256 " << ddhom::config_hash(config) << '\n';
      return Exit::ok;
    }
    return run(app.get_subcommands().front()->get_name(), config_path, output_dir, verbose);
  } catch (const ddhom::PreconditionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return Exit::precondition;
  } catch (const ddhom::SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return Exit::solver;
  } catch (const ddhom::CertificationError& e) {
    std::cerr << "certification failed: " << e.what() << '\n';
    return Exit::certification;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return Exit::internal;
  }
}
