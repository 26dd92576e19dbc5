// Config-driven experiments.
//
// A config is a JSON object with at least name, kind, seed and output_dir; the
// remaining fields depend on the kind. parse_config validates every descriptor
// before anything runs. Outputs go to <output_dir>/<name>.series.csv and
// <output_dir>/<name>.report.json (plus stage files for bfko-pipeline).

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ergolab/error.hpp"
#include "ergolab/serialize.hpp"

namespace ergolab {

enum class ExperimentKind { birkhoff, weighted, spectral, pair_correlation, egorov, cover, bfko_pipeline, decomposition };
std::string_view to_string(ExperimentKind k);

struct ExperimentConfig {
  std::string name;
  ExperimentKind kind = ExperimentKind::birkhoff;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;
  /// The whole validated document, including the fields above.
  Json body;
};

/// Throws ErrorCode::schema with the offending field path.
ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config(const std::filesystem::path& p);
Json to_json(const ExperimentConfig& c);

struct RunResult {
  /// 0: verdicts match the expectations; 2: inconclusive; 1: expectation failed.
  int exit_code = 0;
  std::string verdict;
  std::vector<std::filesystem::path> files;
  Json report;
};

/// Runs the experiment and writes its files. Operational failures throw Error.
RunResult run(const ExperimentConfig& config);

/// Ordered plan of module calls with step budgets; does not compute anything.
std::string describe(const ExperimentConfig& config);
/// Orbit steps the run will take, as used in describe().
std::uint64_t estimated_steps(const ExperimentConfig& config);

/// Exit code for an exception escaping run(): always 1.
int exit_code_for(const Error& e);

// ---------------------------------------------------------------------------
// bfko stages; each reads the previous stage's document and writes its own

/// Certificate from the synthetic divergent series described by the config.
Json bfko_certify(const ExperimentConfig& config);
/// Shift references and the good block family for the x-orbit.
Json bfko_blocks(const Json& certify_doc);
/// Layer stack; also writes <name>.layers.bin into dir.
Json bfko_layers(const Json& blocks_doc, const std::filesystem::path& dir);
Json bfko_audit(const Json& layers_doc, const std::filesystem::path& dir);
Json bfko_contradict(const Json& audit_doc, const std::filesystem::path& dir);

/// File names of the five stage documents, in order.
std::vector<std::string> bfko_stage_files(const std::string& name);

}  // namespace ergolab
