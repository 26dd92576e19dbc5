// ergolab command line: run, describe, spectral and the staged bfko pipeline.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "ergolab/experiment.hpp"

namespace fs = std::filesystem;
using namespace ergolab;

namespace {

// A descriptor argument is inline JSON or a path to a JSON file.
Json descriptor(const std::string& arg) {
  const auto first = arg.find_first_not_of(" \t\n");
  if (first != std::string::npos && (arg[first] == '{' || arg[first] == '[')) {
    try {
      return Json::parse(arg);
    } catch (const Json::parse_error& e) {
      throw Error(ErrorCode::schema, std::string("inline descriptor: ") + e.what());
    }
  }
  return read_json(arg);
}

int report_run(const RunResult& r) {
  std::cout << "verdict: " << r.verdict << "\n";
  for (const auto& f : r.files) std::cout << "wrote " << f.generic_string() << "\n";
  for (const auto& msg : r.report.value("expectation_failures", Json::array())) std::cerr << "expectation: " << msg.get<std::string>() << "\n";
  return r.exit_code;
}

fs::path stage_output(const fs::path& input, const Json& doc, const char* stage, const std::string& out_dir) {
  const auto config = parse_config(doc.at("config"));
  const fs::path dir = out_dir.empty() ? input.parent_path() : fs::path(out_dir);
  return dir / (config.name + "." + stage + ".json");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ergolab: ergodic averages, spectral diagnostics and layered block constructions"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment config; writes <name>.series.csv and <name>.report.json");
  run_cmd->add_option("config", config_path, "Config JSON")->required()->check(CLI::ExistingFile);

  auto* describe_cmd = app.add_subcommand("describe", "Print the plan of a config without running it");
  describe_cmd->add_option("config", config_path, "Config JSON")->required()->check(CLI::ExistingFile);

  std::string sys_arg, f_arg, out_dir = ".", name = "spectral";
  std::int64_t maxlag = 64;
  std::uint64_t length = 100000, samples = 8, seed = 0;
  double threshold = 1e-2;
  auto* spectral_cmd = app.add_subcommand("spectral", "Autocorrelation and Wiener means of one observable");
  spectral_cmd->add_option("--sys", sys_arg, "System descriptor (inline JSON or file)")->required();
  spectral_cmd->add_option("--f", f_arg, "Observable descriptor (inline JSON or file)")->required();
  spectral_cmd->add_option("--maxlag", maxlag, "Largest lag")->check(CLI::PositiveNumber);
  spectral_cmd->add_option("--length", length, "Orbit length per sample")->check(CLI::PositiveNumber);
  spectral_cmd->add_option("--samples", samples, "Number of start points")->check(CLI::PositiveNumber);
  spectral_cmd->add_option("--seed", seed, "Seed for the start points")->required();
  spectral_cmd->add_option("--threshold", threshold, "Wiener threshold");
  spectral_cmd->add_option("--out", out_dir, "Output directory");
  spectral_cmd->add_option("--name", name, "Output file stem");

  auto* bfko_cmd = app.add_subcommand("bfko", "Staged layer construction; each stage reads the previous stage's file");
  bfko_cmd->require_subcommand(1);
  std::string stage_input, stage_out;
  const char* stages[] = {"certify", "blocks", "layers", "audit", "contradict"};
  const char* helps[] = {"bfko-pipeline config -> certificate", "certify file -> good block family",
                         "blocks file -> layer stack + sidecar", "layers file -> density audit",
                         "audit file -> alpha/beta check and contradiction chain"};
  for (int i = 0; i < 5; ++i) {
    auto* s = bfko_cmd->add_subcommand(stages[i], helps[i]);
    s->add_option("input", stage_input, "Input file")->required()->check(CLI::ExistingFile);
    s->add_option("-o,--out", stage_out, "Output directory (default: config output_dir for certify, else the input's)");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return report_run(run(load_config(config_path)));
    if (describe_cmd->parsed()) {
      std::cout << describe(load_config(config_path));
      return 0;
    }
    if (spectral_cmd->parsed()) {
      Json cfg = {{"name", name},
                  {"kind", "spectral"},
                  {"seed", seed},
                  {"output_dir", out_dir},
                  {"system", descriptor(sys_arg)},
                  {"observable", descriptor(f_arg)},
                  {"maxlag", maxlag},
                  {"length", length},
                  {"samples", samples},
                  {"threshold", threshold}};
      return report_run(run(parse_config(cfg)));
    }
    for (int i = 0; i < 5; ++i) {
      const auto* s = bfko_cmd->get_subcommand(stages[i]);
      if (!s->parsed()) continue;
      const fs::path input = stage_input;
      Json out;
      fs::path target;
      if (i == 0) {
        const auto config = load_config(input);
        out = bfko_certify(config);
        target = (stage_out.empty() ? config.output_dir : fs::path(stage_out)) / bfko_stage_files(config.name)[0];
      } else {
        const Json doc = read_json(input);
        target = stage_output(input, doc, stages[i], stage_out);
        const fs::path dir = target.parent_path().empty() ? fs::path(".") : target.parent_path();
        // the layers and audit stages look for the sidecar next to the input
        if (i == 2) out = bfko_layers(doc, dir);
        if (i == 3) out = bfko_audit(doc, input.parent_path().empty() ? fs::path(".") : input.parent_path());
        if (i == 4) out = bfko_contradict(doc, input.parent_path().empty() ? fs::path(".") : input.parent_path());
      }
      write_json(target, out);
      std::cout << "wrote " << target.generic_string() << "\n";
      if (i == 4) {
        const auto verdict = out.at("verdict").get<std::string>();
        std::cout << "verdict: " << verdict << "\n";
        return verdict == "contradiction" ? 0 : 1;
      }
      if (i == 3) return out.at("audit").at("pass").get<bool>() ? 0 : 1;
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
