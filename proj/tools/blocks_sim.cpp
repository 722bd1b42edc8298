#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "blocks/config.hpp"
#include "blocks/error.hpp"
#include "blocks/presets.hpp"
#include "blocks/simulator.hpp"

namespace fs = std::filesystem;
using namespace blocks;

namespace {

unsigned sweep_threads() {
  if (const char* env = std::getenv("BLOCKS_SIM_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return static_cast<unsigned>(n);
    } catch (const std::exception&) {
    }
    throw Error(Errc::ConfigError, "BLOCKS_SIM_THREADS must be a positive integer");
  }
  return 1;
}

void report(const std::string& label, const RunResult& r) {
  const DedupReport d = dedup_report(r);
  std::cout << (label.empty() ? "run" : label) << ": rounds=" << r.frames.size()
            << " queries=" << r.queries << " supplier honest/malicious="
            << fmt_double(final_honest_mean(r, Role::Supplier)) << "/"
            << fmt_double(final_malicious_mean(r, Role::Supplier)) << " validator honest/malicious="
            << fmt_double(final_honest_mean(r, Role::Validator)) << "/"
            << fmt_double(final_malicious_mean(r, Role::Validator))
            << " hit_rate=" << fmt_double(r.frames.empty() ? 0.0 : r.frames.back().hit_rate)
            << " ledger_prompts=" << d.ledger_prompts << "\n";
}

void write_index(const std::vector<SweepOutput>& runs, const fs::path& out, bool force) {
  const fs::path path = out / "summary.json";
  if (!force && fs::exists(path)) throw Error(Errc::OutputExists, path.string() + " exists (use --force)");
  nlohmann::ordered_json index;
  for (const auto& r : runs) index[r.label] = nlohmann::ordered_json::parse(summary_json(r.result));
  std::ofstream(path, std::ios::binary | std::ios::trunc) << index.dump(2) << "\n";
}

int run_document(const ScenarioDocument& doc, const fs::path& out, bool force, bool dump_ledger,
                 bool quiet) {
  if (doc.overrides.empty()) {
    const ScenarioConfig cfg = config_from_json(doc.base);
    const RunResult r = run(cfg);
    write_outputs(r, out, force, dump_ledger);
    if (!quiet) report("", r);
    return 0;
  }
  const ScenarioConfig base = config_from_json(doc.base);
  const auto runs = sweep(expand(doc), base.seed, sweep_threads());
  fs::create_directories(out);
  for (const auto& r : runs) {
    write_outputs(r.result, out / r.label, force, dump_ledger);
    if (!quiet) report(r.label, r.result);
  }
  write_index(runs, out, force);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BLOCKS knowledge-sharing simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string sweep_path;
  std::string out_dir;
  std::string preset;
  std::optional<std::uint64_t> seed;
  bool force = false;
  bool dump_ledger = false;
  bool quiet = false;

  auto* run_cmd = app.add_subcommand("run", "Run one scenario");
  run_cmd->add_option("config,--config", config_path, "Scenario file (TOML or JSON)")->required();
  run_cmd->add_option("--seed", seed, "Override the scenario seed");
  run_cmd->add_option("--out", out_dir, "Output directory")->required();
  run_cmd->add_flag("--force", force, "Overwrite existing result files");
  run_cmd->add_flag("--dump-ledger", dump_ledger, "Also write ledger.json");
  run_cmd->add_flag("--quiet", quiet, "No progress output");

  auto* sweep_cmd = app.add_subcommand("sweep", "Run a base scenario under a list of overrides");
  sweep_cmd->add_option("config,--config", config_path, "Base scenario file")->required();
  sweep_cmd->add_option("--sweep", sweep_path, "File of [[override]] tables")->required();
  sweep_cmd->add_option("--out", out_dir, "Output directory")->required();
  sweep_cmd->add_flag("--force", force, "Overwrite existing result files");
  sweep_cmd->add_flag("--dump-ledger", dump_ledger, "Also write ledger.json per run");
  sweep_cmd->add_flag("--quiet", quiet, "No progress output");

  auto* preset_cmd = app.add_subcommand("preset", "Run a canned experiment (fig4, fig5, fig6, fig7)");
  preset_cmd->add_option("name", preset, "Preset name")->required();
  preset_cmd->add_option("--out", out_dir, "Output directory")->required();
  preset_cmd->add_flag("--force", force, "Overwrite existing result files");
  preset_cmd->add_flag("--dump-ledger", dump_ledger, "Also write ledger.json per run");
  preset_cmd->add_flag("--quiet", quiet, "No progress output");

  auto* validate_cmd = app.add_subcommand("validate", "Check a scenario file without running it");
  validate_cmd->add_option("config,--config", config_path, "Scenario file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      ScenarioDocument doc = split_document(load_config_file(config_path));
      if (!doc.overrides.empty()) {
        throw Error(Errc::ConfigError, config_path + ": [[override]] tables need the sweep command");
      }
      if (seed) doc.base["seed"] = *seed;
      return run_document(doc, out_dir, force, dump_ledger, quiet);
    }
    if (*sweep_cmd) {
      ScenarioDocument doc = split_document(load_config_file(config_path));
      const ScenarioDocument spec = split_document(load_config_file(sweep_path));
      doc.overrides = spec.overrides;
      if (doc.overrides.empty()) throw Error(Errc::ConfigError, sweep_path + ": no [[override]] tables");
      return run_document(doc, out_dir, force, dump_ledger, quiet);
    }
    if (*preset_cmd) {
      const auto text = preset_text(preset);
      if (!text) throw Error(Errc::ConfigError, "unknown preset '" + preset + "'");
      const ScenarioDocument doc =
          split_document(parse_config_text(*text, ConfigFormat::Toml, "preset " + preset));
      return run_document(doc, out_dir, force, dump_ledger, quiet);
    }
    if (*validate_cmd) {
      const ScenarioDocument doc = split_document(load_config_file(config_path));
      config_from_json(doc.base);
      const auto entries = expand(doc);
      std::cout << config_path << ": ok";
      if (!entries.empty()) std::cout << " (" << entries.size() << " overrides)";
      std::cout << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == Errc::ConfigError ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
