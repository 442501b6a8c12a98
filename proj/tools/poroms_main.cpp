#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "poroms/experiment.hpp"

namespace {

// key=value overrides applied to the config JSON document before parsing.
void apply_override(nlohmann::json& doc, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos)
    throw poroms::ConfigError("override", "expected key=value, got '" + kv + "'");
  const std::string key = kv.substr(0, eq);
  const std::string val = kv.substr(eq + 1);

  if (key == "methods") {
    std::vector<std::string> out;
    std::stringstream ss(val);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(tok);
    doc[key] = out;
    return;
  }
  if (key == "coeff_source" || key == "raster_path" || key == "source" || key == "initial" ||
      key == "outdir") {
    doc[key] = val;
    return;
  }
  if (key == "coarse_n" || key == "ratio" || key == "hard_cap" || key == "J" || key == "Ji" ||
      key == "layers" || key == "steps" || key == "save_stride") {
    doc[key] = std::stoi(val);
    return;
  }
  if (key == "seed") {
    doc[key] = std::stoull(val);
    return;
  }
  if (key == "alpha" || key == "biot_modulus" || key == "viscosity" || key == "poisson" ||
      key == "contrast" || key == "background" || key == "tau") {
    doc[key] = std::stod(val);
    return;
  }
  throw poroms::ConfigError(key, "unknown override key");
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"partially explicit multiscale solver for linear poroelasticity"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run an experiment and write its artifacts");
  std::string preset_name, config_path, out_override;
  std::vector<std::string> overrides;
  run->add_option("--preset", preset_name, "preset name: example1_f1, example1_f2, example2, example3, desk");
  run->add_option("--config", config_path, "config JSON file (combined with --preset if both given)");
  run->add_option("--override", overrides, "key=value config override, repeatable");
  run->add_option("--out", out_override, "output directory (shorthand for --override outdir=...)");

  auto* report = app.add_subcommand("report", "re-derive error tables from a run directory");
  std::string report_dir;
  report->add_option("--dir", report_dir, "run output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      nlohmann::json doc;
      if (!preset_name.empty())
        doc = nlohmann::json::parse(poroms::preset(preset_name).to_json());
      if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) {
          std::cerr << "poroms: cannot open config " << config_path << "\n";
          return 2;
        }
        nlohmann::json file_doc = nlohmann::json::parse(in);
        doc.merge_patch(file_doc);
      }
      if (doc.is_null()) {
        std::cerr << "poroms: run needs --preset and/or --config\n";
        return 2;
      }
      for (const std::string& kv : overrides) apply_override(doc, kv);
      if (!out_override.empty()) doc["outdir"] = out_override;

      poroms::ExperimentConfig cfg = poroms::ExperimentConfig::from_json(doc.dump());
      poroms::RunSummary sum = poroms::run_experiment(cfg);
      std::cout << "wrote " << sum.files.size() << " files to " << cfg.outdir << "\n";
      for (const auto& [m, e] : sum.final_e_energy) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%-8s final e_L2 = %8.4f%%  e_energy = %8.4f%%\n",
                      m.c_str(), 100.0 * sum.final_e_l2.at(m), 100.0 * e);
        std::cout << buf;
      }
      return 0;
    }
    if (report->parsed()) {
      std::cout << poroms::report_from_dir(report_dir);
      return 0;
    }
  } catch (const poroms::ConfigError& e) {
    std::cerr << "poroms: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "poroms: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
