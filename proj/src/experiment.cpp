#include "poroms/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "poroms/cem.hpp"
#include "poroms/metrics.hpp"
#include "poroms/msstep.hpp"

namespace poroms {

namespace fs = std::filesystem;
using nlohmann::json;

void ExperimentConfig::validate() const {
  if (coarse_n < 2) throw ConfigError("coarse_n", "must be >= 2");
  if (ratio < 2) throw ConfigError("ratio", "must be >= 2");
  if (coarse_n * ratio > hard_cap)
    throw ConfigError("ratio", "fine grid exceeds hard cap of " + std::to_string(hard_cap));
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha", "must lie in [0,1]");
  if (!(biot_modulus > 0.0)) throw ConfigError("biot_modulus", "must be positive");
  if (!(viscosity > 0.0)) throw ConfigError("viscosity", "must be positive");
  if (!(poisson > -1.0 && poisson < 0.5)) throw ConfigError("poisson", "must lie in (-1, 1/2)");
  if (coeff_source != "streaks" && coeff_source != "raster" && coeff_source != "constant")
    throw ConfigError("coeff_source", "unknown source '" + coeff_source + "'");
  if (coeff_source == "raster" && raster_path.empty())
    throw ConfigError("raster_path", "required when coeff_source is raster");
  if (!(contrast >= 1.0)) throw ConfigError("contrast", "must be >= 1");
  if (!(background > 0.0)) throw ConfigError("background", "must be positive");
  if (J < 1) throw ConfigError("J", "must be >= 1");
  if (Ji < 1) throw ConfigError("Ji", "must be >= 1");
  if (layers < 1) throw ConfigError("layers", "must be >= 1");
  if (!(tau > 0.0)) throw ConfigError("tau", "must be positive");
  if (steps < 1) throw ConfigError("steps", "must be >= 1");
  if (save_stride < 1) throw ConfigError("save_stride", "must be >= 1");
  if (methods.empty()) throw ConfigError("methods", "at least one method required");
  for (const auto& m : methods)
    if (m != "fine" && m != "cem" && m != "cem_q2" && m != "split")
      throw ConfigError("methods", "unknown method '" + m + "'");
  source_by_name(source);
  initial_by_name(initial);
}

std::string ExperimentConfig::to_json() const {
  json j;
  j["coarse_n"] = coarse_n;
  j["ratio"] = ratio;
  j["hard_cap"] = hard_cap;
  j["alpha"] = alpha;
  j["biot_modulus"] = biot_modulus;
  j["viscosity"] = viscosity;
  j["poisson"] = poisson;
  j["coeff_source"] = coeff_source;
  j["raster_path"] = raster_path;
  j["seed"] = seed;
  j["contrast"] = contrast;
  j["background"] = background;
  j["J"] = J;
  j["Ji"] = Ji;
  j["layers"] = layers;
  j["tau"] = tau;
  j["steps"] = steps;
  j["source"] = source;
  j["initial"] = initial;
  j["methods"] = methods;
  j["outdir"] = outdir;
  j["save_stride"] = save_stride;
  return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError("<document>", std::string("invalid JSON: ") + e.what());
  }
  ExperimentConfig c;
  auto get = [&j](const char* key, auto& slot) {
    if (j.contains(key)) {
      try {
        slot = j.at(key).get<std::decay_t<decltype(slot)>>();
      } catch (const std::exception&) {
        throw ConfigError(key, "wrong type");
      }
    }
  };
  get("coarse_n", c.coarse_n);
  get("ratio", c.ratio);
  get("hard_cap", c.hard_cap);
  get("alpha", c.alpha);
  get("biot_modulus", c.biot_modulus);
  get("viscosity", c.viscosity);
  get("poisson", c.poisson);
  get("coeff_source", c.coeff_source);
  get("raster_path", c.raster_path);
  get("seed", c.seed);
  get("contrast", c.contrast);
  get("background", c.background);
  get("J", c.J);
  get("Ji", c.Ji);
  get("layers", c.layers);
  get("tau", c.tau);
  get("steps", c.steps);
  get("source", c.source);
  get("initial", c.initial);
  get("methods", c.methods);
  get("outdir", c.outdir);
  get("save_stride", c.save_stride);
  return c;
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c; // defaults already match example 1
  if (name == "example1_f1") {
    c.source = "f1";
  } else if (name == "example1_f2") {
    c.source = "f2";
  } else if (name == "example2") {
    c.source = "gaussian";
    c.initial = "bump2";
    c.seed = 11;
  } else if (name == "example3") {
    c.source = "gaussian_time";
    c.initial = "bump2";
    c.seed = 11;
  } else if (name == "desk") {
    c.coarse_n = 5;
    c.steps = 50;
  } else {
    throw ConfigError("preset", "unknown preset '" + name + "'");
  }
  return c;
}

SourceFn source_by_name(const std::string& name) {
  const double pi = std::numbers::pi;
  if (name == "f1")
    return [pi](double x, double y, double) {
      return 2.0 * pi * pi * std::sin(pi * x) * std::sin(pi * y);
    };
  if (name == "f2")
    return [](double x, double y, double) {
      return 1.0 / ((x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5) + 1e-4);
    };
  if (name == "gaussian")
    return [](double x, double y, double) {
      return 100.0 * std::exp(-800.0 * ((x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5)));
    };
  if (name == "gaussian_time")
    return [](double x, double y, double t) {
      const double space =
          100.0 * std::exp(-800.0 * ((x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5)));
      const double arg = 100.0 * t - 1.0;
      return space * std::exp(-arg * arg);
    };
  if (name == "zero") return [](double, double, double) { return 0.0; };
  throw ConfigError("source", "unknown source '" + name + "'");
}

ScalarFn initial_by_name(const std::string& name) {
  if (name == "bump")
    return [](double x, double y) { return 100.0 * x * (1.0 - x) * y * (1.0 - y); };
  if (name == "bump2")
    return [](double x, double y) { return 100.0 * x * x * (1.0 - x) * y * y * (1.0 - y); };
  if (name == "zero") return [](double, double) { return 0.0; };
  throw ConfigError("initial", "unknown initial condition '" + name + "'");
}

std::string file_hash_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("file_hash_hex: cannot open " + path);
  std::uint64_t h = 1469598103934665603ull;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= std::uint8_t(buf[i]);
      h *= 1099511628211ull;
    }
    if (!in) break;
  }
  char out[32];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
  return out;
}

namespace {

void write_pressure_trajectory(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  char buf[40];
  for (size_t k = 0; k < traj.p.size(); ++k) {
    out << traj.step_index[k];
    for (Eigen::Index i = 0; i < traj.p[k].size(); ++i) {
      std::snprintf(buf, sizeof(buf), ",%.17g", traj.p[k][i]);
      out << buf;
    }
    out << "\n";
  }
}

Trajectory read_pressure_trajectory(const std::string& path, double tau, int steps,
                                    const std::string& method) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  Trajectory traj;
  traj.tg = TimeGrid(tau, steps);
  traj.method = method;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::getline(ss, tok, ',');
    traj.step_index.push_back(std::stoi(tok));
    std::vector<double> vals;
    while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
    VecX p(Eigen::Index(vals.size()));
    for (size_t i = 0; i < vals.size(); ++i) p[Eigen::Index(i)] = vals[i];
    traj.p.push_back(p);
    traj.u.push_back(VecX::Zero(2 * p.size())); // displacement not stored
  }
  return traj;
}

CoefficientField build_field(const ExperimentConfig& cfg, const GridPair& gp,
                             const PhysicsConstants& pc) {
  if (cfg.coeff_source == "streaks")
    return generate_streak_field(gp, cfg.background, cfg.contrast, cfg.seed, pc);
  if (cfg.coeff_source == "raster") return load_raster(cfg.raster_path, gp, pc);
  return constant_field(gp, cfg.background, cfg.background, pc);
}

struct PhaseTimer {
  std::map<std::string, double>& sink;
  std::string name;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  PhaseTimer(std::map<std::string, double>& s, std::string n) : sink(s), name(std::move(n)) {}
  ~PhaseTimer() {
    sink[name] += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

} // namespace

RunSummary run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  RunSummary sum;
  fs::create_directories(cfg.outdir);

  PhysicsConstants pc;
  pc.alpha = cfg.alpha;
  pc.biot_modulus = cfg.biot_modulus;
  pc.viscosity = cfg.viscosity;
  pc.poisson = cfg.poisson;

  GridPair gp = build_grid_pair(cfg.coarse_n, cfg.ratio);
  CoefficientField field = build_field(cfg, gp, pc);
  sum.coeff_hash = field.content_hash();

  FormSet forms;
  {
    PhaseTimer t(sum.phase_seconds, "assembly");
    auto hats = coarse_hat_functions(gp);
    forms = assemble_forms(gp, field, pc, hats);
  }

  const SourceFn f = source_by_name(cfg.source);
  const ScalarFn p0 = initial_by_name(cfg.initial);
  auto wants = [&cfg](const char* m) {
    return std::find(cfg.methods.begin(), cfg.methods.end(), m) != cfg.methods.end();
  };

  std::map<std::string, Trajectory> trajectories;
  std::optional<StabilityReport> stab;

  if (wants("fine")) {
    PhaseTimer t(sum.phase_seconds, "fine");
    FineSolver solver(forms, cfg.tau);
    trajectories["fine"] = solver.run(p0, f, cfg.steps, cfg.save_stride);
  }

  const bool needs_spaces = wants("cem") || wants("cem_q2") || wants("split");
  const bool needs_q2 = wants("cem_q2") || wants("split");
  if (needs_spaces) {
    AuxiliarySpace aux;
    MultiscaleSpace v_h, q1, q2;
    {
      PhaseTimer t(sum.phase_seconds, "spaces");
      aux = build_auxiliary(forms, cfg.J, cfg.J);
      v_h = build_cem_basis(forms, aux, cfg.layers, SpaceTag::V_H);
      q1 = build_cem_basis(forms, aux, cfg.layers, SpaceTag::Q_H1);
      if (needs_q2) {
        Qh2Aux q2aux = build_qh2_aux(forms, aux, cfg.Ji);
        q2 = build_qh2_basis(forms, aux, q2aux, cfg.layers);
      }
    }

    if (wants("cem")) {
      PhaseTimer t(sum.phase_seconds, "cem");
      ReducedSystem rs = reduce(forms, v_h, q1);
      trajectories["cem"] =
          to_fine_trajectory(rs, run_implicit(rs, cfg.tau, cfg.steps, p0, f, false),
                             cfg.save_stride);
    }
    if (needs_q2) {
      ReducedSystem rs = reduce(forms, v_h, q1, &q2);
      stab = stability_report(forms, q1, q2, cfg.tau);
      if (wants("cem_q2")) {
        PhaseTimer t(sum.phase_seconds, "cem_q2");
        trajectories["cem_q2"] =
            to_fine_trajectory(rs, run_implicit(rs, cfg.tau, cfg.steps, p0, f, true),
                               cfg.save_stride);
      }
      if (wants("split")) {
        PhaseTimer t(sum.phase_seconds, "split");
        CoarseTrajectory ct = run_split(rs, cfg.tau, cfg.steps, p0, f, &*stab);
        stab->gamma_a = empirical_gamma_a(ct.states, rs);
        trajectories["split"] = to_fine_trajectory(rs, ct, cfg.save_stride);
      }
    }
  }

  // Artifacts
  std::vector<std::string> files;
  {
    PhaseTimer t(sum.phase_seconds, "output");
    std::vector<ErrorSeries> all_errors;
    if (trajectories.count("fine")) {
      const Trajectory& ref = trajectories.at("fine");
      for (const char* m : {"cem", "cem_q2", "split"}) {
        if (!trajectories.count(m)) continue;
        ErrorSeries es = pressure_errors(trajectories.at(m), ref, forms);
        if (!es.step.empty()) {
          sum.final_e_l2[m] = es.e_l2.back();
          sum.final_e_energy[m] = es.e_energy.back();
        }
        all_errors.push_back(std::move(es));
      }
    }
    if (!all_errors.empty()) {
      const std::string path = cfg.outdir + "/errors.csv";
      write_error_csv(path, all_errors);
      files.push_back("errors.csv");
    }
    if (stab) {
      std::ofstream out(cfg.outdir + "/stability.json");
      out << stab->to_json() << "\n";
      files.push_back("stability.json");
    }
    for (const auto& [name, traj] : trajectories) {
      write_snapshot_csv(cfg.outdir + "/snapshot_" + name + ".csv", forms, traj.u.back(),
                         traj.p.back());
      files.push_back("snapshot_" + name + ".csv");
      write_pressure_trajectory(cfg.outdir + "/traj_" + name + "_p.csv", traj);
      files.push_back("traj_" + name + "_p.csv");
    }
  }

  json manifest;
  manifest["config"] = json::parse(cfg.to_json());
  manifest["coeff_hash"] = sum.coeff_hash;
  manifest["coeff_seed"] = cfg.seed;
  json timings, hashes;
  for (const auto& [k, v] : sum.phase_seconds) timings[k] = v;
  for (const std::string& f_ : files) hashes[f_] = file_hash_hex(cfg.outdir + "/" + f_);
  manifest["phase_seconds"] = timings;
  manifest["files"] = hashes;
  {
    std::ofstream out(cfg.outdir + "/manifest.json");
    out << manifest.dump(2) << "\n";
  }
  sum.files = files;
  sum.files.push_back("manifest.json");
  return sum;
}

std::string report_from_dir(const std::string& dir) {
  std::ifstream mf(dir + "/manifest.json");
  if (!mf) throw std::runtime_error("report: no manifest.json in " + dir);
  json manifest = json::parse(mf);
  ExperimentConfig cfg = ExperimentConfig::from_json(manifest.at("config").dump());

  if (!fs::exists(dir + "/traj_fine_p.csv"))
    throw std::runtime_error("report: stored fine trajectory required");

  PhysicsConstants pc;
  pc.alpha = cfg.alpha;
  pc.biot_modulus = cfg.biot_modulus;
  pc.viscosity = cfg.viscosity;
  pc.poisson = cfg.poisson;
  GridPair gp = build_grid_pair(cfg.coarse_n, cfg.ratio);
  CoefficientField field = build_field(cfg, gp, pc);
  auto hats = coarse_hat_functions(gp);
  FormSet forms = assemble_forms(gp, field, pc, hats);

  Trajectory fine = read_pressure_trajectory(dir + "/traj_fine_p.csv", cfg.tau, cfg.steps, "fine");
  std::vector<ErrorSeries> all;
  for (const char* m : {"cem", "cem_q2", "split"}) {
    const std::string path = dir + "/traj_" + m + "_p.csv";
    if (!fs::exists(path)) continue;
    Trajectory t = read_pressure_trajectory(path, cfg.tau, cfg.steps, m);
    all.push_back(pressure_errors(t, fine, forms));
  }
  write_error_csv(dir + "/errors.csv", all);

  std::stringstream out;
  out << "n,t,method,e_L2,e_energy\n";
  char buf[128];
  for (const ErrorSeries& es : all)
    for (size_t k = 0; k < es.step.size(); ++k) {
      std::snprintf(buf, sizeof(buf), "%d,%.17g,%s,%.17g,%.17g\n", es.step[k], es.time[k],
                    es.method.c_str(), es.e_l2[k], es.e_energy[k]);
      out << buf;
    }
  return out.str();
}

} // namespace poroms
