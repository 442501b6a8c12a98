#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "poroms/cem.hpp"
#include "poroms/experiment.hpp"
#include "poroms/fine_ref.hpp"
#include "poroms/msstep.hpp"

namespace py = pybind11;
using namespace poroms;

namespace {

py::dict summary_to_dict(const RunSummary& sum) {
  py::dict d;
  d["final_e_l2"] = sum.final_e_l2;
  d["final_e_energy"] = sum.final_e_energy;
  d["phase_seconds"] = sum.phase_seconds;
  d["coeff_hash"] = sum.coeff_hash;
  d["files"] = sum.files;
  return d;
}

py::array_t<double> field_array(const CoefficientField& field, int nx, int ny) {
  py::array_t<double> out({ny, nx});
  auto r = out.mutable_unchecked<2>();
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix) r(ny - 1 - iy, ix) = field.young[iy * nx + ix]; // row 0 = top
  return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "partially explicit multiscale solver for linear poroelasticity";

  m.def("lame_from_young", &lame_from_young, py::arg("young"), py::arg("poisson"),
        "Lame coefficients (lambda, mu) from Young's modulus and the Poisson ratio");

  m.def(
      "streak_field",
      [](int coarse_n, int ratio, double background, double contrast, std::uint64_t seed) {
        PhysicsConstants pc;
        GridPair gp = build_grid_pair(coarse_n, ratio);
        CoefficientField f = generate_streak_field(gp, background, contrast, seed, pc);
        return field_array(f, gp.fine.nx, gp.fine.ny);
      },
      py::arg("coarse_n"), py::arg("ratio"), py::arg("background") = 1.0,
      py::arg("contrast") = 1e4, py::arg("seed") = 3,
      "High-contrast Young's modulus raster (row 0 = top of the domain)");

  m.def(
      "preset_config",
      [](const std::string& name) { return preset(name).to_json(); }, py::arg("name"),
      "JSON text of a named experiment preset");

  m.def(
      "run",
      [](const std::string& config_json) {
        ExperimentConfig cfg = ExperimentConfig::from_json(config_json);
        return summary_to_dict(run_experiment(cfg));
      },
      py::arg("config_json"), "Run an experiment from config JSON; returns a summary dict");

  m.def(
      "run_preset",
      [](const std::string& name, const std::string& outdir, const py::dict& overrides) {
        nlohmann::json doc = nlohmann::json::parse(preset(name).to_json());
        for (auto item : overrides) {
          const std::string key = py::str(item.first);
          py::handle v = item.second;
          if (py::isinstance<py::bool_>(v))
            doc[key] = v.cast<bool>();
          else if (py::isinstance<py::int_>(v))
            doc[key] = v.cast<long long>();
          else if (py::isinstance<py::float_>(v))
            doc[key] = v.cast<double>();
          else if (py::isinstance<py::list>(v))
            doc[key] = v.cast<std::vector<std::string>>();
          else
            doc[key] = py::str(v).cast<std::string>();
        }
        doc["outdir"] = outdir;
        ExperimentConfig cfg = ExperimentConfig::from_json(doc.dump());
        return summary_to_dict(run_experiment(cfg));
      },
      py::arg("name"), py::arg("outdir"), py::arg("overrides") = py::dict(),
      "Run a named preset with optional config overrides");

  m.def("report", &report_from_dir, py::arg("dir"),
        "Re-derive the error table of a finished run directory; returns CSV text");

  m.def(
      "solve_fine",
      [](int coarse_n, int ratio, double tau, int steps, const std::string& source,
         const std::string& initial, std::uint64_t seed, double contrast) {
        PhysicsConstants pc;
        GridPair gp = build_grid_pair(coarse_n, ratio);
        CoefficientField field = generate_streak_field(gp, 1.0, contrast, seed, pc);
        FormSet forms = assemble_forms(gp, field, pc, coarse_hat_functions(gp));
        FineSolver solver(forms, tau);
        Trajectory t =
            solver.run(initial_by_name(initial), source_by_name(source), steps, steps);
        const StructuredGrid& g = gp.fine;
        py::array_t<double> out({g.ny + 1, g.nx + 1});
        auto r = out.mutable_unchecked<2>();
        for (int iy = 0; iy <= g.ny; ++iy)
          for (int ix = 0; ix <= g.nx; ++ix) {
            const int pd = forms.dofs.node2p[size_t(g.node_id(ix, iy))];
            r(g.ny - iy, ix) = pd >= 0 ? t.p.back()[pd] : 0.0;
          }
        return out;
      },
      py::arg("coarse_n"), py::arg("ratio"), py::arg("tau"), py::arg("steps"),
      py::arg("source") = "f1", py::arg("initial") = "bump", py::arg("seed") = 3,
      py::arg("contrast") = 1e4,
      "Fine reference pressure at the final time as a (ny+1, nx+1) array");

  m.def(
      "stability",
      [](int coarse_n, int ratio, int layers, int j, int ji, double tau, std::uint64_t seed,
         double contrast) {
        PhysicsConstants pc;
        GridPair gp = build_grid_pair(coarse_n, ratio);
        CoefficientField field = contrast == 1.0
                                     ? constant_field(gp, 1.0, 1.0, pc)
                                     : generate_streak_field(gp, 1.0, contrast, seed, pc);
        FormSet forms = assemble_forms(gp, field, pc, coarse_hat_functions(gp));
        AuxiliarySpace aux = build_auxiliary(forms, j, j);
        MultiscaleSpace q1 = build_cem_basis(forms, aux, layers, SpaceTag::Q_H1);
        Qh2Aux q2aux = build_qh2_aux(forms, aux, ji);
        MultiscaleSpace q2 = build_qh2_basis(forms, aux, q2aux, layers);
        StabilityReport r = stability_report(forms, q1, q2, tau);
        py::dict d;
        d["gamma_c"] = r.gamma_c;
        d["lambda_max"] = r.lambda_max;
        d["tau_max"] = r.tau_max;
        d["c1"] = r.c1;
        d["coarse_h"] = r.coarse_h;
        d["tau"] = r.tau;
        d["pass"] = r.pass;
        return d;
      },
      py::arg("coarse_n"), py::arg("ratio"), py::arg("layers") = 2, py::arg("j") = 2,
      py::arg("ji") = 2, py::arg("tau") = 1e-4, py::arg("seed") = 3, py::arg("contrast") = 1e4,
      "CFL diagnostics of the explicit space on a generated field");
}
