// Python bindings for the core operations.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "feecal/calibration.hpp"
#include "feecal/errors.hpp"
#include "feecal/geometry.hpp"
#include "feecal/io.hpp"
#include "feecal/soil.hpp"
#include "feecal/synthetic.hpp"

namespace py = pybind11;
using namespace feecal;

namespace {

py::dict metric(const ErrorMetric& m) {
  py::dict d;
  d["absolute"] = m.absolute;
  d["percent"] = m.percent;
  d["peak"] = m.peak;
  return d;
}

py::dict stage(const StageResult& s) {
  py::dict d;
  d["name"] = s.name;
  py::dict params;
  for (std::size_t k = 0; k < s.values.size(); ++k) params[py::str(s.parameter_names[k])] = s.values[k];
  d["parameters"] = params;
  d["objective"] = s.objective;
  d["iterations"] = s.iterations;
  d["function_evaluations"] = s.function_evaluations;
  d["converged"] = s.converged;
  d["stop_reason"] = s.stop_reason;
  d["target_rmse"] = metric(s.target_rmse);
  return d;
}

}  // namespace

PYBIND11_MODULE(_feecal, m) {
  m.doc() = "Earthmoving force model and soil-parameter calibration";

  static py::exception<Error> base(m, "FeecalError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const InvalidArgument& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const Error& e) {
      base(e.what());
    }
  });

  m.attr("GRAVITY") = kGravity;

  py::class_<SoilParameters>(m, "SoilParameters")
      .def(py::init<>())
      .def(py::init([](double gamma, double c, double ca, double phi, double delta, double kc,
                       double kphi, double n) {
             return SoilParameters{gamma, c, ca, phi, delta, kc, kphi, n};
           }),
           py::arg("gamma"), py::arg("cohesion_c"), py::arg("adhesion_ca"), py::arg("phi"),
           py::arg("delta"), py::arg("kc"), py::arg("kphi"), py::arg("n"))
      .def_readwrite("gamma", &SoilParameters::gamma)
      .def_readwrite("cohesion_c", &SoilParameters::cohesion_c)
      .def_readwrite("adhesion_ca", &SoilParameters::adhesion_ca)
      .def_readwrite("phi", &SoilParameters::phi)
      .def_readwrite("delta", &SoilParameters::delta)
      .def_readwrite("kc", &SoilParameters::kc)
      .def_readwrite("kphi", &SoilParameters::kphi)
      .def_readwrite("n", &SoilParameters::n)
      .def("validate", &SoilParameters::validate)
      .def("to_list", [](const SoilParameters& s) {
        const auto a = s.to_array();
        return std::vector<double>(a.begin(), a.end());
      })
      .def("__eq__", [](const SoilParameters& a, const SoilParameters& b) { return a == b; })
      .def("__repr__", [](const SoilParameters& s) { return io::to_json(s).dump(); });

  py::class_<LoaderParameters>(m, "LoaderParameters")
      .def(py::init<>())
      .def_readwrite("omega", &LoaderParameters::omega)
      .def_readwrite("b", &LoaderParameters::b)
      .def_readwrite("wb", &LoaderParameters::wb);

  py::class_<FeasibilityMargins>(m, "FeasibilityMargins")
      .def(py::init<>())
      .def_readwrite("eps1", &FeasibilityMargins::eps1)
      .def_readwrite("eps2", &FeasibilityMargins::eps2)
      .def_readwrite("denominator", &FeasibilityMargins::denominator)
      .def_readwrite("rho_min", &FeasibilityMargins::rho_min)
      .def_readwrite("alpha_max", &FeasibilityMargins::alpha_max);

  py::class_<BearingFactors>(m, "BearingFactors")
      .def_readonly("n_gamma", &BearingFactors::n_gamma)
      .def_readonly("n_c", &BearingFactors::n_c)
      .def_readonly("n_a", &BearingFactors::n_a)
      .def_readonly("n_q", &BearingFactors::n_q);

  m.def("bearing_factors_original", &bearing_factors_original, py::arg("alpha"), py::arg("beta"),
        py::arg("rho"), py::arg("phi"), py::arg("delta"));
  m.def("bearing_factors_canonical", &bearing_factors_canonical, py::arg("alpha"), py::arg("beta"),
        py::arg("rho"), py::arg("phi"), py::arg("delta"), py::arg("margins") = FeasibilityMargins{});
  m.def("solve_beta", &solve_beta, py::arg("alpha"), py::arg("rho"), py::arg("phi"),
        py::arg("delta"), py::arg("margins") = FeasibilityMargins{});
  m.def("bekker_pressure", &bekker_pressure, py::arg("depth"), py::arg("soil"), py::arg("loader"));
  m.def(
      "bucket_forces",
      [](double f, double p, double lt, const SoilParameters& soil, const LoaderParameters& loader) {
        const ForcePrediction r = bucket_forces(f, p, lt, soil, loader);
        return py::make_tuple(r.f_t, r.f_n);
      },
      py::arg("fee_force"), py::arg("pressure"), py::arg("lt"), py::arg("soil"), py::arg("loader"));

  py::class_<Scenario>(m, "Scenario")
      .def_static("default_training", &Scenario::default_training)
      .def_static("held_out", &Scenario::held_out)
      .def_readwrite("loader", &Scenario::loader)
      .def_readwrite("sample_rate", &Scenario::sample_rate)
      .def_readwrite("duration", &Scenario::duration)
      .def("sample_count", &Scenario::sample_count)
      .def("to_json", [](const Scenario& s) { return io::to_json(s).dump(); })
      .def_static("from_json", [](const std::string& text) {
        return io::scenario_from_json(io::json::parse(text));
      });

  py::class_<CycleDataset>(m, "CycleDataset")
      .def("__len__", &CycleDataset::size)
      .def_readonly("f_t_obs", &CycleDataset::f_t_obs)
      .def_readonly("f_n_obs", &CycleDataset::f_n_obs)
      .def_property_readonly("t", [](const CycleDataset& d) {
        std::vector<double> v;
        for (const auto& s : d.samples) v.push_back(s.t);
        return v;
      })
      .def_property_readonly("depth", [](const CycleDataset& d) {
        std::vector<double> v;
        for (const auto& g : sample_geometry(d.samples, d.surface)) v.push_back(g.depth);
        return v;
      })
      .def("to_csv", [](const CycleDataset& d) { return io::cycle_csv(d); });

  m.def("simulate_cycle", &simulate_cycle, py::arg("scenario"), py::arg("truth"));
  m.def("add_noise", &add_noise, py::arg("dataset"), py::arg("relative_sigma"), py::arg("seed"));
  m.def("default_truth", &default_truth);
  m.def(
      "make_truth",
      [](const std::string& strength, const std::string& compaction) {
        return make_truth(find_preset(strength), find_preset(compaction));
      },
      py::arg("strength"), py::arg("compaction"));
  m.def("preset_names", [] {
    std::vector<std::string> names;
    for (const SoilPreset& p : preset_catalog()) names.push_back(p.name);
    return names;
  });
  m.def("preset_catalog_json", [] { return io::preset_catalog_json().dump(); });

  py::class_<CalibrationOptions>(m, "CalibrationOptions")
      .def(py::init<>())
      .def_readwrite("lambda_weight", &CalibrationOptions::lambda_weight)
      .def_readwrite("gaussian_sigma", &CalibrationOptions::gaussian_sigma)
      .def_property(
          "n_starts", [](const CalibrationOptions& o) { return o.solver.n_starts; },
          [](CalibrationOptions& o, int v) { o.solver.n_starts = v; })
      .def_property(
          "seed", [](const CalibrationOptions& o) { return o.solver.seed; },
          [](CalibrationOptions& o, std::uint64_t v) { o.solver.seed = v; })
      .def_property(
          "max_iterations", [](const CalibrationOptions& o) { return o.solver.max_iterations; },
          [](CalibrationOptions& o, int v) { o.solver.max_iterations = v; });

  py::class_<CalibrationReport>(m, "CalibrationReport")
      .def_readonly("method", &CalibrationReport::method)
      .def_readonly("theta_star", &CalibrationReport::theta_star)
      .def_readonly("function_evaluations", &CalibrationReport::function_evaluations)
      .def_readonly("fitted_ft", &CalibrationReport::fitted_ft)
      .def_readonly("fitted_fn", &CalibrationReport::fitted_fn)
      .def_property_readonly("rmse_ft", [](const CalibrationReport& r) { return metric(r.rmse_ft); })
      .def_property_readonly("rmse_fn", [](const CalibrationReport& r) { return metric(r.rmse_fn); })
      .def_property_readonly("rmse_fr", [](const CalibrationReport& r) { return metric(r.rmse_fr); })
      .def_property_readonly("stages", [](const CalibrationReport& r) {
        py::list out;
        for (const StageResult& s : r.stages) out.append(stage(s));
        return out;
      });

  m.def("calibrate_multi_stage", &calibrate_multi_stage, py::arg("dataset"),
        py::arg("options") = CalibrationOptions{});
  m.def("calibrate_single_stage", &calibrate_single_stage, py::arg("dataset"),
        py::arg("options") = CalibrationOptions{});

  m.def(
      "predict_next_cycle",
      [](const SoilParameters& theta, const Scenario& scenario,
         const CycleDataset* prior) {
        const NextCyclePrediction p =
            prior ? predict_next_cycle(theta, scenario,
                                       std::span<const TrajectorySample>(prior->samples))
                  : predict_next_cycle(theta, scenario);
        py::dict d;
        std::vector<double> ft, fn, depth;
        for (std::size_t i = 0; i < p.samples.size(); ++i) {
          ft.push_back(p.prediction.samples[i].force.f_t);
          fn.push_back(p.prediction.samples[i].force.f_n);
          depth.push_back(p.geometry[i].depth);
        }
        d["f_t"] = ft;
        d["f_n"] = fn;
        d["depth"] = depth;
        d["ok"] = p.prediction.ok();
        return d;
      },
      py::arg("theta"), py::arg("scenario"), py::arg("prior_cycle") = nullptr);

  m.def(
      "gaussian_filter",
      [](const std::vector<double>& series, double sigma) { return gaussian_filter(series, sigma); },
      py::arg("series"), py::arg("sigma"));
  m.def(
      "rmse",
      [](const std::vector<double>& observed, const std::vector<double>& predicted) {
        return metric(rmse(observed, predicted));
      },
      py::arg("observed"), py::arg("predicted"));
  m.def("resultant", &resultant, py::arg("f_t"), py::arg("f_n"));
}
