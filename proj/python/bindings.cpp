#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lagrange/config.hpp"
#include "lagrange/error.hpp"
#include "lagrange/experiments.hpp"
#include "lagrange/operator_params.hpp"
#include "lagrange/rootspace.hpp"

namespace py = pybind11;
using namespace lagrange;

namespace {

using RootList = std::vector<std::pair<Complex, int>>;

RootList to_list(const RootSet& roots) {
  RootList out;
  for (const Root& r : roots.roots()) out.emplace_back(r.value, r.multiplicity);
  return out;
}

RootSet from_list(const std::vector<Complex>& values) { return RootSet::cluster(values); }

py::dict report_dict(const StabilityReport& r) {
  py::list conds;
  for (const auto& c : r.conditions) {
    py::dict d;
    d["name"] = c.name;
    d["satisfied"] = c.satisfied;
    d["margin"] = c.margin;
    conds.append(d);
  }
  py::dict out;
  out["stable"] = r.stable;
  out["conditions"] = conds;
  return out;
}

std::vector<double> coeffs(const MonicPoly& p) { return {p.coeffs().begin(), p.coeffs().end()}; }

py::dict run_dict(const std::string& config_json) {
  const ExperimentConfig config = parse_config(config_json);
  RunResult result;
  {
    py::gil_scoped_release release;
    result = run_experiment(config);
  }
  const TraceLog& log = result.trace;
  py::dict out;
  out["weight_names"] = log.weight_names;
  out["iteration_means"] = log.iteration_means;
  out["iteration_peaks"] = log.iteration_peaks;
  out["final_weights"] = log.final_weights;
  out["final_time"] = log.final_time;
  out["diverged"] = log.diverged();
  out["divergence_time"] = log.divergence_time ? py::cast(*log.divergence_time) : py::none();
  py::list metrics;
  for (const auto& m : log.metrics) {
    py::dict d;
    d["phase"] = m.phase;
    d["iteration"] = m.iteration;
    d["t"] = m.t;
    d["set"] = m.set;
    d["mse"] = m.metrics.mse;
    d["accuracy"] = m.metrics.accuracy ? py::cast(*m.metrics.accuracy) : py::none();
    metrics.append(d);
  }
  out["metrics"] = metrics;
  std::vector<double> t, value;
  std::vector<std::size_t> weight;
  for (const auto& r : log.rows) {
    t.push_back(r.t);
    weight.push_back(r.weight);
    value.push_back(r.value);
  }
  out["trace_t"] = t;
  out["trace_weight"] = weight;
  out["trace_value"] = value;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Weights as damped linear oscillators driven by supervision impulses";

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<NumericFailure>(m, "NumericFailure", PyExc_ArithmeticError);
  py::register_exception<Infeasible>(m, "Infeasible", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

  m.def("betas_first", [](double theta, double a0, double a1) { return coeffs(betas_first(theta, a0, a1)); },
        py::arg("theta"), py::arg("alpha0"), py::arg("alpha1"));
  m.def("betas_fourth",
        [](double theta, double a0, double a1, double a2) { return coeffs(betas_fourth(theta, a0, a1, a2)); },
        py::arg("theta"), py::arg("alpha0"), py::arg("alpha1"), py::arg("alpha2"));
  m.def("poly_roots", [](std::vector<double> betas) { return to_list(poly_roots(MonicPoly(std::move(betas)))); },
        py::arg("betas"), "Distinct roots as (value, multiplicity) pairs.");
  m.def("characteristic_poly", [](const std::vector<Complex>& roots) { return coeffs(characteristic_poly(from_list(roots))); },
        py::arg("roots"));
  m.def("routh_hurwitz", [](std::vector<double> betas) { return report_dict(routh_hurwitz(MonicPoly(std::move(betas)))); },
        py::arg("betas"));

  m.def(
      "impulse_response",
      [](const std::vector<Complex>& roots, const std::vector<double>& times) {
        const ImpulseResponse g(from_list(roots));
        std::vector<double> out;
        out.reserve(times.size());
        for (double t : times) out.push_back(g(t));
        return out;
      },
      py::arg("roots"), py::arg("times"));
  m.def(
      "partial_fractions",
      [](const std::vector<Complex>& roots) { return partial_fraction_coefficients(from_list(roots)).values; },
      py::arg("roots"), "Coefficients c[j][i-1] of 1/prod(s - l_j)^r_j, ordered as the distinct roots.");
  m.def(
      "closed_form_response",
      [](const std::vector<Complex>& roots, const std::vector<double>& initial,
         const std::vector<std::pair<double, double>>& impulses, const std::vector<double>& times) {
        std::vector<Impulse> imp;
        for (const auto& [h, mag] : impulses) imp.push_back({h, mag});
        const ClosedFormResponse y(from_list(roots), initial, imp);
        std::vector<double> out;
        for (double t : times) out.push_back(y(t));
        return out;
      },
      py::arg("roots"), py::arg("initial"), py::arg("impulses"), py::arg("times"));

  m.def(
      "roots_to_params_second",
      [](const std::vector<Complex>& roots) {
        const SecondOrderDesign d = roots_to_params_second(from_list(roots));
        py::list branches;
        for (const auto& b : d.branches) branches.append(py::make_tuple(b.nu0, b.nu1, b.alpha1));
        return py::make_tuple(d.theta, branches);
      },
      py::arg("roots"), "Returns (theta, [(nu0, nu1, alpha1), ...]).");
  m.def(
      "design_roots",
      [](double theta, double memory_span, std::vector<double> fractions) {
        DesignSpec spec;
        spec.memory_span = memory_span;
        spec.fractions = std::move(fractions);
        const DesignResult r = design_roots(spec, theta);
        return py::make_tuple(to_list(r.roots), r.warnings);
      },
      py::arg("theta"), py::arg("memory_span") = 1e8, py::arg("fractions") = std::vector<double>{0.60, 0.65, 0.75});

  m.def("run_config", &run_dict, py::arg("config_json"),
        "Runs an experiment from its JSON config text and returns the trace as plain lists.");
  m.def("normalize_config", [](const std::string& text) { return config_to_json(parse_config(text)); },
        py::arg("config_json"));
}
