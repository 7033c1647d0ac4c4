#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "decest/errors.hpp"
#include "decest/lie.hpp"
#include "decest/sim/analysis.hpp"
#include "decest/sim/scenarios.hpp"

namespace py = pybind11;
using namespace decest;
using namespace decest::sim;
using nlohmann::json;

// Configs and reports cross the boundary as JSON text; the Python side
// turns them into dicts.
namespace {

ScenarioConfig parse(const std::string& s) {
  try {
    return from_json(json::parse(s));
  } catch (const json::parse_error& e) {
    throw ConfigError({e.what()});
  }
}

std::vector<Variant> variants_of(const std::vector<std::string>& names) {
  std::vector<Variant> v;
  for (const auto& n : names) v.push_back(variant_from_string(n));
  return v;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.attr("__version__") = kVersion;
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("scenario", [](const std::string& name, int n_robots) {
    if (name == "toy") return to_json(scenario_toy(n_robots)).dump();
    if (name == "ground") return to_json(scenario_ground()).dump();
    if (name == "quad") return to_json(scenario_quad()).dump();
    throw std::invalid_argument("unknown scenario: " + name);
  });
  m.def("validate", [](const std::string& cfg) { return to_json(parse(cfg)).dump(); });
  m.def("config_hash", [](const std::string& cfg) { return config_hash(parse(cfg)); });

  m.def("monte_carlo", [](const std::string& cfg, int trials,
                          const std::vector<std::string>& variants, int threads) {
    const auto c = parse(cfg);
    const auto v = variants_of(variants);
    py::gil_scoped_release nogil;
    return summary_json(monte_carlo(c, trials, v, threads)).dump();
  });
  m.def("trace_csv", [](const std::string& cfg, int trial,
                        const std::vector<std::string>& variants) {
    const auto c = parse(cfg);
    const auto v = variants_of(variants);
    py::gil_scoped_release nogil;
    std::ostringstream os;
    write_trace_header(os);
    for (const auto& t : run_trial(c, trial, v)) write_trace_rows(os, t);
    return os.str();
  });

  m.def("observability", [](const std::string& cfg, int steps, int stride, bool landmarks,
                            bool pseudomeasurements) {
    LinearizationOptions o;
    o.steps = steps;
    o.stride = stride;
    o.landmarks = landmarks;
    o.pseudomeasurements = pseudomeasurements;
    const auto s = observability_study(parse(cfg), o);
    json j = to_json(s.report);
    j["rank_by_steps"] = s.rank_by_steps;
    return j.dump();
  });
  m.def("sweep_share_rate", [](const std::string& cfg, const std::vector<double>& rates,
                               int trials, int threads) {
    const auto c = parse(cfg);
    py::gil_scoped_release nogil;
    std::vector<std::pair<double, std::vector<double>>> out;
    for (const auto& p : sweep_share_rate(c, rates, trials, threads)) out.emplace_back(p.rate, p.rmse);
    return out;
  });
  m.def("bench_message_size", [](const std::string& cfg, const std::vector<std::int64_t>& lengths) {
    std::vector<std::tuple<std::int64_t, std::size_t, std::size_t>> out;
    for (const auto& r : bench_message_size(parse(cfg), lengths)) {
      out.emplace_back(r.steps, r.rmi_bytes, r.raw_input_bytes);
    }
    return out;
  });
  m.def("nees_envelope", &nees_envelope, py::arg("dof"), py::arg("trials"),
        py::arg("prob") = 0.95);

  m.def("se2_exp", [](const Vec3& xi) { return Mat3(se2::exp(xi)); });
  m.def("se2_log", [](const Mat3& t) { return Vec3(se2::log(t)); });
  m.def("se23_exp", [](const Vec9& xi) { return Mat5(se23::exp(xi)); });
  m.def("se23_log", [](const Mat5& t) { return Vec9(se23::log(t)); });
}
