#include <memory>
#include <string>
#include <utility>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "tacmine/bench.hpp"
#include "tacmine/constraints.hpp"
#include "tacmine/cover.hpp"
#include "tacmine/error.hpp"
#include "tacmine/io.hpp"
#include "tacmine/miner.hpp"
#include "tacmine/nl.hpp"
#include "tacmine/projection.hpp"
#include "tacmine/service.hpp"
#include "tacmine/synth.hpp"

namespace py = pybind11;
using json = nlohmann::json;
using namespace tacmine;

// Every entry point exchanges JSON text; the python package decodes it.
namespace {

json parse(const std::string& s) { return s.empty() ? json::object() : json::parse(s); }

MetricParams params_of(const std::string& s, const FeatureSchema& schema) {
  return s.empty() ? MetricParams{} : metric_params_from_json(parse(s), schema);
}

std::string generate_dataset(const std::string& params) {
  const auto r = generate(synth_params_from_json(parse(params)));
  return json{{"dataset", dataset_to_json(r.dataset)}, {"ground_truth", ground_truth_to_json(r)}}.dump();
}

std::string normalize_dataset(const std::string& raw) { return dataset_to_json(validate_dataset(parse(raw))).dump(); }

std::string mine(const std::string& dataset, const std::string& params, const std::string& miner) {
  const Dataset d = validate_dataset(parse(dataset));
  const MinerConfig cfg = miner.empty() ? MinerConfig{} : miner_config_from_json(parse(miner));
  TacticSet set;
  {
    py::gil_scoped_release release;
    set = mine_initial(d, params_of(params, d.schema), cfg);
  }
  return tactics_to_json(set.tactics, d.schema).dump();
}

std::string score(const std::string& dataset, const std::string& tactics, const std::string& params) {
  const Dataset d = validate_dataset(parse(dataset));
  const auto ts = tactics_from_json(parse(tactics), d.schema);
  const auto r = score_and_importance(d, ts, params_of(params, d.schema));
  return json{{"empty_description_length", r.empty_dl},
              {"description_length", r.dl},
              {"score", r.score},
              {"importance", r.importance}}
      .dump();
}

double distance(const std::string& schema, const std::string& a, const std::string& b) {
  const auto s = schema_from_json(parse(schema));
  return tactic_distance(tactic_from_json(parse(a), s), tactic_from_json(parse(b), s));
}

std::string parse_suggestion(const std::string& text, const std::string& schema, const std::string& tactics,
                             const std::vector<int>& selected) {
  const auto s = schema_from_json(parse(schema));
  const auto ts = tactics_from_json(parse(tactics), s);
  const auto p = TemplateBank::builtin().parse(text, make_parse_context(s, ts, selected));
  return json{{"constraint", constraint_to_json(p.constraint, s)},
              {"template", p.template_id},
              {"confidence", p.confidence}}
      .dump();
}

std::string benchmark(const std::string& config) {
  const auto cfg = bench_config_from_json(parse(config));
  BenchReport r;
  {
    py::gil_scoped_release release;
    r = run_benchmark(cfg);
  }
  return bench_report_to_json(r).dump();
}

class PyApi {
 public:
  explicit PyApi(const std::string& config) : api_(service_config_from_json(parse(config))) {}
  std::pair<int, std::string> handle(const std::string& method, const std::string& path, const std::string& body) {
    Response r;
    {
      py::gil_scoped_release release;
      r = api_.handle(method, path, body);
    }
    return {r.status, r.body.dump()};
  }
  void wait_for_jobs() {
    py::gil_scoped_release release;
    api_.wait_for_jobs();
  }

 private:
  Api api_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "tacmine core bindings";
  static py::exception<Error> error_type(m, "TacmineError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error_type, (std::string(to_string(e.code())) + ": " + e.what()).c_str());
    } catch (const json::exception& e) {
      py::set_error(PyExc_ValueError, e.what());
    }
  });
  m.def("generate_dataset", &generate_dataset, py::arg("params"));
  m.def("normalize_dataset", &normalize_dataset, py::arg("dataset"));
  m.def("mine", &mine, py::arg("dataset"), py::arg("params") = "", py::arg("miner") = "");
  m.def("score", &score, py::arg("dataset"), py::arg("tactics"), py::arg("params") = "");
  m.def("tactic_distance", &distance, py::arg("schema"), py::arg("a"), py::arg("b"));
  m.def("parse_suggestion", &parse_suggestion, py::arg("text"), py::arg("schema"), py::arg("tactics"),
        py::arg("selected") = std::vector<int>{});
  m.def("benchmark", &benchmark, py::arg("config"));
  py::class_<PyApi>(m, "Api")
      .def(py::init<const std::string&>(), py::arg("config"))
      .def("handle", &PyApi::handle, py::arg("method"), py::arg("path"), py::arg("body") = "")
      .def("wait_for_jobs", &PyApi::wait_for_jobs);
}
