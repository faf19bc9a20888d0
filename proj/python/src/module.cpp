// JSON-string bridge; the adaptutor package turns these into dicts.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "adaptutor/error.hpp"
#include "adaptutor/service.hpp"
#include "adaptutor/sim.hpp"

namespace py = pybind11;
using namespace adaptutor;
using nlohmann::json;

namespace {

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(errc::kMalformedDocument, e.what());
  }
}

Scalar scalar_for(ArgType t, const json& v) {
  switch (t) {
    case ArgType::Number: return v.get<double>();
    case ArgType::Style: return style_from_json(v);
    case ArgType::Band: {
      auto b = parse_band(v.get<std::string>());
      if (!b) throw Error(errc::kMalformedDocument, "unknown band " + v.dump());
      return *b;
    }
    case ArgType::Text: break;
  }
  return v.get<std::string>();
}

std::vector<Fact> facts_from_json(const json& j) {
  std::vector<Fact> out;
  for (const auto& f : j) {
    const std::string name = f.at("predicate");
    const auto* sig = find_predicate(name);
    if (!sig) throw Error(errc::kUnknownPredicate, "unknown predicate " + name);
    const auto& args = f.at("args");
    if (args.size() != sig->args.size()) throw Error(errc::kMalformedDocument, "wrong arity for " + name);
    Fact fact{name, {}};
    for (std::size_t i = 0; i < args.size(); ++i) fact.args.push_back(scalar_for(sig->args[i], args[i]));
    out.push_back(std::move(fact));
  }
  return out;
}

const Concept& concept_in(const CoursePack& pack, const std::string& id) {
  const auto* c = pack.find_concept(id);
  if (!c) throw Error(errc::kUnknownConcept, "unknown concept " + id);
  return *c;
}

std::string band_of(double score) { return std::string(to_string(band(score))); }

std::string score(const std::string& instrument, const std::string& responses) {
  const auto ins = validate_instrument(parse(instrument));
  const auto v = score_questionnaire(ins, parse(responses).get<Responses>());
  return json{{"style_vector", to_json(v)}, {"dominant_style", to_string(dominant_style(v))}}.dump();
}

std::string load_pack(const std::string& doc) { return to_json(load_course_pack(parse(doc))).dump(); }

std::string select_for(const std::string& pack, const std::string& cid, const std::string& spec,
                   const std::vector<std::string>& used, std::uint64_t seed) {
  const auto p = load_course_pack(parse(pack));
  const std::set<std::string> u(used.begin(), used.end());
  return to_json(select_questions(concept_in(p, cid), test_spec_from_json(parse(spec)), u, seed)).dump();
}

std::string grade_sheet(const std::string& pack, const std::string& cid, const std::string& instance,
                        const std::string& answers, const std::string& style, const std::string& hints) {
  const auto p = load_course_pack(parse(pack));
  return to_json(grade(concept_in(p, cid), test_instance_from_json(parse(instance)), parse(answers).get<Answers>(),
                       style_from_json(style), parse(hints).get<HintsUsed>()))
      .dump();
}

std::string run_rules(const std::string& facts, const std::string& rulebook) {
  const auto traced = infer_traced(facts_from_json(parse(facts)), parse_rulebook(parse(rulebook)));
  json actions = json::array();
  for (const auto& a : traced.actions) actions.push_back(to_json(a));
  return json{{"actions", actions}, {"fired", traced.fired}, {"evaluations", traced.evaluations}}.dump();
}

std::string plan(const std::string& model, const std::string& pack, const std::string& cid,
                 const std::string& rulebook) {
  const auto p = load_course_pack(parse(pack));
  return to_json(plan_concept(learner_model_from_json(parse(model)), p, concept_in(p, cid),
                              parse_rulebook(parse(rulebook))))
      .dump();
}

std::string simulate(const std::string& pack, const std::string& rules, const std::string& instrument,
                     const std::string& options) {
  const json o = parse(options);
  sim::ExperimentConfig cfg;
  cfg.population.size = o.value("population", cfg.population.size);
  cfg.population.style_sensitivity = o.value("sensitivity", cfg.population.style_sensitivity);
  cfg.population.noise = o.value("noise", cfg.population.noise);
  cfg.seed = o.value("seed", cfg.seed);
  cfg.threads = o.value("threads", cfg.threads);
  if (o.contains("policies")) {
    cfg.policies.clear();
    for (const auto& name : o["policies"]) {
      const auto p = sim::parse_policy(name.get<std::string>());
      if (!p) throw Error(errc::kMalformedDocument, "unknown policy " + name.dump());
      cfg.policies.push_back(*p);
    }
  }
  if (o.contains("fixed_style")) cfg.fixed_style = style_from_json(o["fixed_style"]);
  const auto report = sim::run_experiment(std::make_shared<const CoursePack>(load_course_pack(parse(pack))),
                                          std::make_shared<const Rulebook>(parse_rulebook(parse(rules))),
                                          std::make_shared<const Instrument>(validate_instrument(parse(instrument))),
                                          cfg);
  return sim::to_json(report).dump();
}

struct PyService {
  std::unique_ptr<Service> svc;

  PyService(const std::string& pack, const std::string& rules, const std::string& instrument,
            const std::string& records, std::optional<std::uint64_t> seed, const std::string& teacher_token) {
    ApiConfig cfg;
    cfg.pack_path = pack;
    cfg.rules_path = rules;
    cfg.instrument_path = instrument;
    cfg.records_dir = records;
    cfg.seed = seed;
    cfg.teacher_token = teacher_token;
    svc = Service::from_config(cfg);
  }

  std::pair<int, std::string> handle(const std::string& method, const std::string& path, const std::string& body,
                                     const std::map<std::string, std::string>& headers) {
    std::map<std::string, std::string> lower;
    for (const auto& [k, v] : headers) {
      std::string key = k;
      for (auto& ch : key) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
      lower[key] = v;
    }
    py::gil_scoped_release release;
    const auto r = svc->handle({method, path, lower, body});
    return {r.status, r.body.dump()};
  }
};

}  // namespace

PYBIND11_MODULE(_adaptutor, m) {
  m.doc() = "adaptive tutoring engine (JSON string interface)";

  static py::exception<Error> error(m, "EngineError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error.ptr())(py::str(e.what()));
      py::setattr(exc, "code", py::str(e.code()));
      py::setattr(exc, "detail", py::str(e.detail().dump()));
      PyErr_SetObject(error.ptr(), exc.ptr());
    } catch (const json::exception& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error.ptr())(py::str(e.what()));
      py::setattr(exc, "code", py::str(errc::kMalformedDocument));
      py::setattr(exc, "detail", py::str("{}"));
      PyErr_SetObject(error.ptr(), exc.ptr());
    }
  });

  m.def("band", &band_of, py::arg("score"));
  m.def("score_questionnaire", &score, py::arg("instrument"), py::arg("responses"));
  m.def("load_course_pack", &load_pack, py::arg("pack"));
  m.def("select_questions", &select_for, py::arg("pack"), py::arg("concept"), py::arg("spec"), py::arg("used"),
        py::arg("seed"));
  m.def("grade", &grade_sheet, py::arg("pack"), py::arg("concept"), py::arg("instance"), py::arg("answers"),
        py::arg("style"), py::arg("hints"));
  m.def("infer", &run_rules, py::arg("facts"), py::arg("rulebook"));
  m.def("plan_concept", &plan, py::arg("model"), py::arg("pack"), py::arg("concept"), py::arg("rulebook"));
  m.def("updated_effectiveness", &updated_effectiveness, py::arg("current"), py::arg("pre_score"),
        py::arg("post_score"), py::arg("alpha") = kModelerAlpha);
  m.def("run_experiment", &simulate, py::arg("pack"), py::arg("rules"), py::arg("instrument"),
        py::arg("options"), py::call_guard<py::gil_scoped_release>());

  py::class_<PyService>(m, "Service")
      .def(py::init<const std::string&, const std::string&, const std::string&, const std::string&,
                    std::optional<std::uint64_t>, const std::string&>(),
           py::arg("pack"), py::arg("rules"), py::arg("instrument"), py::arg("records"), py::arg("seed"),
           py::arg("teacher_token"))
      .def("handle", &PyService::handle, py::arg("method"), py::arg("path"), py::arg("body"), py::arg("headers"));
}
