// Acceptance checks: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails.
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include "adaptutor/error.hpp"
#include "adaptutor/records.hpp"
#include "adaptutor/service.hpp"
#include "adaptutor/sim.hpp"
#include "support.hpp"

using namespace adaptutor;
namespace ts = testsupport;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail << "first failure: " << what << "; ";
    pass = pass && ok;
  }
};

int failures = 0;

void criterion(const std::string& name, const std::function<void(Outcome&)>& body) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(o);
  } catch (const Error& e) {
    o.require(false, e.code() + ": " + e.what());
  } catch (const std::exception& e) {
    o.require(false, e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%s  %-28s %s(%.2fs)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.str().c_str(), secs);
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

KnowledgeBand table_band(int score) {
  if (score >= 86) return KnowledgeBand::Excellent;
  if (score >= 71) return KnowledgeBand::VeryGood;
  if (score >= 51) return KnowledgeBand::Good;
  if (score >= 31) return KnowledgeBand::Average;
  return KnowledgeBand::Weak;
}

Tutor demo_tutor(SessionConfig cfg = {}, std::shared_ptr<const Rulebook> rules = ts::default_rules()) {
  Tutor t(ts::demo_pack(), std::move(rules), ts::demo_instrument(), cfg);
  t.set_clock([n = 0]() mutable { return "2026-01-01T00:00:00." + std::to_string(100 + n++ % 900) + "Z"; });
  return t;
}

// Drives a learner with random answers, hints and messages until the course
// ends or `steps` commands have run.
LearnerModel random_walk(const Tutor& t, const std::string& id, std::mt19937_64& rng, int steps) {
  using K = SessionState::Kind;
  auto m = t.new_learner(id);
  t.submit_profile(m, ts::favouring(*ts::demo_instrument(), kAllStyles[rng() % 5]));
  for (int i = 0; i < steps && m.state.kind != K::CourseComplete; ++i) {
    const auto cid = m.state.cpt;
    const Concept& c = *ts::demo_pack()->find_concept(cid);
    IssuedTest test = m.state.kind == K::ConceptPretest ? t.issue_pretest(m, cid) : t.issue_posttest(m, cid);
    if (rng() % 2) t.request_hint(m, test.test_id, test.instance.questions[0]);
    if (rng() % 4 == 0) t.annotate(m, {{"body", "note " + std::to_string(i)}});
    Answers a;
    for (const auto& q : test.instance.questions) {
      const auto& choices = c.find_question(q)->choices;
      a[q] = rng() % 3 ? ts::answer_all(c, {q}, true).at(q) : choices[rng() % choices.size()].id;
    }
    t.submit_answers(m, test.test_id, a);
  }
  return m;
}

HttpResponse call(Service& s, const std::string& method, const std::string& path,
                  const nlohmann::json& body = nullptr) {
  return s.handle({method, path, {}, body.is_null() ? std::string{} : body.dump()});
}

}  // namespace

int main() {
  std::cout << "acceptance suite (" << ADAPTUTOR_DATA_DIR << ")\n";

  criterion("banding-exactness", [](Outcome& o) {
    int n = 0;
    for (int s = 0; s <= 100; ++s, ++n) o.require(band(s) == table_band(s), "score " + std::to_string(s));
    o.detail << n << " integer scores; ";
  });

  criterion("question-selection", [](Outcome& o) {
    std::mt19937_64 rng(1000);
    int trials = 0, feasible = 0, exhausted = 0;
    while (trials < 1000) {
      const auto c = ts::random_concept(rng, 1 + static_cast<int>(rng() % 3), 3);
      std::set<std::string> used;
      for (const auto& q : c.questions) {
        if (rng() % 6 == 0) used.insert(q.id);
      }
      TestSpec spec{TestPhase::PreTest, 0,
                    {static_cast<int>(rng() % 3), static_cast<int>(rng() % 3), static_cast<int>(rng() % 3)}};
      spec.count = spec.level_mix[0] + spec.level_mix[1] + spec.level_mix[2];
      if (spec.count == 0) continue;
      ++trials;
      const bool oracle = ts::feasible_by_enumeration(c, spec, used);
      try {
        const auto inst = select_questions(c, spec, used, rng());
        o.require(oracle, "selected where the oracle found no feasible set");
        o.require(ts::valid_instance(c, spec, used, inst.questions), "invalid instance");
        ++feasible;
      } catch (const Error& e) {
        o.require(e.code() == errc::kBankExhausted && !oracle, "raised " + e.code() + " on a feasible bank");
        ++exhausted;
      }
    }
    o.detail << trials << " trials, " << feasible << " selected, " << exhausted << " exhausted; ";
  });

  criterion("weighted-grading", [](Outcome& o) {
    Concept c;
    c.id = "hand";
    c.sections = {{"heavy", "", {3, 3, 3, 3, 3}}, {"light", "", {1, 1, 1, 1, 1}}};
    c.questions = {{"q1", "heavy", Level::L1, Dimension::Objective, 10, "", {{"a", "", true, std::nullopt}, {"b", "", false, std::nullopt}}, {}},
                   {"q2", "light", Level::L1, Dimension::Objective, 10, "", {{"a", "", true, std::nullopt}, {"b", "", false, std::nullopt}}, {}}};
    const auto hand = grade(c, {{"q1", "q2"}, 0}, {{"q1", "a"}, {"q2", "b"}}, LearningStyle::SS);
    o.require(std::abs(hand.raw_score - 75.0) < 1e-12 && hand.band == KnowledgeBand::VeryGood, "hand example");
    o.detail << "hand example " << hand.raw_score << " -> " << display_name(hand.band) << "; ";

    std::mt19937_64 rng(4242);
    int sheets = 0;
    double worst = 0.0;
    while (sheets < 1000) {
      const auto rc = ts::random_concept(rng, 3, 2);
      std::vector<std::string> ids;
      Answers answers;
      HintsUsed hints;
      for (const auto& q : rc.questions) {
        if (rng() % 2) continue;
        ids.push_back(q.id);
        answers[q.id] = q.choices[rng() % q.choices.size()].id;
        if (rng() % 3 == 0) hints[q.id] = static_cast<int>(rng() % 3);
      }
      if (ids.empty()) continue;
      ++sheets;
      const auto style = kAllStyles[rng() % 5];
      const double diff =
          std::abs(grade(rc, {ids, 0}, answers, style, hints).raw_score - ts::grade_oracle(rc, ids, answers, style, hints));
      worst = std::max(worst, diff);
    }
    o.require(worst <= 1e-9, "oracle disagreement");
    o.detail << sheets << " sheets, max |diff| " << worst << "; ";
  });

  criterion("rule-engine", [](Outcome& o) {
    std::mt19937_64 rng(7);
    std::size_t fired = 0;
    for (int i = 0; i < 1000; ++i) {
      const auto rb = ts::random_rulebook(rng);
      auto facts = ts::random_facts(rng);
      const auto traced = infer_traced(facts, rb);
      fired += traced.fired.size();
      o.require(traced.actions == ts::infer_oracle(facts, rb), "oracle mismatch on rulebook " + std::to_string(i));
      o.require(traced.evaluations <= rb.rules.size(), "more evaluations than rules");
      for (int p = 0; p < 3; ++p) {
        std::shuffle(facts.begin(), facts.end(), rng);
        o.require(infer(facts, rb) == traced.actions, "fact order changed the result");
      }
    }
    o.detail << "1000 rulebooks, " << fired << " rule firings; ";
  });

  criterion("modeler-convergence", [](Outcome& o) {
    double e = 0.5;
    for (int i = 0; i < 100; ++i) e = updated_effectiveness(e, 0.0, 100.0, 0.3);
    const double closed = 1.0 - 0.5 * std::pow(0.7, 100);
    o.require(std::abs(e - closed) <= 1e-6, "closed form");
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> score(0.0, 100.0);
    double v = 0.5, lo = 1.0, hi = 0.0;
    for (int i = 0; i < 100000; ++i) {
      v = updated_effectiveness(v, score(rng), score(rng), 0.3);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    o.require(lo >= 0.0 && hi <= 1.0, "left [0,1]");
    o.detail << "|e100 - closed form| " << std::abs(e - closed) << ", range [" << lo << ", " << hi << "]; ";
  });

  criterion("replay-determinism", [](Outcome& o) {
    const auto dir = std::filesystem::temp_directory_path() / ("adaptutor-accept-" + std::to_string(std::random_device{}()));
    RecordStore store(dir);
    int learners = 0;
    std::size_t events = 0;
    for (bool reproducible : {true, false}) {
      SessionConfig cfg;
      cfg.reproducible = reproducible;
      cfg.give_up_after = 3;
      auto t = demo_tutor(cfg);
      t.set_event_sink([&](const LearnerModel& m, std::span<const Event> ev) { store.append(m.learner_id, ev); });
      std::mt19937_64 rng(reproducible ? 1 : 2);
      for (int i = 0; i < 20; ++i) {
        const std::string id = std::string(reproducible ? "r" : "e") + std::to_string(i);
        const auto m = random_walk(t, id, rng, 12);
        const auto back = t.replay(id, store.load(id));
        events += m.event_log.size();
        o.require(to_json(back, true) == to_json(m, true), "snapshot differs for " + id);
        ++learners;
      }
    }
    std::filesystem::remove_all(dir);
    o.detail << learners << " learners, " << events << " events replayed from disk; ";
  });

  criterion("adaptation-effectiveness", [](Outcome& o) {
    const auto t0 = std::chrono::steady_clock::now();
    sim::ExperimentConfig cfg;
    cfg.population.size = 200;
    cfg.seed = 42;
    cfg.policies = {sim::Policy::Adaptive, sim::Policy::RandomVariant};
    cfg.population.style_sensitivity = 0.3;
    const auto on = sim::run_experiment(ts::demo_pack(), ts::default_rules(), ts::demo_instrument(), cfg);
    cfg.population.style_sensitivity = 0.0;
    const auto off = sim::run_experiment(ts::demo_pack(), ts::default_rules(), ts::demo_instrument(), cfg);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto d_on = *on.compare(sim::Policy::Adaptive, sim::Policy::RandomVariant);
    const auto d_off = *off.compare(sim::Policy::Adaptive, sim::Policy::RandomVariant);
    o.require(d_on.mean > 0 && d_on.ci_low > 0, "sensitivity 0.3 interval does not exclude zero");
    o.require(d_off.ci_low <= 0 && d_off.ci_high >= 0, "sensitivity 0 interval excludes zero");
    o.require(secs < 60.0, "runtime");
    o.detail << "s=0.3 diff " << d_on.mean << " [" << d_on.ci_low << ", " << d_on.ci_high << "], s=0 diff "
             << d_off.mean << " [" << d_off.ci_low << ", " << d_off.ci_high << "]; ";
  });

  criterion("table-iv-features", [](Outcome& o) {
    const auto& pack = *ts::demo_pack();
    // Hypertext: every link in every variant resolves.
    int links = 0;
    for (const auto& c : pack.concepts) {
      for (auto s : kAllStyles) {
        for (const auto& b : c.variant(s).blocks) {
          for (const auto& l : b.links) {
            ++links;
            o.require(is_external_link(l) || pack.find_concept(l) != nullptr, "dangling link " + l);
          }
        }
      }
    }
    o.require(links > 0, "no hypertext links at all");

    // Adaptive sequencing: the skip rule changes the flow after the same pre-test.
    auto flow_with = [&](std::shared_ptr<const Rulebook> rules) {
      auto t = demo_tutor({}, std::move(rules));
      auto m = t.new_learner("seq");
      t.submit_profile(m, ts::favouring(*ts::demo_instrument(), LearningStyle::SS));
      auto test = t.issue_pretest(m, "hardware");
      auto a = ts::answer_all(*pack.find_concept("hardware"), test.instance.questions, true);
      a[test.instance.questions.back()] = ts::answer_all(*pack.find_concept("hardware"), {test.instance.questions.back()}, false).begin()->second;
      return t.submit_answers(m, test.test_id, a).flow;
    };
    Rulebook skip_good;
    skip_good.id = "skip-good";
    skip_good.rules.push_back({"skip", 1,
                               {{"phase", {Scalar{std::string("gate")}}, Comparator::Eq},
                                {"prior_band", {std::nullopt, Scalar{KnowledgeBand::Average}}, Comparator::Ge}},
                               {action::SetFlow{Flow::Skip, ""}}});
    const auto base_flow = flow_with(std::make_shared<const Rulebook>());
    const auto rule_flow = flow_with(std::make_shared<const Rulebook>(skip_good));
    o.require(base_flow != rule_flow && rule_flow == Flow::Skip, "rules did not alter the flow");

    // Problem-solving support: hints come from the server and are budgeted.
    const auto dir = std::filesystem::temp_directory_path() / ("adaptutor-t4-" + std::to_string(std::random_device{}()));
    ApiConfig cfg;
    cfg.pack_path = ts::data_path("packs/demo-computing.json");
    cfg.rules_path = ts::data_path("rules/default.json");
    cfg.instrument_path = ts::data_path("instruments/demo-lsp.json");
    cfg.records_dir = dir;
    {
      auto svc = Service::from_config(cfg);
      call(*svc, "POST", "/learners/h/profile", {{"responses", ts::favouring(*ts::demo_instrument(), LearningStyle::SS)}});
      auto pre = call(*svc, "POST", "/learners/h/concepts/hardware/pretest").body;
      const std::string path = "/learners/h/tests/" + pre["test_id"].get<std::string>() + "/questions/" +
                               pre["questions"][0]["id"].get<std::string>() + "/hint";
      const int budget = pre["hint_budget"];
      int served = 0;
      for (int i = 0; i < budget; ++i) served += call(*svc, "POST", path).status == 200;
      o.require(served == budget && call(*svc, "POST", path).status == 409, "hint budget not enforced");
    }
    std::filesystem::remove_all(dir);

    // Intelligent solution analysis: distractor tags reach the next plan's facts.
    {
      auto t = demo_tutor();
      auto m = t.new_learner("tags");
      t.submit_profile(m, ts::favouring(*ts::demo_instrument(), LearningStyle::GOA));
      auto test = t.issue_pretest(m, "hardware");
      const auto report = t.submit_answers(m, test.test_id, ts::answer_all(*pack.find_concept("hardware"), test.instance.questions, false)).report;
      o.require(!report.misconceptions.empty(), "no misconception recorded");
      const auto facts = build_facts(m, pack, *pack.find_concept("hardware"), PlanPhase::Pretest);
      for (const auto& tag : report.misconceptions) {
        o.require(std::count(facts.begin(), facts.end(), Fact{"misconception", {tag}}) == 1, "tag missing from facts: " + tag);
      }
    }

    // Adaptive presentation: variants differ, and so do the plans' choices.
    std::set<LearningStyle> chosen;
    for (const auto& c : pack.concepts) {
      for (auto a : kAllStyles) {
        for (auto b : kAllStyles) {
          if (a < b) o.require(!(c.variant(a).blocks == c.variant(b).blocks), "identical variants in " + c.id);
        }
      }
    }
    for (auto s : kAllStyles) {
      LearnerModel m;
      m.style_vector = score_questionnaire(*ts::demo_instrument(), ts::favouring(*ts::demo_instrument(), s));
      chosen.insert(plan_concept(m, pack, pack.concepts[0], *ts::default_rules()).variant_style);
    }
    o.require(chosen.size() == 5, "plans do not pick per-style variants");
    o.detail << "hypertext Y (" << links << " links), sequencing via rules, hints server-side, tags as facts, "
             << chosen.size() << " distinct variants; ";
  });

  criterion("api-walkthrough", [](Outcome& o) {
    const auto dir = std::filesystem::temp_directory_path() / ("adaptutor-e2e-" + std::to_string(std::random_device{}()));
    ApiConfig cfg;
    cfg.pack_path = ts::data_path("packs/demo-computing.json");
    cfg.rules_path = ts::data_path("rules/default.json");
    cfg.instrument_path = ts::data_path("instruments/demo-lsp.json");
    cfg.records_dir = dir;
    auto svc = Service::from_config(cfg);
    const auto& pack = *ts::demo_pack();
    std::vector<std::string> kinds;
    auto r = call(*svc, "POST", "/learners/walk/profile", {{"responses", ts::favouring(*ts::demo_instrument(), LearningStyle::EIA)}});
    o.require(r.status == 200, "profile");
    int guard = 0;
    while (r.body["state"]["kind"] != "CourseComplete" && guard++ < 30) {
      const std::string cid = r.body["state"]["concept"];
      auto pre = call(*svc, "POST", "/learners/walk/concepts/" + cid + "/pretest");
      o.require(pre.status == 200, "pretest");
      std::vector<std::string> ids;
      for (const auto& q : pre.body["questions"]) ids.push_back(q["id"]);
      r = call(*svc, "POST", "/learners/walk/tests/" + pre.body["test_id"].get<std::string>() + "/answers",
               {{"answers", ts::answer_all(*pack.find_concept(cid), ids, false)}});
      o.require(r.status == 200 && r.body["state"]["kind"] == "ConceptLearning", "gate");
      o.require(call(*svc, "GET", "/learners/walk/concepts/" + cid + "/content").status == 200, "content");
      auto post = call(*svc, "POST", "/learners/walk/concepts/" + cid + "/posttest");
      ids.clear();
      for (const auto& q : post.body["questions"]) ids.push_back(q["id"]);
      r = call(*svc, "POST", "/learners/walk/tests/" + post.body["test_id"].get<std::string>() + "/answers",
               {{"answers", ts::answer_all(*pack.find_concept(cid), ids, true)}});
      o.require(r.status == 200, "posttest");
    }
    o.require(r.body["state"]["kind"] == "CourseComplete", "course not completed");
    const auto events = call(*svc, "GET", "/learners/walk/events").body["events"];
    int transitions = 0;
    nlohmann::json prev = {{"kind", "AwaitingProfile"}, {"concept", nullptr}};
    for (const auto& e : events) {
      if (e["kind"] != "StateChanged") continue;
      ++transitions;
      const auto from = session_state_from_json(e["payload"]["from"]);
      const auto to = session_state_from_json(e["payload"]["to"]);
      o.require(is_legal_transition(from, to), "illegal transition");
    }
    svc.reset();
    std::filesystem::remove_all(dir);
    o.detail << pack.concepts.size() << " concepts, " << transitions << " legal transitions; ";
  });

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << "\n";
  return failures == 0 ? 0 : 1;
}
