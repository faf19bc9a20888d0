#include "adaptutor/expert.hpp"

#include <algorithm>
#include <set>

#include "adaptutor/error.hpp"

namespace adaptutor {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

const std::vector<std::string_view> kSettingOrder = {
    "variant", "count.PreTest", "mix.PreTest", "count.PostTest", "mix.PostTest", "flow", "hint_budget"};

constexpr std::array<std::string_view, 5> kFlowNames = {"skip", "present", "repeat", "remediate", "remove"};

/// -1, 0, 1; nullopt when the scalars are of different kinds.
std::optional<int> compare(const Scalar& a, const Scalar& b) {
  if (a.index() != b.index()) return std::nullopt;
  auto three = [](auto x, auto y) { return x < y ? -1 : (y < x ? 1 : 0); };
  switch (a.index()) {
    case 0:
      return three(std::get<double>(a), std::get<double>(b));
    case 1:
      return three(std::get<std::string>(a), std::get<std::string>(b));
    case 2:
      return three(index_of(std::get<LearningStyle>(a)), index_of(std::get<LearningStyle>(b)));
    default:
      return three(static_cast<int>(std::get<KnowledgeBand>(a)), static_cast<int>(std::get<KnowledgeBand>(b)));
  }
}

bool satisfies(int cmp, Comparator c) {
  switch (c) {
    case Comparator::Eq: return cmp == 0;
    case Comparator::Ne: return cmp != 0;
    case Comparator::Lt: return cmp < 0;
    case Comparator::Le: return cmp <= 0;
    case Comparator::Gt: return cmp > 0;
    case Comparator::Ge: return cmp >= 0;
  }
  return false;
}

std::optional<Comparator> parse_comparator(std::string_view s) {
  if (s == "=" || s == "==") return Comparator::Eq;
  if (s == "!=" || s == "≠") return Comparator::Ne;
  if (s == "<") return Comparator::Lt;
  if (s == "<=" || s == "≤") return Comparator::Le;
  if (s == ">") return Comparator::Gt;
  if (s == ">=" || s == "≥") return Comparator::Ge;
  return std::nullopt;
}

std::string_view to_string(Comparator c) {
  constexpr std::array<std::string_view, 6> names = {"=", "!=", "<", "<=", ">", ">="};
  return names[static_cast<std::size_t>(c)];
}

Scalar parse_scalar(const nlohmann::json& j, ArgType type, const std::string& rule_id) {
  auto bad = [&](const std::string& what) {
    return Error(errc::kMalformedDocument, "rule '" + rule_id + "': " + what, {{"rule", rule_id}});
  };
  switch (type) {
    case ArgType::Number:
      if (!j.is_number()) throw bad("expected a number");
      return j.get<double>();
    case ArgType::Text:
      if (!j.is_string()) throw bad("expected a string");
      return j.get<std::string>();
    case ArgType::Style:
      return style_from_json(j);
    case ArgType::Band: {
      if (!j.is_string()) throw bad("expected a band");
      auto b = parse_band(j.get<std::string>());
      if (!b) throw bad("unknown band '" + j.get<std::string>() + "'");
      return *b;
    }
  }
  throw bad("unsupported argument");
}

nlohmann::json scalar_json(const Scalar& s) {
  return std::visit(overloaded{[](double d) { return nlohmann::json(d); },
                               [](const std::string& t) { return nlohmann::json(t); },
                               [](LearningStyle st) { return nlohmann::json(to_string(st)); },
                               [](KnowledgeBand b) { return nlohmann::json(to_string(b)); }},
                    s);
}

TestPhase phase_arg(const nlohmann::json& a, const std::string& rule_id) {
  auto p = parse_phase(a.at("phase").get<std::string>());
  if (!p) throw Error(errc::kMalformedDocument, "rule '" + rule_id + "': unknown phase", {{"rule", rule_id}});
  return *p;
}

Action parse_action(const nlohmann::json& a, const std::string& rule_id) {
  const auto name = a.at("action").get<std::string>();
  auto positive = [&](int n, int min) {
    if (n < min) {
      throw Error(errc::kMalformedDocument, "rule '" + rule_id + "': " + name + " count below " + std::to_string(min),
                  {{"rule", rule_id}});
    }
    return n;
  };
  if (name == "SetVariant") return action::SetVariant{style_from_json(a.at("style"))};
  if (name == "SetQuestionCount") return action::SetQuestionCount{phase_arg(a, rule_id), positive(a.at("count").get<int>(), 1)};
  if (name == "SetLevelMix") {
    const auto& m = a.at("mix");
    LevelMix mix = {positive(m.value("L1", 0), 0), positive(m.value("L2", 0), 0), positive(m.value("L3", 0), 0)};
    positive(mix[0] + mix[1] + mix[2], 1);
    return action::SetLevelMix{phase_arg(a, rule_id), mix};
  }
  if (name == "SetFlow") {
    const auto text = a.at("flow").get<std::string>();
    auto f = parse_flow(text);
    if (!f) throw Error(errc::kMalformedDocument, "rule '" + rule_id + "': unknown flow '" + text + "'", {{"rule", rule_id}});
    std::string target;
    if (*f == Flow::Remediate) target = a.value("target", std::string(kWeakestPrerequisite));
    return action::SetFlow{*f, target};
  }
  if (name == "SetHintBudget") return action::SetHintBudget{positive(a.at("count").get<int>(), 0)};
  if (name == "FlagForTeacher") return action::FlagForTeacher{a.value("reason", std::string("flagged by ") + rule_id)};
  throw Error(errc::kUnknownAction, "rule '" + rule_id + "': unknown action '" + name + "'",
              {{"rule", rule_id}, {"action", name}});
}

struct Key {
  int priority;
  std::size_t conditions;
  std::size_t position;
};

/// True when `a` beats `b`.
bool beats(const Key& a, const Key& b) {
  if (a.priority != b.priority) return a.priority > b.priority;
  if (a.conditions != b.conditions) return a.conditions > b.conditions;
  return a.position < b.position;
}

}  // namespace

const std::vector<PredicateSignature>& fact_vocabulary() {
  static const std::vector<PredicateSignature> v = {
      {"dominant_style", {ArgType::Style}},
      {"style_score", {ArgType::Style, ArgType::Number}},
      {"effectiveness", {ArgType::Style, ArgType::Number}},
      {"prior_band", {ArgType::Text, ArgType::Band}},
      {"overall_band", {ArgType::Band}},
      {"attempt_count", {ArgType::Text, ArgType::Number}},
      {"prereq_band", {ArgType::Text, ArgType::Band}},
      {"misconception", {ArgType::Text}},
      {"phase", {ArgType::Text}},
  };
  return v;
}

const PredicateSignature* find_predicate(std::string_view name) {
  for (const auto& p : fact_vocabulary()) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

std::string_view to_string(PlanPhase p) { return p == PlanPhase::Pretest ? "pretest" : "gate"; }

std::string_view to_string(Flow f) { return kFlowNames[static_cast<std::size_t>(f)]; }

std::optional<Flow> parse_flow(std::string_view text) {
  auto it = std::find(kFlowNames.begin(), kFlowNames.end(), text);
  if (it == kFlowNames.end()) return std::nullopt;
  return static_cast<Flow>(it - kFlowNames.begin());
}

std::optional<std::string> setting_of(const Action& a) {
  return std::visit(
      overloaded{[](const action::SetVariant&) -> std::optional<std::string> { return "variant"; },
                 [](const action::SetQuestionCount& x) -> std::optional<std::string> {
                   return "count." + std::string(to_string(x.phase));
                 },
                 [](const action::SetLevelMix& x) -> std::optional<std::string> {
                   return "mix." + std::string(to_string(x.phase));
                 },
                 [](const action::SetFlow&) -> std::optional<std::string> { return "flow"; },
                 [](const action::SetHintBudget&) -> std::optional<std::string> { return "hint_budget"; },
                 [](const action::FlagForTeacher&) -> std::optional<std::string> { return std::nullopt; }},
      a);
}

Rulebook parse_rulebook(const nlohmann::json& doc) {
  Rulebook rb;
  try {
    rb.id = doc.value("id", std::string("rulebook"));
    std::set<std::string> ids;
    for (const auto& rj : doc.at("rules")) {
      Rule r;
      r.id = rj.at("id").get<std::string>();
      if (!ids.insert(r.id).second) {
        throw Error(errc::kDuplicateId, "duplicate rule id '" + r.id + "'", {{"rule", r.id}});
      }
      r.priority = rj.value("priority", 0);
      for (const auto& cj : rj.value("conditions", nlohmann::json::array())) {
        Condition c;
        c.predicate = cj.at("predicate").get<std::string>();
        const auto* sig = find_predicate(c.predicate);
        if (sig == nullptr) {
          throw Error(errc::kUnknownPredicate, "rule '" + r.id + "': unknown predicate '" + c.predicate + "'",
                      {{"rule", r.id}, {"predicate", c.predicate}});
        }
        const auto& args = cj.at("args");
        if (!args.is_array() || args.size() != sig->args.size()) {
          throw Error(errc::kMalformedDocument,
                      "rule '" + r.id + "': " + c.predicate + " takes " + std::to_string(sig->args.size()) + " argument(s)",
                      {{"rule", r.id}, {"predicate", c.predicate}});
        }
        for (std::size_t i = 0; i < args.size(); ++i) {
          if (args[i].is_string() && args[i].get<std::string>() == "*") {
            c.args.emplace_back(std::nullopt);
          } else {
            c.args.emplace_back(parse_scalar(args[i], sig->args[i], r.id));
          }
        }
        const auto cmp = cj.value("comparator", std::string("="));
        auto parsed = parse_comparator(cmp);
        if (!parsed) {
          throw Error(errc::kMalformedDocument, "rule '" + r.id + "': unknown comparator '" + cmp + "'", {{"rule", r.id}});
        }
        c.comparator = *parsed;
        r.conditions.push_back(std::move(c));
      }
      std::set<std::string> settings;
      for (const auto& aj : rj.value("actions", nlohmann::json::array())) {
        Action a = parse_action(aj, r.id);
        if (auto s = setting_of(a); s && !settings.insert(*s).second) {
          throw Error(errc::kMalformedDocument, "rule '" + r.id + "' writes setting '" + *s + "' twice", {{"rule", r.id}});
        }
        r.actions.push_back(std::move(a));
      }
      if (r.conditions.empty() || r.actions.empty()) {
        throw Error(errc::kEmptyRule, "rule '" + r.id + "' needs at least one condition and one action", {{"rule", r.id}});
      }
      rb.rules.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(errc::kMalformedDocument, std::string("rulebook: ") + e.what());
  }
  return rb;
}

nlohmann::json to_json(const Action& a) {
  auto mix_json = [](const LevelMix& m) { return nlohmann::json{{"L1", m[0]}, {"L2", m[1]}, {"L3", m[2]}}; };
  return std::visit(
      overloaded{
          [](const action::SetVariant& x) { return nlohmann::json{{"action", "SetVariant"}, {"style", to_string(x.style)}}; },
          [](const action::SetQuestionCount& x) {
            return nlohmann::json{{"action", "SetQuestionCount"}, {"phase", to_string(x.phase)}, {"count", x.count}};
          },
          [&](const action::SetLevelMix& x) {
            return nlohmann::json{{"action", "SetLevelMix"}, {"phase", to_string(x.phase)}, {"mix", mix_json(x.mix)}};
          },
          [](const action::SetFlow& x) {
            nlohmann::json j = {{"action", "SetFlow"}, {"flow", to_string(x.flow)}};
            if (x.flow == Flow::Remediate) j["target"] = x.target;
            return j;
          },
          [](const action::SetHintBudget& x) { return nlohmann::json{{"action", "SetHintBudget"}, {"count", x.count}}; },
          [](const action::FlagForTeacher& x) { return nlohmann::json{{"action", "FlagForTeacher"}, {"reason", x.reason}}; }},
      a);
}

nlohmann::json to_json(const Rulebook& rb) {
  nlohmann::json rules = nlohmann::json::array();
  for (const auto& r : rb.rules) {
    nlohmann::json conds = nlohmann::json::array();
    for (const auto& c : r.conditions) {
      nlohmann::json args = nlohmann::json::array();
      for (const auto& a : c.args) args.push_back(a ? scalar_json(*a) : nlohmann::json("*"));
      conds.push_back({{"predicate", c.predicate}, {"args", args}, {"comparator", to_string(c.comparator)}});
    }
    nlohmann::json acts = nlohmann::json::array();
    for (const auto& a : r.actions) acts.push_back(to_json(a));
    rules.push_back({{"id", r.id}, {"priority", r.priority}, {"conditions", conds}, {"actions", acts}});
  }
  return {{"id", rb.id}, {"rules", rules}};
}

nlohmann::json to_json(const Fact& f) {
  nlohmann::json args = nlohmann::json::array();
  for (const auto& a : f.args) args.push_back(scalar_json(a));
  return {{"predicate", f.predicate}, {"args", args}};
}

bool matches(const Condition& c, const Fact& f) {
  if (c.predicate != f.predicate || c.args.size() != f.args.size()) return false;
  for (std::size_t i = 0; i < c.args.size(); ++i) {
    if (!c.args[i]) continue;
    auto cmp = compare(f.args[i], *c.args[i]);
    if (!cmp) return false;
    const bool last = i + 1 == c.args.size();
    if (!satisfies(*cmp, last ? c.comparator : Comparator::Eq)) return false;
  }
  return true;
}

bool fires(const Rule& r, const std::vector<Fact>& facts) {
  return std::all_of(r.conditions.begin(), r.conditions.end(), [&](const Condition& c) {
    return std::any_of(facts.begin(), facts.end(), [&](const Fact& f) { return matches(c, f); });
  });
}

Inference infer_traced(const std::vector<Fact>& facts, const Rulebook& rules) {
  Inference out;
  struct Holder {
    Key key;
    const Action* action;
  };
  std::map<std::string, Holder> winners;
  std::vector<const Action*> flags;

  for (std::size_t pos = 0; pos < rules.rules.size(); ++pos) {
    const Rule& r = rules.rules[pos];
    ++out.evaluations;
    if (!fires(r, facts)) continue;
    out.fired.push_back(r.id);
    const Key key{r.priority, r.conditions.size(), pos};
    for (const auto& a : r.actions) {
      auto setting = setting_of(a);
      if (!setting) {
        flags.push_back(&a);
        continue;
      }
      auto it = winners.find(*setting);
      if (it == winners.end() || beats(key, it->second.key)) winners[*setting] = {key, &a};
    }
  }

  for (auto name : kSettingOrder) {
    auto it = winners.find(std::string(name));
    if (it != winners.end()) out.actions.push_back(*it->second.action);
  }
  for (const Action* a : flags) out.actions.push_back(*a);
  return out;
}

std::vector<Action> infer(const std::vector<Fact>& facts, const Rulebook& rules) {
  return infer_traced(facts, rules).actions;
}

LevelMix spread_levels(int n) {
  LevelMix mix{};
  for (int i = 0; i < n; ++i) ++mix[static_cast<std::size_t>(i % 3)];
  return mix;
}

std::vector<Fact> build_facts(const LearnerModel& model, const CoursePack& pack, const Concept& cpt,
                              PlanPhase phase) {
  std::vector<Fact> facts;
  facts.push_back({"phase", {std::string(to_string(phase))}});
  if (model.style_vector) {
    facts.push_back({"dominant_style", {dominant_style(*model.style_vector)}});
    for (auto s : kAllStyles) facts.push_back({"style_score", {s, (*model.style_vector)[s]}});
  }
  for (auto s : kAllStyles) facts.push_back({"effectiveness", {s, model.effectiveness[index_of(s)]}});

  const ConceptState& cs = model.progress(cpt.id);
  const auto prior = phase == PlanPhase::Gate ? cs.pre_band : cs.band;
  if (prior) facts.push_back({"prior_band", {cpt.id, *prior}});
  facts.push_back({"attempt_count", {cpt.id, static_cast<double>(cs.attempts)}});

  double sum = 0.0;
  int n = 0;
  for (const auto& [_, st] : model.concept_state) {
    if (st.score) {
      sum += *st.score;
      ++n;
    }
  }
  if (n > 0) facts.push_back({"overall_band", {band(sum / n)}});

  for (const auto& p : pack.prerequisites_of(cpt.id)) {
    const auto& ps = model.progress(p);
    if (ps.band) facts.push_back({"prereq_band", {p, *ps.band}});
  }
  for (const auto& tag : model.misconceptions) facts.push_back({"misconception", {tag}});
  return facts;
}

namespace {

std::optional<std::string> weakest_prerequisite(const LearnerModel& model, const CoursePack& pack,
                                                const Concept& cpt) {
  std::optional<std::string> best;
  KnowledgeBand best_band = KnowledgeBand::Excellent;
  for (const auto& p : pack.prerequisites_of(cpt.id)) {
    const auto& ps = model.progress(p);
    if (ps.closed || !ps.band || *ps.band >= pack.mastery_band) continue;
    if (!best || *ps.band < best_band) {
      best = p;
      best_band = *ps.band;
    }
  }
  return best;
}

}  // namespace

LessonPlan plan_concept(const LearnerModel& model, const CoursePack& pack, const Concept& cpt,
                        const Rulebook& rules, PlanPhase phase) {
  const auto facts = build_facts(model, pack, cpt, phase);
  const Inference inf = infer_traced(facts, rules);

  LessonPlan plan;
  plan.cpt = cpt.id;
  plan.fired_rules = inf.fired;
  std::map<TestPhase, int> counts;
  std::map<TestPhase, LevelMix> mixes;

  for (const auto& a : inf.actions) {
    std::visit(overloaded{[&](const action::SetVariant& x) {
                            plan.variant_style = x.style;
                            plan.variant_from_rule = true;
                          },
                          [&](const action::SetQuestionCount& x) { counts[x.phase] = x.count; },
                          [&](const action::SetLevelMix& x) { mixes[x.phase] = x.mix; },
                          [&](const action::SetFlow& x) {
                            plan.flow = x.flow;
                            plan.remediate_target = x.target;
                            plan.flow_from_rule = true;
                          },
                          [&](const action::SetHintBudget& x) { plan.hint_budget = x.count; },
                          [&](const action::FlagForTeacher& x) { plan.teacher_flags.push_back(x.reason); }},
               a);
  }

  // A level mix fixes its phase's question count; a bare count is spread.
  auto make_spec = [&](TestPhase p, const LevelMix& fallback) {
    TestSpec spec{p, 0, fallback};
    if (auto m = mixes.find(p); m != mixes.end()) {
      spec.level_mix = m->second;
    } else if (auto c = counts.find(p); c != counts.end()) {
      spec.level_mix = spread_levels(c->second);
    }
    spec.count = spec.level_mix[0] + spec.level_mix[1] + spec.level_mix[2];
    return spec;
  };
  plan.pretest = make_spec(TestPhase::PreTest, kDefaultPretestMix);
  plan.posttest = make_spec(TestPhase::PostTest, kDefaultPosttestMix);

  if (!plan.variant_from_rule) plan.variant_style = blend_argmax(model);

  // Try-and-error: after a failed attempt, never re-present the last variant
  // while an untried style remains.
  const ConceptState& cs = model.progress(cpt.id);
  if (cs.attempts > 0 && cs.last_variant && plan.variant_style == *cs.last_variant) {
    std::set<LearningStyle> untried;
    for (auto s : kAllStyles) {
      if (!cs.tried_variants.count(s)) untried.insert(s);
    }
    if (!untried.empty()) plan.variant_style = blend_argmax(model, untried);
  }

  if (plan.flow == Flow::Remediate) {
    std::optional<std::string> target;
    if (plan.remediate_target == kWeakestPrerequisite) {
      target = weakest_prerequisite(model, pack, cpt);
    } else if (pack.find_concept(plan.remediate_target) != nullptr && plan.remediate_target != cpt.id) {
      target = plan.remediate_target;
    }
    if (target) {
      plan.remediate_target = *target;
    } else {
      plan.flow = Flow::Present;
      plan.remediate_target.clear();
      plan.flow_from_rule = false;
    }
  }
  return plan;
}

nlohmann::json to_json(const LessonPlan& p) {
  return {{"concept", p.cpt},
          {"variant_style", to_string(p.variant_style)},
          {"pretest", to_json(p.pretest)},
          {"posttest", to_json(p.posttest)},
          {"flow", to_string(p.flow)},
          {"remediate_target", p.remediate_target},
          {"hint_budget", p.hint_budget},
          {"teacher_flags", p.teacher_flags},
          {"fired_rules", p.fired_rules},
          {"flow_from_rule", p.flow_from_rule},
          {"variant_from_rule", p.variant_from_rule}};
}

LessonPlan lesson_plan_from_json(const nlohmann::json& j) {
  LessonPlan p;
  p.cpt = j.at("concept").get<std::string>();
  p.variant_style = style_from_json(j.at("variant_style"));
  p.pretest = test_spec_from_json(j.at("pretest"));
  p.posttest = test_spec_from_json(j.at("posttest"));
  p.flow = parse_flow(j.at("flow").get<std::string>()).value_or(Flow::Present);
  p.remediate_target = j.at("remediate_target").get<std::string>();
  p.hint_budget = j.at("hint_budget").get<int>();
  p.teacher_flags = j.at("teacher_flags").get<std::vector<std::string>>();
  p.fired_rules = j.at("fired_rules").get<std::vector<std::string>>();
  p.flow_from_rule = j.at("flow_from_rule").get<bool>();
  p.variant_from_rule = j.at("variant_from_rule").get<bool>();
  return p;
}

}  // namespace adaptutor
