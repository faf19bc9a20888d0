#include "adaptutor/learner_model.hpp"

#include <algorithm>

#include "adaptutor/error.hpp"

namespace adaptutor {

namespace {

constexpr std::array<std::string_view, 5> kStateNames = {"AwaitingProfile", "ConceptPretest", "ConceptLearning",
                                                          "ConceptPosttest", "CourseComplete"};
constexpr std::array<std::string_view, 10> kEventNames = {
    "Profiled",     "PlanIssued",   "TestIssued",     "HintServed",    "TestGraded",
    "FlowDecided",  "ModelUpdated", "StateChanged",   "TeacherFlagged", "MessagePosted"};

template <typename T>
nlohmann::json opt(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::json opt_band(const std::optional<KnowledgeBand>& b) {
  return b ? nlohmann::json(to_string(*b)) : nlohmann::json(nullptr);
}

std::optional<KnowledgeBand> band_or_null(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  auto b = parse_band(j.get<std::string>());
  if (!b) throw Error(errc::kCorruptRecord, "unknown band in snapshot");
  return b;
}

std::optional<LearningStyle> style_or_null(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return style_from_json(j);
}

}  // namespace

std::string_view to_string(SessionState::Kind k) { return kStateNames[static_cast<std::size_t>(k)]; }

nlohmann::json to_json(const SessionState& s) {
  nlohmann::json j = {{"kind", to_string(s.kind)}};
  if (!s.cpt.empty()) j["concept"] = s.cpt;
  return j;
}

SessionState session_state_from_json(const nlohmann::json& j) {
  const auto name = j.at("kind").get<std::string>();
  auto it = std::find(kStateNames.begin(), kStateNames.end(), name);
  if (it == kStateNames.end()) throw Error(errc::kCorruptRecord, "unknown session state '" + name + "'");
  return {static_cast<SessionState::Kind>(it - kStateNames.begin()), j.value("concept", std::string{})};
}

bool is_legal_transition(const SessionState& from, const SessionState& to) {
  using K = SessionState::Kind;
  switch (from.kind) {
    case K::AwaitingProfile:
      return to.kind == K::ConceptPretest;
    case K::ConceptPretest:
      return (to.kind == K::ConceptLearning && to.cpt == from.cpt) ||
             (to.kind == K::ConceptPosttest && to.cpt == from.cpt) ||
             (to.kind == K::ConceptPretest && to.cpt != from.cpt);
    case K::ConceptLearning:
      return to.kind == K::ConceptPosttest && to.cpt == from.cpt;
    case K::ConceptPosttest:
      return to.kind == K::ConceptPretest || to.kind == K::CourseComplete;
    case K::CourseComplete:
      return false;
  }
  return false;
}

std::string_view to_string(EventKind k) { return kEventNames[static_cast<std::size_t>(k)]; }

std::optional<EventKind> parse_event_kind(std::string_view text) {
  auto it = std::find(kEventNames.begin(), kEventNames.end(), text);
  if (it == kEventNames.end()) return std::nullopt;
  return static_cast<EventKind>(it - kEventNames.begin());
}

nlohmann::json to_json(const Event& e) {
  return {{"seq", e.seq}, {"ts", e.timestamp}, {"kind", to_string(e.kind)}, {"payload", e.payload}};
}

Event event_from_json(const nlohmann::json& j) {
  Event e;
  try {
    e.seq = j.at("seq").get<std::uint64_t>();
    e.timestamp = j.at("ts").get<std::string>();
    auto k = parse_event_kind(j.at("kind").get<std::string>());
    if (!k) throw Error(errc::kCorruptRecord, "unknown event kind", {{"seq", e.seq}});
    e.kind = *k;
    e.payload = j.at("payload");
  } catch (const nlohmann::json::exception& ex) {
    throw Error(errc::kCorruptRecord, std::string("malformed event: ") + ex.what());
  }
  return e;
}

const ConceptState& LearnerModel::progress(const std::string& id) const {
  static const ConceptState kFresh;
  auto it = concept_state.find(id);
  return it == concept_state.end() ? kFresh : it->second;
}

nlohmann::json to_json(const LearnerModel& m, bool include_log) {
  nlohmann::json eff = nlohmann::json::object();
  for (auto s : kAllStyles) eff[std::string(to_string(s))] = m.effectiveness[index_of(s)];

  nlohmann::json concepts = nlohmann::json::object();
  for (const auto& [id, cs] : m.concept_state) {
    nlohmann::json tried = nlohmann::json::array();
    for (auto s : cs.tried_variants) tried.push_back(to_string(s));
    concepts[id] = {{"band", opt_band(cs.band)},
                    {"score", opt(cs.score)},
                    {"pre_band", opt_band(cs.pre_band)},
                    {"pre_score", opt(cs.pre_score)},
                    {"attempts", cs.attempts},
                    {"used_questions", cs.used_questions},
                    {"last_variant", cs.last_variant ? nlohmann::json(to_string(*cs.last_variant)) : nlohmann::json()},
                    {"tried_variants", tried},
                    {"closed", cs.closed}};
  }

  nlohmann::json active = nullptr;
  if (m.active_test) {
    const auto& t = *m.active_test;
    active = {{"test_id", t.test_id},
              {"concept", t.cpt},
              {"phase", to_string(t.phase)},
              {"instance", to_json(t.instance)},
              {"grading_style", to_string(t.grading_style)},
              {"hint_budget", t.hint_budget},
              {"hints_used", t.hints_used}};
  }

  nlohmann::json j = {
      {"learner_id", m.learner_id},
      {"style_vector", m.style_vector ? to_json(*m.style_vector) : nlohmann::json()},
      {"effectiveness", eff},
      {"concept_state", concepts},
      {"misconceptions", m.misconceptions},
      {"state", to_json(m.state)},
      {"current_plan", m.current_plan ? *m.current_plan : nlohmann::json()},
      {"current_variant", m.current_variant ? nlohmann::json(to_string(*m.current_variant)) : nlohmann::json()},
      {"active_test", active},
      {"tests_issued", m.tests_issued},
      {"event_count", m.event_log.size()},
  };
  if (include_log) {
    nlohmann::json log = nlohmann::json::array();
    for (const auto& e : m.event_log) log.push_back(to_json(e));
    j["event_log"] = log;
  }
  return j;
}

LearnerModel learner_model_from_json(const nlohmann::json& j) {
  LearnerModel m;
  try {
    m.learner_id = j.at("learner_id").get<std::string>();
    if (!j.at("style_vector").is_null()) m.style_vector = style_vector_from_json(j.at("style_vector"));
    for (auto s : kAllStyles) m.effectiveness[index_of(s)] = j.at("effectiveness").at(std::string(to_string(s))).get<double>();
    for (const auto& [id, c] : j.at("concept_state").items()) {
      ConceptState cs;
      cs.band = band_or_null(c.at("band"));
      if (!c.at("score").is_null()) cs.score = c.at("score").get<double>();
      cs.pre_band = band_or_null(c.at("pre_band"));
      if (!c.at("pre_score").is_null()) cs.pre_score = c.at("pre_score").get<double>();
      cs.attempts = c.at("attempts").get<int>();
      cs.used_questions = c.at("used_questions").get<std::set<std::string>>();
      cs.last_variant = style_or_null(c.at("last_variant"));
      for (const auto& s : c.at("tried_variants")) cs.tried_variants.insert(style_from_json(s));
      cs.closed = c.at("closed").get<bool>();
      m.concept_state[id] = std::move(cs);
    }
    m.misconceptions = j.at("misconceptions").get<std::set<std::string>>();
    m.state = session_state_from_json(j.at("state"));
    if (!j.at("current_plan").is_null()) m.current_plan = j.at("current_plan");
    m.current_variant = style_or_null(j.at("current_variant"));
    if (!j.at("active_test").is_null()) {
      const auto& t = j.at("active_test");
      ActiveTest a;
      a.test_id = t.at("test_id").get<std::string>();
      a.cpt = t.at("concept").get<std::string>();
      a.phase = *parse_phase(t.at("phase").get<std::string>());
      a.instance = test_instance_from_json(t.at("instance"));
      a.grading_style = style_from_json(t.at("grading_style"));
      a.hint_budget = t.at("hint_budget").get<int>();
      a.hints_used = t.at("hints_used").get<HintsUsed>();
      m.active_test = std::move(a);
    }
    m.tests_issued = j.at("tests_issued").get<std::uint64_t>();
    if (j.contains("event_log")) {
      for (const auto& e : j.at("event_log")) m.event_log.push_back(event_from_json(e));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(errc::kCorruptRecord, std::string("malformed learner snapshot: ") + ex.what());
  }
  return m;
}

PerStyle<double> blend_scores(const LearnerModel& m) {
  PerStyle<double> out{};
  for (auto s : kAllStyles) {
    const double profile = m.style_vector ? (*m.style_vector)[s] / 100.0 : 0.0;
    out[index_of(s)] = 0.5 * profile + 0.5 * m.effectiveness[index_of(s)];
  }
  return out;
}

LearningStyle blend_argmax(const LearnerModel& m, const std::set<LearningStyle>& allowed) {
  const auto b = blend_scores(m);
  std::optional<LearningStyle> best;
  for (auto s : kAllStyles) {
    if (!allowed.empty() && !allowed.count(s)) continue;
    if (!best || b[index_of(s)] > b[index_of(*best)]) best = s;
  }
  return *best;
}

}  // namespace adaptutor
