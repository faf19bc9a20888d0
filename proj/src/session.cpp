#include "adaptutor/session.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <random>

#include "adaptutor/error.hpp"
#include "adaptutor/rng.hpp"

namespace adaptutor {

// ---- pure pieces ---------------------------------------------------------

GateDecision pretest_gate(const GradeReport& report, const std::vector<PrerequisiteStatus>& prerequisites,
                          KnowledgeBand mastery) {
  if (report.band == KnowledgeBand::Excellent) return {Flow::Skip, {}, false};
  if (report.band >= mastery) return {Flow::Present, {}, false};

  const PrerequisiteStatus* weakest = nullptr;
  for (const auto& p : prerequisites) {
    if (!p.band || *p.band >= mastery) continue;
    if (weakest == nullptr || *p.band < *weakest->band) weakest = &p;
  }
  if (weakest != nullptr) return {Flow::Remediate, weakest->cpt, false};
  return {Flow::Present, {}, true};
}

double updated_effectiveness(double current, double pre_score, double post_score, double alpha) {
  const double gain = std::clamp((post_score - pre_score) / 100.0, -1.0, 1.0);
  const double g = (gain + 1.0) / 2.0;
  return std::clamp((1.0 - alpha) * current + alpha * g, 0.0, 1.0);
}

namespace {

void check_score(double s, const char* which) {
  if (!(s >= 0.0 && s <= 100.0)) {
    throw Error(errc::kOutOfRange, std::string(which) + " must lie in [0, 100]", {{"score", which}});
  }
}

nlohmann::json model_update_payload(const std::string& cpt, LearningStyle style, double pre, double post,
                                    double before, double after) {
  return {{"concept", cpt},
          {"style", to_string(style)},
          {"pre_score", pre},
          {"post_score", post},
          {"gain", std::clamp((post - pre) / 100.0, -1.0, 1.0)},
          {"before", before},
          {"after", after}};
}

}  // namespace

LearnerModel modeler_update(const LearnerModel& model, const std::string& cpt, LearningStyle style,
                            double pre_score, double post_score, std::string timestamp) {
  check_score(pre_score, "pre_score");
  check_score(post_score, "post_score");
  LearnerModel out = model;
  const double before = out.effectiveness[index_of(style)];
  const double after = updated_effectiveness(before, pre_score, post_score);
  Event e{out.event_log.size() + 1, std::move(timestamp), EventKind::ModelUpdated,
          model_update_payload(cpt, style, pre_score, post_score, before, after)};
  apply_event(out, e);
  out.event_log.push_back(std::move(e));
  return out;
}

std::string utc_now() {
  using namespace std::chrono;
  const auto now = system_clock::now();
  const auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
  const std::time_t t = system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

// ---- reducer -------------------------------------------------------------

void apply_event(LearnerModel& m, const Event& e) {
  const auto& p = e.payload;
  switch (e.kind) {
    case EventKind::Profiled:
      m.style_vector = style_vector_from_json(p.at("style_vector"));
      break;
    case EventKind::PlanIssued:
      if (p.at("phase") == "pretest") m.current_plan = p.at("plan");
      break;
    case EventKind::TestIssued: {
      ActiveTest t;
      t.test_id = p.at("test_id").get<std::string>();
      t.cpt = p.at("concept").get<std::string>();
      t.phase = *parse_phase(p.at("phase").get<std::string>());
      t.instance = {p.at("questions").get<std::vector<std::string>>(), p.at("seed").get<std::uint64_t>()};
      t.grading_style = style_from_json(p.at("grading_style"));
      t.hint_budget = p.at("hint_budget").get<int>();
      auto& cs = m.concept_state[t.cpt];
      cs.used_questions.insert(t.instance.questions.begin(), t.instance.questions.end());
      m.active_test = std::move(t);
      ++m.tests_issued;
      break;
    }
    case EventKind::HintServed:
      if (m.active_test) ++m.active_test->hints_used[p.at("question").get<std::string>()];
      break;
    case EventKind::TestGraded: {
      const auto report = grade_report_from_json(p.at("report"));
      auto& cs = m.concept_state[p.at("concept").get<std::string>()];
      m.misconceptions.insert(report.misconceptions.begin(), report.misconceptions.end());
      if (*parse_phase(p.at("phase").get<std::string>()) == TestPhase::PreTest) {
        cs.pre_score = report.raw_score;
        cs.pre_band = report.band;
      } else {
        cs.score = report.raw_score;
        cs.band = report.band;
        if (!p.at("passed").get<bool>()) ++cs.attempts;
      }
      m.active_test.reset();
      break;
    }
    case EventKind::FlowDecided: {
      auto& cs = m.concept_state[p.at("concept").get<std::string>()];
      const auto flow = *parse_flow(p.at("flow").get<std::string>());
      if (flow == Flow::Present || flow == Flow::Repeat) {
        const auto v = style_from_json(p.at("variant"));
        m.current_variant = v;
        cs.last_variant = v;
        cs.tried_variants.insert(v);
      } else if (flow == Flow::Skip) {
        cs.band = cs.pre_band;
        cs.score = cs.pre_score;
        cs.closed = true;
      } else if (flow == Flow::Remove) {
        cs.closed = true;
      }
      break;
    }
    case EventKind::ModelUpdated:
      m.effectiveness[index_of(style_from_json(p.at("style")))] = p.at("after").get<double>();
      break;
    case EventKind::StateChanged: {
      m.state = session_state_from_json(p.at("to"));
      using K = SessionState::Kind;
      if (m.state.kind == K::ConceptPretest || m.state.kind == K::CourseComplete) {
        m.current_plan.reset();
        m.current_variant.reset();
      }
      break;
    }
    case EventKind::TeacherFlagged:
    case EventKind::MessagePosted:
      break;
  }
}

// ---- engine --------------------------------------------------------------

struct Tutor::Ctx {
  LearnerModel& model;
  const Clock& clock;
  std::optional<std::uint64_t> seed;

  void emit(EventKind kind, nlohmann::json payload) {
    Event e{model.event_log.size() + 1, clock(), kind, std::move(payload)};
    apply_event(model, e);
    model.event_log.push_back(std::move(e));
  }
};

template <typename F>
auto Tutor::transact(LearnerModel& model, F&& op, const Clock* clock, std::optional<std::uint64_t> seed) const {
  LearnerModel work = model;
  const std::size_t before = work.event_log.size();
  Ctx ctx{work, clock != nullptr ? *clock : clock_, seed};
  auto result = op(ctx);
  if (sink_ && clock == nullptr) sink_(work, std::span<const Event>(work.event_log).subspan(before));
  model = std::move(work);
  return result;
}

Tutor::Tutor(std::shared_ptr<const CoursePack> pack, std::shared_ptr<const Rulebook> rules,
             std::shared_ptr<const Instrument> instrument, SessionConfig config)
    : pack_(std::move(pack)),
      rules_(std::move(rules)),
      instrument_(std::move(instrument)),
      config_(config),
      order_(pack_->topological_order()),
      clock_(utc_now) {}

LearnerModel Tutor::new_learner(std::string learner_id) const {
  LearnerModel m;
  m.learner_id = std::move(learner_id);
  return m;
}

const Concept& Tutor::concept_or_throw(const std::string& cpt) const {
  const Concept* c = pack_->find_concept(cpt);
  if (c == nullptr) throw Error(errc::kUnknownConcept, "unknown concept '" + cpt + "'", {{"concept", cpt}});
  return *c;
}

SessionState Tutor::next_state(const LearnerModel& model) const {
  if (!model.style_vector) return SessionState::awaiting_profile();
  for (const auto& id : order_) {
    const auto& cs = model.progress(id);
    const bool mastered = cs.band && *cs.band >= pack_->mastery_band;
    if (!cs.closed && !mastered) return SessionState::pretest(id);
  }
  return SessionState::complete();
}

SessionState Tutor::start_session(const LearnerModel& model, std::string_view pack_id) const {
  if (pack_id != pack_->id) {
    throw Error(errc::kUnknownPack, "pack '" + std::string(pack_id) + "' is not loaded", {{"pack", pack_id}});
  }
  return start_session(model);
}

SessionState Tutor::start_session(const LearnerModel& model) const {
  if (!model.style_vector) return SessionState::awaiting_profile();
  if (model.state.kind != SessionState::Kind::AwaitingProfile) return model.state;
  return next_state(model);
}

LessonPlan Tutor::plan(const LearnerModel& model, const Concept& cpt, PlanPhase phase) const {
  LessonPlan p = plan_concept(model, *pack_, cpt, *rules_, phase);
  if (policy_) {
    if (auto v = policy_(model, cpt)) p.variant_style = *v;
  }
  return p;
}

std::uint64_t Tutor::selection_seed(const LearnerModel& model, const std::string& cpt, TestPhase phase) const {
  if (!config_.reproducible) {
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }
  std::uint64_t h = fnv1a(std::to_string(config_.base_seed));
  h = fnv1a(model.learner_id, h);
  h = fnv1a("/" + cpt, h);
  h = fnv1a("/" + std::to_string(model.progress(cpt).attempts), h);
  return fnv1a("/" + std::string(to_string(phase)), h);
}

void Tutor::transition(Ctx& ctx, SessionState to) const {
  const SessionState from = ctx.model.state;
  if (!is_legal_transition(from, to)) {
    throw Error(errc::kInvalidState, "illegal transition " + std::string(to_string(from.kind)) + " -> " +
                                         std::string(to_string(to.kind)),
                {{"from", to_json(from)}, {"to", to_json(to)}});
  }
  ctx.emit(EventKind::StateChanged, {{"from", to_json(from)}, {"to", to_json(to)}});
}

namespace {

[[noreturn]] void invalid_state(const SessionState& s, const std::string& what) {
  throw Error(errc::kInvalidState, what + " is not allowed in state " + std::string(to_string(s.kind)),
              {{"state", to_json(s)}});
}

}  // namespace

SessionState Tutor::do_submit_profile(Ctx& ctx, const Responses& responses) const {
  if (ctx.model.style_vector || ctx.model.state.kind != SessionState::Kind::AwaitingProfile) {
    invalid_state(ctx.model.state, "profiling");
  }
  const StyleVector v = score_questionnaire(*instrument_, responses);
  ctx.emit(EventKind::Profiled,
           {{"responses", responses}, {"style_vector", to_json(v)}, {"dominant", to_string(dominant_style(v))}});
  transition(ctx, next_state(ctx.model));
  return ctx.model.state;
}

IssuedTest Tutor::do_issue(Ctx& ctx, const std::string& concept_id, TestPhase phase) const {
  LearnerModel& m = ctx.model;
  const Concept& cpt = concept_or_throw(concept_id);
  const bool pre = phase == TestPhase::PreTest;

  // Re-issuing the outstanding test is a no-op.
  if (m.active_test && m.active_test->cpt == concept_id && m.active_test->phase == phase) {
    const auto& t = *m.active_test;
    return {t.test_id, t.cpt, t.phase, t.instance, t.hint_budget};
  }
  const auto required = pre ? SessionState::pretest(concept_id) : SessionState::learning(concept_id);
  if (m.state != required) invalid_state(m.state, std::string(pre ? "pre" : "post") + "-test for '" + concept_id + "'");

  LessonPlan lp;
  if (pre) {
    lp = plan(m, cpt, PlanPhase::Pretest);
  } else {
    lp = lesson_plan_from_json(*m.current_plan);
  }
  const TestSpec& spec = pre ? lp.pretest : lp.posttest;
  const std::uint64_t seed = ctx.seed ? *ctx.seed : selection_seed(m, concept_id, phase);
  const TestInstance instance = select_questions(cpt, spec, m.progress(concept_id).used_questions, seed);
  const LearningStyle grading_style = pre ? lp.variant_style : m.current_variant.value_or(lp.variant_style);

  if (pre) {
    ctx.emit(EventKind::PlanIssued, {{"concept", concept_id}, {"phase", "pretest"}, {"plan", to_json(lp)}});
    for (const auto& reason : lp.teacher_flags) {
      ctx.emit(EventKind::TeacherFlagged,
               {{"concept", concept_id}, {"reason", reason}, {"attempts", m.progress(concept_id).attempts}});
    }
  }
  IssuedTest out{"t" + std::to_string(m.tests_issued + 1), concept_id, phase, instance, lp.hint_budget};
  ctx.emit(EventKind::TestIssued, {{"test_id", out.test_id},
                                   {"concept", concept_id},
                                   {"phase", to_string(phase)},
                                   {"seed", seed},
                                   {"questions", instance.questions},
                                   {"hint_budget", out.hint_budget},
                                   {"grading_style", to_string(grading_style)}});
  if (!pre) transition(ctx, SessionState::posttest(concept_id));
  return out;
}

std::string Tutor::do_hint(Ctx& ctx, const std::string& test_id, const std::string& question) const {
  const LearnerModel& m = ctx.model;
  if (!m.active_test || m.active_test->test_id != test_id) {
    throw Error(errc::kUnknownTest, "no open test '" + test_id + "'", {{"test", test_id}});
  }
  const ActiveTest& t = *m.active_test;
  const auto& qs = t.instance.questions;
  if (std::find(qs.begin(), qs.end(), question) == qs.end()) {
    throw Error(errc::kUnknownQuestion, "question '" + question + "' is not part of test '" + test_id + "'",
                {{"test", test_id}, {"question", question}});
  }
  int spent = 0;
  for (const auto& [_, n] : t.hints_used) spent += n;
  if (spent >= t.hint_budget) {
    throw Error(errc::kHintBudgetExhausted, "hint budget of this test is used up",
                {{"test", test_id}, {"budget", t.hint_budget}});
  }
  const Question& q = *concept_or_throw(t.cpt).find_question(question);
  auto it = t.hints_used.find(question);
  const int index = it == t.hints_used.end() ? 0 : it->second;
  if (static_cast<std::size_t>(index) >= q.hints.size()) {
    throw Error(errc::kNoMoreHints, "question '" + question + "' has no further hints", {{"question", question}});
  }
  const std::string hint = q.hints[static_cast<std::size_t>(index)];
  ctx.emit(EventKind::HintServed, {{"test_id", test_id}, {"question", question}, {"index", index}, {"hint", hint}});
  return hint;
}

SubmitResult Tutor::do_submit(Ctx& ctx, const std::string& test_id, const Answers& answers) const {
  LearnerModel& m = ctx.model;
  if (!m.active_test || m.active_test->test_id != test_id) {
    throw Error(errc::kUnknownTest, "no open test '" + test_id + "'", {{"test", test_id}});
  }
  const ActiveTest test = *m.active_test;
  const Concept& cpt = concept_or_throw(test.cpt);
  const GradeReport report = grade(cpt, test.instance, answers, test.grading_style, test.hints_used);
  const bool pre = test.phase == TestPhase::PreTest;
  const bool passed = report.band >= pack_->mastery_band;

  ctx.emit(EventKind::TestGraded, {{"test_id", test_id},
                                   {"concept", test.cpt},
                                   {"phase", to_string(test.phase)},
                                   {"answers", answers},
                                   {"hints_used", test.hints_used},
                                   {"report", to_json(report)},
                                   {"passed", passed}});
  SubmitResult result{report, m.state, std::nullopt};

  if (pre) {
    const LessonPlan gate = plan(m, cpt, PlanPhase::Gate);
    ctx.emit(EventKind::PlanIssued, {{"concept", test.cpt}, {"phase", "gate"}, {"plan", to_json(gate)}});

    GateDecision d;
    std::string source = "rule";
    if (gate.flow_from_rule) {
      d = {gate.flow, gate.remediate_target, false};
    } else {
      std::vector<PrerequisiteStatus> prereqs;
      for (const auto& p : pack_->prerequisites_of(test.cpt)) {
        const auto& ps = m.progress(p);
        if (!ps.closed) prereqs.push_back({p, ps.band});
      }
      d = pretest_gate(report, prereqs, pack_->mastery_band);
      source = "default";
    }

    nlohmann::json variant = nullptr;
    if (d.flow == Flow::Present || d.flow == Flow::Repeat) {
      const auto& cs = m.progress(test.cpt);
      LearningStyle v = lesson_plan_from_json(*m.current_plan).variant_style;
      if (gate.variant_from_rule) v = gate.variant_style;
      if (d.flow == Flow::Repeat && cs.last_variant) v = *cs.last_variant;
      if (d.force_untried_variant && cs.tried_variants.count(v)) {
        std::set<LearningStyle> untried;
        for (auto s : kAllStyles) {
          if (!cs.tried_variants.count(s)) untried.insert(s);
        }
        if (!untried.empty()) v = blend_argmax(m, untried);
      }
      if (policy_) {
        if (auto forced = policy_(m, cpt)) v = *forced;
      }
      variant = to_string(v);
    }
    ctx.emit(EventKind::FlowDecided, {{"concept", test.cpt},
                                      {"flow", to_string(d.flow)},
                                      {"target", d.target},
                                      {"variant", variant},
                                      {"source", source}});
    result.flow = d.flow;
    switch (d.flow) {
      case Flow::Present:
      case Flow::Repeat:
        transition(ctx, SessionState::learning(test.cpt));
        break;
      case Flow::Skip:
      case Flow::Remove:
        transition(ctx, SessionState::posttest(test.cpt));
        transition(ctx, next_state(m));
        break;
      case Flow::Remediate:
        transition(ctx, SessionState::pretest(d.target));
        break;
    }
  } else {
    const auto& cs = m.progress(test.cpt);
    const LearningStyle v = m.current_variant.value_or(test.grading_style);
    const double pre_score = cs.pre_score.value_or(0.0);
    const double before = m.effectiveness[index_of(v)];
    const double after = updated_effectiveness(before, pre_score, report.raw_score);
    ctx.emit(EventKind::ModelUpdated,
             model_update_payload(test.cpt, v, pre_score, report.raw_score, before, after));

    if (passed) {
      transition(ctx, next_state(m));
    } else {
      const int attempts = m.progress(test.cpt).attempts;
      if (attempts >= config_.teacher_flag_after) {
        ctx.emit(EventKind::TeacherFlagged,
                 {{"concept", test.cpt}, {"reason", "repeated post-test failure"}, {"attempts", attempts}});
      }
      if (config_.give_up_after > 0 && attempts >= config_.give_up_after) {
        ctx.emit(EventKind::FlowDecided, {{"concept", test.cpt},
                                          {"flow", to_string(Flow::Remove)},
                                          {"target", ""},
                                          {"variant", nullptr},
                                          {"source", "attempt-limit"}});
        transition(ctx, next_state(m));
      } else {
        transition(ctx, SessionState::pretest(test.cpt));
      }
    }
  }
  result.state = m.state;
  return result;
}

void Tutor::do_annotate(Ctx& ctx, const nlohmann::json& message) const {
  ctx.emit(EventKind::MessagePosted, {{"message", message}});
}

SessionState Tutor::submit_profile(LearnerModel& model, const Responses& responses) const {
  return transact(model, [&](Ctx& ctx) { return do_submit_profile(ctx, responses); }, nullptr, std::nullopt);
}

IssuedTest Tutor::issue_pretest(LearnerModel& model, const std::string& cpt) const {
  return transact(model, [&](Ctx& ctx) { return do_issue(ctx, cpt, TestPhase::PreTest); }, nullptr, std::nullopt);
}

IssuedTest Tutor::issue_posttest(LearnerModel& model, const std::string& cpt) const {
  return transact(model, [&](Ctx& ctx) { return do_issue(ctx, cpt, TestPhase::PostTest); }, nullptr, std::nullopt);
}

std::string Tutor::request_hint(LearnerModel& model, const std::string& test_id, const std::string& question) const {
  return transact(model, [&](Ctx& ctx) { return do_hint(ctx, test_id, question); }, nullptr, std::nullopt);
}

SubmitResult Tutor::submit_answers(LearnerModel& model, const std::string& test_id, const Answers& answers) const {
  return transact(model, [&](Ctx& ctx) { return do_submit(ctx, test_id, answers); }, nullptr, std::nullopt);
}

void Tutor::annotate(LearnerModel& model, const nlohmann::json& message) const {
  transact(
      model,
      [&](Ctx& ctx) {
        do_annotate(ctx, message);
        return 0;
      },
      nullptr, std::nullopt);
}

const ContentVariant& Tutor::content(const LearnerModel& model, const std::string& concept_id) const {
  const Concept& c = concept_or_throw(concept_id);
  using K = SessionState::Kind;
  const bool current = (model.state.kind == K::ConceptLearning || model.state.kind == K::ConceptPosttest) &&
                       model.state.cpt == concept_id;
  if (current && model.current_variant) return c.variant(*model.current_variant);
  if (const auto& cs = model.progress(concept_id); cs.last_variant) return c.variant(*cs.last_variant);
  throw Error(errc::kInvalidState, "concept '" + concept_id + "' has not been presented yet",
              {{"concept", concept_id}, {"state", to_json(model.state)}});
}

LearnerModel Tutor::replay(const std::string& learner_id, const std::vector<Event>& log) const {
  LearnerModel m = new_learner(learner_id);
  std::size_t i = 0;
  while (i < log.size()) {
    const Event& head = log[i];
    std::size_t cursor = i;
    Clock clock = [&log, &cursor]() {
      if (cursor >= log.size()) return std::string{};
      return log[cursor++].timestamp;
    };
    const auto& p = head.payload;
    try {
      switch (head.kind) {
        case EventKind::Profiled:
          transact(m, [&](Ctx& ctx) { return do_submit_profile(ctx, p.at("responses").get<Responses>()); }, &clock,
                   std::nullopt);
          break;
        case EventKind::PlanIssued: {
          if (p.at("phase") != "pretest") throw Error(errc::kReplayDivergence, "gate plan outside a test submission");
          std::optional<std::uint64_t> seed;
          for (std::size_t k = i + 1; k < log.size(); ++k) {
            if (log[k].kind == EventKind::TestIssued) {
              seed = log[k].payload.at("seed").get<std::uint64_t>();
              break;
            }
          }
          const auto cpt = p.at("concept").get<std::string>();
          transact(m, [&](Ctx& ctx) { return do_issue(ctx, cpt, TestPhase::PreTest); }, &clock, seed);
          break;
        }
        case EventKind::TestIssued: {
          const auto cpt = p.at("concept").get<std::string>();
          transact(m, [&](Ctx& ctx) { return do_issue(ctx, cpt, TestPhase::PostTest); }, &clock,
                   p.at("seed").get<std::uint64_t>());
          break;
        }
        case EventKind::HintServed:
          transact(
              m,
              [&](Ctx& ctx) {
                return do_hint(ctx, p.at("test_id").get<std::string>(), p.at("question").get<std::string>());
              },
              &clock, std::nullopt);
          break;
        case EventKind::TestGraded:
          transact(
              m,
              [&](Ctx& ctx) {
                return do_submit(ctx, p.at("test_id").get<std::string>(), p.at("answers").get<Answers>());
              },
              &clock, std::nullopt);
          break;
        case EventKind::MessagePosted:
          transact(
              m,
              [&](Ctx& ctx) {
                do_annotate(ctx, p.at("message"));
                return 0;
              },
              &clock, std::nullopt);
          break;
        default:
          throw Error(errc::kReplayDivergence, "event does not start a command", {{"seq", head.seq}});
      }
    } catch (const Error& e) {
      if (e.code() == errc::kReplayDivergence) throw;
      throw Error(errc::kReplayDivergence, "replayed command failed: " + std::string(e.what()),
                  {{"seq", head.seq}, {"cause", e.code()}});
    }

    if (m.event_log.size() <= i || m.event_log.size() > log.size()) {
      throw Error(errc::kReplayDivergence, "replayed command produced a different number of events", {{"seq", head.seq}});
    }
    for (std::size_t k = i; k < m.event_log.size(); ++k) {
      const Event& got = m.event_log[k];
      const Event& want = log[k];
      if (got.seq != want.seq || got.kind != want.kind || got.payload != want.payload) {
        throw Error(errc::kReplayDivergence, "replayed event differs from the record",
                    {{"seq", want.seq}, {"expected", to_json(want)}, {"actual", to_json(got)}});
      }
    }
    i = m.event_log.size();
  }
  return m;
}

}  // namespace adaptutor
