#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adaptutor/assessment.hpp"
#include "adaptutor/content.hpp"
#include "adaptutor/expert.hpp"
#include "adaptutor/learner_model.hpp"
#include "adaptutor/profiler.hpp"

namespace adaptutor {

// ---- pure pieces ---------------------------------------------------------

struct PrerequisiteStatus {
  std::string cpt;
  std::optional<KnowledgeBand> band;
};

struct GateDecision {
  Flow flow = Flow::Present;
  std::string target;  // remediation concept
  /// Present with a style the learner has not been shown yet.
  bool force_untried_variant = false;

  bool operator==(const GateDecision&) const = default;
};

/// Default routing after a graded pre-test: Excellent skips, a band at or
/// above `mastery` presents, anything lower remediates the weakest
/// prerequisite below `mastery` or, failing one, presents an untried variant.
GateDecision pretest_gate(const GradeReport& report, const std::vector<PrerequisiteStatus>& prerequisites,
                          KnowledgeBand mastery = KnowledgeBand::Good);

/// Exponential moving average toward the normalized gain
/// g = (clamp((post - pre) / 100, -1, 1) + 1) / 2.
double updated_effectiveness(double current, double pre_score, double post_score, double alpha = kModelerAlpha);

/// Updates effectiveness[style] and appends a ModelUpdated event.
/// Throws Error(OutOfRange) for scores outside [0, 100].
LearnerModel modeler_update(const LearnerModel& model, const std::string& cpt, LearningStyle style,
                            double pre_score, double post_score, std::string timestamp = {});

// ---- the engine ----------------------------------------------------------

struct SessionConfig {
  int teacher_flag_after = 3;
  /// Close a concept after this many failed post-tests; 0 keeps looping.
  int give_up_after = 0;
  /// Derive selection seeds from (learner, concept, attempt, phase).
  bool reproducible = true;
  std::uint64_t base_seed = 0;
};

struct IssuedTest {
  std::string test_id;
  std::string cpt;
  TestPhase phase = TestPhase::PreTest;
  TestInstance instance;
  int hint_budget = 0;
};

struct SubmitResult {
  GradeReport report;
  SessionState state;
  std::optional<Flow> flow;  // set after a pre-test
};

/// Stateless driver of the pre-test / learning / post-test loop. Every
/// operation mutates the learner model only through logged events, and only
/// when it succeeds as a whole.
class Tutor {
 public:
  using Clock = std::function<std::string()>;
  /// Replaces the planned variant (used by experiment policies).
  using VariantPolicy = std::function<std::optional<LearningStyle>(const LearnerModel&, const Concept&)>;
  /// Called with the new events of a successful operation before they are
  /// committed to the in-memory model; throwing aborts the operation.
  using EventSink = std::function<void(const LearnerModel&, std::span<const Event>)>;

  Tutor(std::shared_ptr<const CoursePack> pack, std::shared_ptr<const Rulebook> rules,
        std::shared_ptr<const Instrument> instrument, SessionConfig config = {});

  const CoursePack& pack() const { return *pack_; }
  const Rulebook& rules() const { return *rules_; }
  const Instrument& instrument() const { return *instrument_; }
  const SessionConfig& config() const { return config_; }

  void set_clock(Clock clock) { clock_ = std::move(clock); }
  void set_variant_policy(VariantPolicy policy) { policy_ = std::move(policy); }
  void set_event_sink(EventSink sink) { sink_ = std::move(sink); }

  LearnerModel new_learner(std::string learner_id) const;

  /// Current state; throws Error(UnknownPack) when `pack_id` is not loaded.
  SessionState start_session(const LearnerModel& model, std::string_view pack_id) const;
  SessionState start_session(const LearnerModel& model) const;

  SessionState submit_profile(LearnerModel& model, const Responses& responses) const;
  IssuedTest issue_pretest(LearnerModel& model, const std::string& cpt) const;
  IssuedTest issue_posttest(LearnerModel& model, const std::string& cpt) const;
  std::string request_hint(LearnerModel& model, const std::string& test_id, const std::string& question) const;
  SubmitResult submit_answers(LearnerModel& model, const std::string& test_id, const Answers& answers) const;
  /// Records a teacher message addressed to the learner model.
  void annotate(LearnerModel& model, const nlohmann::json& message) const;

  const ContentVariant& content(const LearnerModel& model, const std::string& cpt) const;
  const Concept& concept_or_throw(const std::string& cpt) const;

  /// Rebuilds a learner by re-running every recorded command with the
  /// recorded inputs, seeds and timestamps. Throws Error(ReplayDivergence)
  /// when the regenerated events differ from the log.
  LearnerModel replay(const std::string& learner_id, const std::vector<Event>& log) const;

  /// First unmastered, open concept in prerequisite order.
  SessionState next_state(const LearnerModel& model) const;

 private:
  struct Ctx;

  template <typename F>
  auto transact(LearnerModel& model, F&& op, const Clock* clock, std::optional<std::uint64_t> seed) const;

  SessionState do_submit_profile(Ctx& ctx, const Responses& responses) const;
  IssuedTest do_issue(Ctx& ctx, const std::string& cpt, TestPhase phase) const;
  std::string do_hint(Ctx& ctx, const std::string& test_id, const std::string& question) const;
  SubmitResult do_submit(Ctx& ctx, const std::string& test_id, const Answers& answers) const;
  void do_annotate(Ctx& ctx, const nlohmann::json& message) const;

  LessonPlan plan(const LearnerModel& model, const Concept& cpt, PlanPhase phase) const;
  std::uint64_t selection_seed(const LearnerModel& model, const std::string& cpt, TestPhase phase) const;
  void transition(Ctx& ctx, SessionState to) const;

  std::shared_ptr<const CoursePack> pack_;
  std::shared_ptr<const Rulebook> rules_;
  std::shared_ptr<const Instrument> instrument_;
  SessionConfig config_;
  std::vector<std::string> order_;
  Clock clock_;
  VariantPolicy policy_;
  EventSink sink_;
};

/// Applies one event's recorded outcome to the model. The only mutator of
/// LearnerModel state besides construction.
void apply_event(LearnerModel& model, const Event& event);

/// UTC wall clock in ISO-8601 with milliseconds.
std::string utc_now();

}  // namespace adaptutor
