#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "adaptutor/assessment.hpp"
#include "adaptutor/band.hpp"
#include "adaptutor/profiler.hpp"

namespace adaptutor {

struct SessionState {
  enum class Kind { AwaitingProfile, ConceptPretest, ConceptLearning, ConceptPosttest, CourseComplete };
  Kind kind = Kind::AwaitingProfile;
  std::string cpt;  // empty for AwaitingProfile and CourseComplete

  static SessionState awaiting_profile() { return {Kind::AwaitingProfile, {}}; }
  static SessionState pretest(std::string c) { return {Kind::ConceptPretest, std::move(c)}; }
  static SessionState learning(std::string c) { return {Kind::ConceptLearning, std::move(c)}; }
  static SessionState posttest(std::string c) { return {Kind::ConceptPosttest, std::move(c)}; }
  static SessionState complete() { return {Kind::CourseComplete, {}}; }

  bool operator==(const SessionState&) const = default;
};

std::string_view to_string(SessionState::Kind k);
nlohmann::json to_json(const SessionState& s);
SessionState session_state_from_json(const nlohmann::json& j);

/// Legal transitions of the per-concept loop.
bool is_legal_transition(const SessionState& from, const SessionState& to);

enum class EventKind {
  Profiled,
  PlanIssued,
  TestIssued,
  HintServed,
  TestGraded,
  FlowDecided,
  ModelUpdated,
  StateChanged,
  TeacherFlagged,
  MessagePosted,
};
std::string_view to_string(EventKind k);
std::optional<EventKind> parse_event_kind(std::string_view text);

struct Event {
  std::uint64_t seq = 0;
  std::string timestamp;
  EventKind kind = EventKind::Profiled;
  nlohmann::json payload;

  bool operator==(const Event&) const = default;
};

nlohmann::json to_json(const Event& e);
Event event_from_json(const nlohmann::json& j);

struct ConceptState {
  /// Mastery band from the last completed post-test (or a skip).
  std::optional<KnowledgeBand> band;
  std::optional<double> score;
  std::optional<KnowledgeBand> pre_band;
  std::optional<double> pre_score;
  int attempts = 0;  // failed post-tests
  std::set<std::string> used_questions;
  std::optional<LearningStyle> last_variant;
  std::set<LearningStyle> tried_variants;
  /// Skipped, removed or abandoned: no longer scheduled.
  bool closed = false;

  bool operator==(const ConceptState&) const = default;
};

/// A test handed to the learner and not yet graded.
struct ActiveTest {
  std::string test_id;
  std::string cpt;
  TestPhase phase = TestPhase::PreTest;
  TestInstance instance;
  LearningStyle grading_style = LearningStyle::SS;
  int hint_budget = 0;
  HintsUsed hints_used;

  bool operator==(const ActiveTest&) const = default;
};

struct LearnerModel {
  std::string learner_id;
  std::optional<StyleVector> style_vector;
  PerStyle<double> effectiveness{0.5, 0.5, 0.5, 0.5, 0.5};
  std::map<std::string, ConceptState> concept_state;
  std::set<std::string> misconceptions;
  SessionState state;
  /// Plan issued for the concept in progress (JSON form of LessonPlan).
  std::optional<nlohmann::json> current_plan;
  std::optional<LearningStyle> current_variant;
  std::optional<ActiveTest> active_test;
  std::uint64_t tests_issued = 0;
  std::vector<Event> event_log;

  const ConceptState& progress(const std::string& id) const;
  bool operator==(const LearnerModel&) const = default;
};

/// Snapshot document. The event log is omitted unless requested; it lives in
/// its own append-only file.
nlohmann::json to_json(const LearnerModel& m, bool include_log = false);
LearnerModel learner_model_from_json(const nlohmann::json& j);

/// Learning-rate of the effectiveness update.
inline constexpr double kModelerAlpha = 0.3;

/// blend(s) = 0.5 * style_vector[s] / 100 + 0.5 * effectiveness[s].
PerStyle<double> blend_scores(const LearnerModel& m);
/// Argmax of the blend over `allowed` styles, canonical order on ties.
LearningStyle blend_argmax(const LearnerModel& m, const std::set<LearningStyle>& allowed = {});

}  // namespace adaptutor
