#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "adaptutor/assessment.hpp"
#include "adaptutor/content.hpp"
#include "adaptutor/learner_model.hpp"

namespace adaptutor {

// ---- facts ---------------------------------------------------------------

using Scalar = std::variant<double, std::string, LearningStyle, KnowledgeBand>;

struct Fact {
  std::string predicate;
  std::vector<Scalar> args;

  bool operator==(const Fact&) const = default;
};

/// Argument types of the closed fact vocabulary.
enum class ArgType { Number, Text, Style, Band };

struct PredicateSignature {
  std::string_view name;
  std::vector<ArgType> args;
};

/// dominant_style, style_score, effectiveness, prior_band, overall_band,
/// attempt_count, prereq_band, misconception, phase.
const std::vector<PredicateSignature>& fact_vocabulary();
const PredicateSignature* find_predicate(std::string_view name);

/// Planning phase reported through the `phase` fact: "pretest" when the
/// concept is planned, "gate" once the pre-test has been graded.
enum class PlanPhase { Pretest, Gate };
std::string_view to_string(PlanPhase p);

// ---- rules ---------------------------------------------------------------

enum class Comparator { Eq, Ne, Lt, Le, Gt, Ge };

/// Matches any fact with the condition's predicate whose leading arguments
/// equal the pattern (nullopt is a wildcard) and whose last argument satisfies
/// the comparator against the last pattern value.
struct Condition {
  std::string predicate;
  std::vector<std::optional<Scalar>> args;
  Comparator comparator = Comparator::Eq;

  bool operator==(const Condition&) const = default;
};

enum class Flow { Skip, Present, Repeat, Remediate, Remove };
std::string_view to_string(Flow f);
std::optional<Flow> parse_flow(std::string_view text);

/// Remediation target meaning "weakest prerequisite below mastery".
inline constexpr std::string_view kWeakestPrerequisite = "*";

namespace action {
struct SetVariant {
  LearningStyle style;
  bool operator==(const SetVariant&) const = default;
};
struct SetQuestionCount {
  TestPhase phase;
  int count;
  bool operator==(const SetQuestionCount&) const = default;
};
struct SetLevelMix {
  TestPhase phase;
  LevelMix mix;
  bool operator==(const SetLevelMix&) const = default;
};
struct SetFlow {
  Flow flow;
  std::string target;  // remediation concept or kWeakestPrerequisite
  bool operator==(const SetFlow&) const = default;
};
struct SetHintBudget {
  int count;
  bool operator==(const SetHintBudget&) const = default;
};
struct FlagForTeacher {
  std::string reason;
  bool operator==(const FlagForTeacher&) const = default;
};
}  // namespace action

using Action = std::variant<action::SetVariant, action::SetQuestionCount, action::SetLevelMix, action::SetFlow,
                            action::SetHintBudget, action::FlagForTeacher>;

/// The plan-setting an action writes, or nullopt for FlagForTeacher which
/// accumulates instead of competing.
std::optional<std::string> setting_of(const Action& a);

struct Rule {
  std::string id;
  int priority = 0;
  std::vector<Condition> conditions;
  std::vector<Action> actions;

  bool operator==(const Rule&) const = default;
};

struct Rulebook {
  std::string id;
  std::vector<Rule> rules;

  bool operator==(const Rulebook&) const = default;
};

Rulebook parse_rulebook(const nlohmann::json& doc);
nlohmann::json to_json(const Rulebook& rb);
nlohmann::json to_json(const Action& a);
nlohmann::json to_json(const Fact& f);

bool matches(const Condition& c, const Fact& f);
bool fires(const Rule& r, const std::vector<Fact>& facts);

struct Inference {
  std::vector<Action> actions;
  std::vector<std::string> fired;  // rule ids in rulebook order
  std::size_t evaluations = 0;     // rules evaluated
};

/// Single pass over the rulebook. Competing settings are won by higher
/// priority, then more conditions, then earlier position. Teacher flags from
/// every fired rule are kept, in rulebook order, after the settings.
Inference infer_traced(const std::vector<Fact>& facts, const Rulebook& rules);
std::vector<Action> infer(const std::vector<Fact>& facts, const Rulebook& rules);

// ---- planning ------------------------------------------------------------

struct LessonPlan {
  std::string cpt;
  LearningStyle variant_style = LearningStyle::SS;
  TestSpec pretest;
  TestSpec posttest;
  Flow flow = Flow::Present;
  std::string remediate_target;
  int hint_budget = 2;
  std::vector<std::string> teacher_flags;
  std::vector<std::string> fired_rules;
  /// Whether a rule, rather than a default, decided these settings.
  bool flow_from_rule = false;
  bool variant_from_rule = false;

  bool operator==(const LessonPlan&) const = default;
};

nlohmann::json to_json(const LessonPlan& p);
LessonPlan lesson_plan_from_json(const nlohmann::json& j);

inline constexpr LevelMix kDefaultPretestMix = {2, 1, 1};
inline constexpr LevelMix kDefaultPosttestMix = {2, 2, 2};
inline constexpr int kDefaultHintBudget = 2;

/// Spreads n questions over L1, L2, L3 round-robin starting at L1.
LevelMix spread_levels(int n);

std::vector<Fact> build_facts(const LearnerModel& model, const CoursePack& pack, const Concept& cpt,
                              PlanPhase phase);

/// Runs the rulebook over the learner's facts and fills every unset setting
/// with its default. Never fails.
LessonPlan plan_concept(const LearnerModel& model, const CoursePack& pack, const Concept& cpt,
                        const Rulebook& rules, PlanPhase phase = PlanPhase::Pretest);

}  // namespace adaptutor
