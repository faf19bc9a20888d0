#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "adaptutor/band.hpp"
#include "adaptutor/content.hpp"

namespace adaptutor {

enum class TestPhase { PreTest, PostTest };
std::string_view to_string(TestPhase p);
std::optional<TestPhase> parse_phase(std::string_view text);

/// Counts per difficulty level, indexed by Level.
using LevelMix = std::array<int, 3>;

struct TestSpec {
  TestPhase phase = TestPhase::PreTest;
  int count = 0;
  LevelMix level_mix{};

  bool operator==(const TestSpec&) const = default;
};

struct TestInstance {
  std::vector<std::string> questions;
  std::uint64_t seed = 0;

  bool operator==(const TestInstance&) const = default;
};

struct GradeReport {
  double raw_score = 0.0;
  KnowledgeBand band = KnowledgeBand::Weak;
  std::map<Dimension, double> per_dimension;
  std::map<std::string, double> per_section;
  std::vector<std::string> misconceptions;
  double hint_penalty_applied = 0.0;

  bool operator==(const GradeReport&) const = default;
};

using Answers = std::map<std::string, std::string>;
using HintsUsed = std::map<std::string, int>;

/// Fraction of a question's points removed per hint used.
inline constexpr double kHintPenalty = 0.2;

/// Picks `spec.count` unused questions that cover every section and match the
/// level mix exactly. Deterministic in `seed`. Throws Error(BankExhausted)
/// when no such set exists; constraints are never relaxed.
TestInstance select_questions(const Concept& cpt, const TestSpec& spec,
                              const std::set<std::string>& used, std::uint64_t seed);

/// Section-weighted grading under the learner's style.
GradeReport grade(const Concept& cpt, const TestInstance& instance, const Answers& answers,
                  LearningStyle style, const HintsUsed& hints_used = {});

nlohmann::json to_json(const TestSpec& spec);
TestSpec test_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TestInstance& t);
TestInstance test_instance_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GradeReport& r);
GradeReport grade_report_from_json(const nlohmann::json& j);

}  // namespace adaptutor
