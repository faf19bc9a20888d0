#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "adaptutor/band.hpp"
#include "adaptutor/profiler.hpp"

namespace adaptutor {

enum class Level { L1 = 0, L2 = 1, L3 = 2 };
inline constexpr std::array<Level, 3> kAllLevels = {Level::L1, Level::L2, Level::L3};
constexpr std::size_t index_of(Level l) { return static_cast<std::size_t>(l); }
std::string_view to_string(Level l);
std::optional<Level> parse_level(std::string_view text);

enum class Dimension { Conceptual, Objective };
std::string_view to_string(Dimension d);
std::optional<Dimension> parse_dimension(std::string_view text);

struct Choice {
  std::string id;
  std::string body;
  bool correct = false;
  std::optional<std::string> misconception_tag;

  bool operator==(const Choice&) const = default;
};

struct Question {
  std::string id;
  std::string section;
  Level level = Level::L1;
  Dimension dimension = Dimension::Conceptual;
  double points = 1.0;
  std::string body;
  std::vector<Choice> choices;
  std::vector<std::string> hints;

  const Choice* find_choice(std::string_view choice_id) const;
  bool operator==(const Question&) const = default;
};

struct Section {
  std::string id;
  std::string title;
  PerStyle<double> weights{};

  double weight(LearningStyle s) const { return weights[index_of(s)]; }
  bool operator==(const Section&) const = default;
};

enum class BlockKind { Text, ImageRef, VideoRef, Exercise };
std::string_view to_string(BlockKind k);

struct Block {
  BlockKind kind = BlockKind::Text;
  std::string body;
  /// Concept ids of this pack, or external URLs.
  std::vector<std::string> links;

  bool operator==(const Block&) const = default;
};

struct ContentVariant {
  LearningStyle style = LearningStyle::SS;
  std::vector<Block> blocks;

  bool operator==(const ContentVariant&) const = default;
};

/// The atomic unit of sequencing. The engine never subdivides a concept.
struct Concept {
  std::string id;
  std::string title;
  std::vector<Section> sections;
  std::string key_section;
  PerStyle<ContentVariant> variants{};
  std::vector<Question> questions;

  const Section* find_section(std::string_view section_id) const;
  const Question* find_question(std::string_view question_id) const;
  const ContentVariant& variant(LearningStyle s) const { return variants[index_of(s)]; }
  bool operator==(const Concept&) const = default;
};

struct CoursePack {
  std::string id;
  std::string title;
  std::vector<Concept> concepts;
  std::map<std::string, std::vector<std::string>> prerequisites;
  /// Lowest band that counts as mastered.
  KnowledgeBand mastery_band = KnowledgeBand::Good;

  const Concept* find_concept(std::string_view concept_id) const;
  const std::vector<std::string>& prerequisites_of(std::string_view concept_id) const;
  /// Prerequisite-respecting order; ties resolved by declaration order.
  std::vector<std::string> topological_order() const;
  bool operator==(const CoursePack&) const = default;
};

/// True when the link names an external resource rather than a concept id.
bool is_external_link(std::string_view link);

/// Parses a course-pack document and checks every structural invariant.
/// The first violated invariant is reported as an Error naming the entity.
CoursePack load_course_pack(const nlohmann::json& doc);
nlohmann::json to_json(const CoursePack& pack);

using WeightTable = std::map<std::pair<std::string, LearningStyle>, double>;
WeightTable section_weight_table(const Concept& c);

}  // namespace adaptutor
