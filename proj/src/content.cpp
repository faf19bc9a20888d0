#include "adaptutor/content.hpp"

#include <algorithm>
#include <set>

#include "adaptutor/error.hpp"

namespace adaptutor {

namespace {

constexpr std::array<std::string_view, 3> kLevelNames = {"L1", "L2", "L3"};
constexpr std::array<std::string_view, 4> kBlockNames = {"text", "image-ref", "video-ref", "exercise"};

const nlohmann::json& require(const nlohmann::json& j, const char* key, std::string_view where) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(errc::kMalformedDocument, std::string(where) + ": missing field '" + key + "'",
                {{"field", key}, {"at", where}});
  }
  return j.at(key);
}

Section parse_section(const nlohmann::json& j) {
  Section s;
  s.id = require(j, "id", "section").get<std::string>();
  s.title = j.value("title", std::string{});
  const auto& w = require(j, "weights", "section " + s.id);
  for (auto style : kAllStyles) {
    const auto key = std::string(to_string(style));
    if (!w.contains(key)) {
      throw Error(errc::kMalformedDocument, "section '" + s.id + "' has no weight for style " + key,
                  {{"section", s.id}, {"style", key}});
    }
    double v = w.at(key).get<double>();
    if (!(v > 0.0)) {
      throw Error(errc::kMalformedDocument, "section '" + s.id + "' weight must be positive",
                  {{"section", s.id}, {"style", key}});
    }
    s.weights[index_of(style)] = v;
  }
  return s;
}

Block parse_block(const nlohmann::json& j) {
  Block b;
  const auto kind = require(j, "kind", "block").get<std::string>();
  auto it = std::find(kBlockNames.begin(), kBlockNames.end(), kind);
  if (it == kBlockNames.end()) {
    throw Error(errc::kMalformedDocument, "unknown block kind '" + kind + "'", {{"kind", kind}});
  }
  b.kind = static_cast<BlockKind>(it - kBlockNames.begin());
  b.body = j.value("body", std::string{});
  b.links = j.value("links", std::vector<std::string>{});
  return b;
}

Question parse_question(const nlohmann::json& j) {
  Question q;
  q.id = require(j, "id", "question").get<std::string>();
  const std::string where = "question " + q.id;
  q.section = require(j, "section", where).get<std::string>();
  const auto level = require(j, "level", where).get<std::string>();
  auto lv = parse_level(level);
  if (!lv) throw Error(errc::kMalformedDocument, where + ": unknown level '" + level + "'", {{"question", q.id}});
  q.level = *lv;
  const auto dim = require(j, "dimension", where).get<std::string>();
  auto d = parse_dimension(dim);
  if (!d) throw Error(errc::kMalformedDocument, where + ": unknown dimension '" + dim + "'", {{"question", q.id}});
  q.dimension = *d;
  q.points = require(j, "points", where).get<double>();
  q.body = j.value("body", std::string{});
  for (const auto& c : require(j, "choices", where)) {
    Choice ch;
    ch.id = require(c, "id", where + " choice").get<std::string>();
    ch.body = c.value("body", std::string{});
    ch.correct = c.value("correct", false);
    if (c.contains("misconception") && !c.at("misconception").is_null()) {
      ch.misconception_tag = c.at("misconception").get<std::string>();
    }
    q.choices.push_back(std::move(ch));
  }
  q.hints = j.value("hints", std::vector<std::string>{});
  return q;
}

Concept parse_concept(const nlohmann::json& j) {
  Concept c;
  c.id = require(j, "id", "concept").get<std::string>();
  const std::string where = "concept " + c.id;
  c.title = j.value("title", std::string{});
  for (const auto& s : require(j, "sections", where)) c.sections.push_back(parse_section(s));
  c.key_section = require(j, "key_section", where).get<std::string>();
  const auto& variants = require(j, "variants", where);
  for (auto style : kAllStyles) {
    const auto key = std::string(to_string(style));
    if (!variants.contains(key)) {
      throw Error(errc::kMissingVariant, where + " has no variant for style " + key,
                  {{"concept", c.id}, {"style", key}});
    }
    ContentVariant v;
    v.style = style;
    for (const auto& b : require(variants.at(key), "blocks", where + " variant " + key)) {
      v.blocks.push_back(parse_block(b));
    }
    c.variants[index_of(style)] = std::move(v);
  }
  for (const auto& q : require(j, "questions", where)) c.questions.push_back(parse_question(q));
  return c;
}

void check_unique(std::set<std::string>& seen, const std::string& id, std::string_view kind) {
  if (!seen.insert(id).second) {
    throw Error(errc::kDuplicateId, "duplicate " + std::string(kind) + " id '" + id + "'",
                {{"kind", kind}, {"id", id}});
  }
}

void check_concept(const Concept& c, const std::set<std::string>& concept_ids) {
  std::set<std::string> section_ids;
  for (const auto& s : c.sections) check_unique(section_ids, s.id, "section");
  if (c.sections.empty()) {
    throw Error(errc::kMalformedDocument, "concept '" + c.id + "' has no sections", {{"concept", c.id}});
  }
  const Section* key = c.find_section(c.key_section);
  if (key == nullptr) {
    throw Error(errc::kUnknownReference, "key_section '" + c.key_section + "' is not a section of '" + c.id + "'",
                {{"concept", c.id}, {"section", c.key_section}});
  }
  for (auto style : kAllStyles) {
    for (const auto& s : c.sections) {
      if (s.id != key->id && s.weight(style) >= key->weight(style)) {
        throw Error(errc::kKeySectionNotMaximal,
                    "section '" + s.id + "' outweighs key section '" + key->id + "' under " +
                        std::string(to_string(style)),
                    {{"concept", c.id}, {"section", s.id}, {"style", to_string(style)}});
      }
    }
  }

  for (const auto& q : c.questions) {
    if (c.find_section(q.section) == nullptr) {
      throw Error(errc::kUnknownReference, "question '" + q.id + "' names unknown section '" + q.section + "'",
                  {{"question", q.id}, {"section", q.section}});
    }
    if (!(q.points > 0.0)) {
      throw Error(errc::kInvalidQuestion, "question '" + q.id + "' must carry positive points", {{"question", q.id}});
    }
    std::set<std::string> choice_ids;
    int correct = 0;
    for (const auto& ch : q.choices) {
      check_unique(choice_ids, ch.id, "choice");
      if (ch.correct) {
        ++correct;
        if (ch.misconception_tag) {
          throw Error(errc::kInvalidQuestion, "correct choice '" + ch.id + "' carries a misconception tag",
                      {{"question", q.id}, {"choice", ch.id}});
        }
      }
    }
    if (correct != 1) {
      throw Error(errc::kInvalidQuestion, "question '" + q.id + "' must have exactly one correct choice",
                  {{"question", q.id}, {"correct_choices", correct}});
    }
  }
  for (const auto& s : c.sections) {
    bool covered = std::any_of(c.questions.begin(), c.questions.end(),
                               [&](const Question& q) { return q.section == s.id; });
    if (!covered) {
      throw Error(errc::kUncoveredSection, "no question covers section '" + s.id + "' of '" + c.id + "'",
                  {{"concept", c.id}, {"section", s.id}});
    }
  }

  for (auto style : kAllStyles) {
    const auto& v = c.variant(style);
    if (v.blocks.empty()) {
      throw Error(errc::kMissingVariant, "variant " + std::string(to_string(style)) + " of '" + c.id + "' is empty",
                  {{"concept", c.id}, {"style", to_string(style)}});
    }
    for (const auto& b : v.blocks) {
      for (const auto& link : b.links) {
        if (!is_external_link(link) && !concept_ids.count(link)) {
          throw Error(errc::kDanglingLink, "link '" + link + "' in '" + c.id + "' names no concept",
                      {{"concept", c.id}, {"style", to_string(style)}, {"link", link}});
        }
      }
    }
  }
}

}  // namespace

std::string_view to_string(Level l) { return kLevelNames[index_of(l)]; }

std::optional<Level> parse_level(std::string_view text) {
  for (auto l : kAllLevels) {
    if (kLevelNames[index_of(l)] == text) return l;
  }
  return std::nullopt;
}

std::string_view to_string(Dimension d) { return d == Dimension::Conceptual ? "Conceptual" : "Objective"; }

std::optional<Dimension> parse_dimension(std::string_view text) {
  if (text == "Conceptual") return Dimension::Conceptual;
  if (text == "Objective") return Dimension::Objective;
  return std::nullopt;
}

std::string_view to_string(BlockKind k) { return kBlockNames[static_cast<std::size_t>(k)]; }

const Choice* Question::find_choice(std::string_view choice_id) const {
  for (const auto& c : choices) {
    if (c.id == choice_id) return &c;
  }
  return nullptr;
}

const Section* Concept::find_section(std::string_view section_id) const {
  for (const auto& s : sections) {
    if (s.id == section_id) return &s;
  }
  return nullptr;
}

const Question* Concept::find_question(std::string_view question_id) const {
  for (const auto& q : questions) {
    if (q.id == question_id) return &q;
  }
  return nullptr;
}

const Concept* CoursePack::find_concept(std::string_view concept_id) const {
  for (const auto& c : concepts) {
    if (c.id == concept_id) return &c;
  }
  return nullptr;
}

const std::vector<std::string>& CoursePack::prerequisites_of(std::string_view concept_id) const {
  static const std::vector<std::string> kNone;
  auto it = prerequisites.find(std::string(concept_id));
  return it == prerequisites.end() ? kNone : it->second;
}

std::vector<std::string> CoursePack::topological_order() const {
  std::vector<std::string> order;
  std::set<std::string> placed;
  while (order.size() < concepts.size()) {
    bool progressed = false;
    for (const auto& c : concepts) {
      if (placed.count(c.id)) continue;
      const auto& pre = prerequisites_of(c.id);
      if (std::all_of(pre.begin(), pre.end(), [&](const std::string& p) { return placed.count(p) > 0; })) {
        order.push_back(c.id);
        placed.insert(c.id);
        progressed = true;
        break;
      }
    }
    if (!progressed) {
      std::vector<std::string> stuck;
      for (const auto& c : concepts) {
        if (!placed.count(c.id)) stuck.push_back(c.id);
      }
      throw Error(errc::kCyclicPrerequisites, "prerequisite graph contains a cycle", {{"concepts", stuck}});
    }
  }
  return order;
}

bool is_external_link(std::string_view link) {
  return link.find("://") != std::string_view::npos || link.rfind("mailto:", 0) == 0;
}

CoursePack load_course_pack(const nlohmann::json& doc) {
  CoursePack pack;
  try {
    pack.id = require(doc, "id", "pack").get<std::string>();
    pack.title = doc.value("title", std::string{});
    if (doc.contains("mastery_band")) {
      const auto text = doc.at("mastery_band").get<std::string>();
      auto b = parse_band(text);
      if (!b) throw Error(errc::kMalformedDocument, "unknown mastery_band '" + text + "'");
      pack.mastery_band = *b;
    }
    for (const auto& c : require(doc, "concepts", "pack")) pack.concepts.push_back(parse_concept(c));
    if (doc.contains("prerequisites")) {
      pack.prerequisites = doc.at("prerequisites").get<std::map<std::string, std::vector<std::string>>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(errc::kMalformedDocument, std::string("course pack: ") + e.what());
  }
  if (pack.concepts.empty()) throw Error(errc::kMalformedDocument, "course pack has no concepts", {{"pack", pack.id}});

  std::set<std::string> concept_ids;
  for (const auto& c : pack.concepts) check_unique(concept_ids, c.id, "concept");
  std::set<std::string> question_ids;
  for (const auto& c : pack.concepts) {
    for (const auto& q : c.questions) check_unique(question_ids, q.id, "question");
  }
  for (const auto& [cid, pres] : pack.prerequisites) {
    if (!concept_ids.count(cid)) {
      throw Error(errc::kUnknownReference, "prerequisites name unknown concept '" + cid + "'", {{"concept", cid}});
    }
    for (const auto& p : pres) {
      if (!concept_ids.count(p)) {
        throw Error(errc::kUnknownReference, "prerequisite '" + p + "' of '" + cid + "' does not exist",
                    {{"concept", cid}, {"prerequisite", p}});
      }
    }
  }
  for (const auto& c : pack.concepts) check_concept(c, concept_ids);
  (void)pack.topological_order();
  return pack;
}

nlohmann::json to_json(const CoursePack& pack) {
  nlohmann::json concepts = nlohmann::json::array();
  for (const auto& c : pack.concepts) {
    nlohmann::json sections = nlohmann::json::array();
    for (const auto& s : c.sections) {
      nlohmann::json w = nlohmann::json::object();
      for (auto style : kAllStyles) w[std::string(to_string(style))] = s.weight(style);
      sections.push_back({{"id", s.id}, {"title", s.title}, {"weights", w}});
    }
    nlohmann::json variants = nlohmann::json::object();
    for (auto style : kAllStyles) {
      nlohmann::json blocks = nlohmann::json::array();
      for (const auto& b : c.variant(style).blocks) {
        blocks.push_back({{"kind", to_string(b.kind)}, {"body", b.body}, {"links", b.links}});
      }
      variants[std::string(to_string(style))] = {{"blocks", blocks}};
    }
    nlohmann::json questions = nlohmann::json::array();
    for (const auto& q : c.questions) {
      nlohmann::json choices = nlohmann::json::array();
      for (const auto& ch : q.choices) {
        nlohmann::json cj = {{"id", ch.id}, {"body", ch.body}, {"correct", ch.correct}};
        if (ch.misconception_tag) cj["misconception"] = *ch.misconception_tag;
        choices.push_back(cj);
      }
      questions.push_back({{"id", q.id},
                           {"section", q.section},
                           {"level", to_string(q.level)},
                           {"dimension", to_string(q.dimension)},
                           {"points", q.points},
                           {"body", q.body},
                           {"choices", choices},
                           {"hints", q.hints}});
    }
    concepts.push_back({{"id", c.id},
                        {"title", c.title},
                        {"key_section", c.key_section},
                        {"sections", sections},
                        {"variants", variants},
                        {"questions", questions}});
  }
  return {{"id", pack.id},
          {"title", pack.title},
          {"mastery_band", to_string(pack.mastery_band)},
          {"prerequisites", pack.prerequisites},
          {"concepts", concepts}};
}

WeightTable section_weight_table(const Concept& c) {
  WeightTable table;
  for (const auto& s : c.sections) {
    for (auto style : kAllStyles) table[{s.id, style}] = s.weight(style);
  }
  return table;
}

}  // namespace adaptutor
