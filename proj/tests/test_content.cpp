#include <doctest.h>

#include "adaptutor/error.hpp"
#include "support.hpp"

using namespace adaptutor;

namespace {

nlohmann::json concept_doc(const std::string& id) {
  nlohmann::json variants = nlohmann::json::object();
  for (auto s : kAllStyles) {
    variants[std::string(to_string(s))] = {{"blocks", {{{"kind", "text"}, {"body", "about " + id}, {"links", nlohmann::json::array()}}}}};
  }
  nlohmann::json questions = nlohmann::json::array();
  for (const char* sec : {"a", "b"}) {
    questions.push_back({{"id", id + "-" + sec},
                         {"section", sec},
                         {"level", "L1"},
                         {"dimension", "Objective"},
                         {"points", 1},
                         {"body", "?"},
                         {"choices", {{{"id", "x"}, {"correct", true}}, {{"id", "y"}, {"correct", false}, {"misconception", "m"}}}},
                         {"hints", {"h"}}});
  }
  return {{"id", id},
          {"title", id},
          {"key_section", "a"},
          {"sections",
           {{{"id", "a"}, {"weights", {{"SS", 3}, {"GOA", 3}, {"EIA", 3}, {"CA", 3}, {"DLA", 3}}}},
            {{"id", "b"}, {"weights", {{"SS", 1}, {"GOA", 2}, {"EIA", 1}, {"CA", 2}, {"DLA", 1}}}}}},
          {"variants", variants},
          {"questions", questions}};
}

nlohmann::json pack_doc() {
  return {{"id", "p"},
          {"title", "p"},
          {"prerequisites", {{"two", {"one"}}}},
          {"concepts", {concept_doc("one"), concept_doc("two")}}};
}

std::string load_error(const nlohmann::json& doc) {
  try {
    load_course_pack(doc);
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

}  // namespace

TEST_CASE("well-formed pack loads") {
  const auto pack = load_course_pack(pack_doc());
  CHECK(pack.concepts.size() == 2);
  CHECK(pack.topological_order() == std::vector<std::string>{"one", "two"});
  CHECK(load_course_pack(to_json(pack)) == pack);
}

TEST_CASE("invariant violations are rejected") {
  auto cyc = pack_doc();
  cyc["prerequisites"]["one"] = {"two"};
  CHECK(load_error(cyc) == errc::kCyclicPrerequisites);

  auto heavy = pack_doc();
  heavy["concepts"][0]["sections"][0]["weights"]["CA"] = 5;
  heavy["concepts"][0]["sections"][1]["weights"]["CA"] = 9;
  CHECK(load_error(heavy) == errc::kKeySectionNotMaximal);

  auto tie = pack_doc();
  tie["concepts"][0]["sections"][1]["weights"]["SS"] = 3;
  CHECK(load_error(tie) == errc::kKeySectionNotMaximal);

  auto missing = pack_doc();
  missing["concepts"][1]["variants"].erase("DLA");
  CHECK(load_error(missing) == errc::kMissingVariant);

  auto uncovered = pack_doc();
  uncovered["concepts"][0]["questions"].erase(1);
  CHECK(load_error(uncovered) == errc::kUncoveredSection);

  auto dangling = pack_doc();
  dangling["concepts"][0]["variants"]["SS"]["blocks"][0]["links"] = {"nowhere"};
  CHECK(load_error(dangling) == errc::kDanglingLink);

  auto dup = pack_doc();
  dup["concepts"][1]["questions"][0]["id"] = "one-a";
  CHECK(load_error(dup) == errc::kDuplicateId);

  auto two_right = pack_doc();
  two_right["concepts"][0]["questions"][0]["choices"][1]["correct"] = true;
  CHECK(load_error(two_right) == errc::kInvalidQuestion);

  auto unknown = pack_doc();
  unknown["prerequisites"]["two"] = {"zero"};
  CHECK(load_error(unknown) == errc::kUnknownReference);

  auto empty = pack_doc();
  empty["concepts"] = nlohmann::json::array();
  CHECK(load_error(empty) == errc::kMalformedDocument);
}

TEST_CASE("links") {
  CHECK(is_external_link("https://example.org/x"));
  CHECK(is_external_link("mailto:teacher@example.org"));
  CHECK_FALSE(is_external_link("hardware"));

  auto doc = pack_doc();
  doc["concepts"][0]["variants"]["SS"]["blocks"][0]["links"] = {"two", "https://example.org"};
  CHECK_NOTHROW(load_course_pack(doc));
}

TEST_CASE("section weight table") {
  const auto pack = load_course_pack(pack_doc());
  const auto table = section_weight_table(pack.concepts[0]);
  CHECK(table.size() == 10);
  CHECK(table.at({"b", LearningStyle::GOA}) == 2.0);

  SUBCASE("single section is trivially maximal") {
    auto doc = pack_doc();
    auto& c = doc["concepts"][0];
    c["sections"].erase(1);
    c["questions"].erase(1);
    const auto one = load_course_pack(doc);
    const auto t = section_weight_table(one.concepts[0]);
    CHECK(t.size() == 5);
  }

  SUBCASE("demo pack reads through verbatim") {
    const auto raw = testsupport::read_json("packs/demo-computing.json");
    const auto& pack = *testsupport::demo_pack();
    for (std::size_t i = 0; i < pack.concepts.size(); ++i) {
      const auto t = section_weight_table(pack.concepts[i]);
      for (const auto& s : raw["concepts"][i]["sections"]) {
        for (auto st : kAllStyles) {
          CHECK(t.at({s["id"].get<std::string>(), st}) == s["weights"][std::string(to_string(st))].get<double>());
        }
      }
    }
  }

  SUBCASE("argmax per style is the key section") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 1000; ++trial) {
      auto c = testsupport::random_concept(rng, 1 + static_cast<int>(rng() % 4), 1);
      for (std::size_t s = 0; s < c.sections.size(); ++s) {
        c.questions.push_back({"cov" + std::to_string(s), c.sections[s].id, Level::L1, Dimension::Objective, 1, "",
                               {{"a", "", true, std::nullopt}}, {}});
      }
      const auto t = section_weight_table(c);
      for (auto st : kAllStyles) {
        std::string best;
        double w = -1;
        for (const auto& [k, v] : t) {
          if (k.second == st && v > w) {
            w = v;
            best = k.first;
          }
        }
        CHECK(best == c.key_section);
      }
    }
  }
}

TEST_CASE("demo pack shape") {
  const auto& pack = *testsupport::demo_pack();
  CHECK(pack.concepts.size() >= 3);
  for (const auto& c : pack.concepts) {
    CHECK(c.sections.size() >= 2);
    CHECK(c.questions.size() >= 12);
    for (auto s : kAllStyles) CHECK_FALSE(c.variant(s).blocks.empty());
  }
}
