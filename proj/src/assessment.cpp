#include "adaptutor/assessment.hpp"

#include <algorithm>
#include <cmath>

#include "adaptutor/error.hpp"
#include "adaptutor/rng.hpp"

namespace adaptutor {

// ---- bands ---------------------------------------------------------------

KnowledgeBand band(double score) {
  if (!(score >= 0.0 && score <= 100.0)) {
    throw Error(errc::kOutOfRange, "score must lie in [0, 100]", {{"score", std::isnan(score) ? -1.0 : score}});
  }
  const int s = static_cast<int>(std::floor(score + 0.5));
  if (s >= 86) return KnowledgeBand::Excellent;
  if (s >= 71) return KnowledgeBand::VeryGood;
  if (s >= 51) return KnowledgeBand::Good;
  if (s >= 31) return KnowledgeBand::Average;
  return KnowledgeBand::Weak;
}

namespace {
constexpr std::array<std::string_view, 5> kBandIds = {"Weak", "Average", "Good", "VeryGood", "Excellent"};
constexpr std::array<std::string_view, 5> kBandLabels = {"Weak", "Average", "Good", "Very good", "Excellent"};
}  // namespace

std::string_view to_string(KnowledgeBand b) { return kBandIds[static_cast<std::size_t>(b)]; }
std::string_view display_name(KnowledgeBand b) { return kBandLabels[static_cast<std::size_t>(b)]; }

std::optional<KnowledgeBand> parse_band(std::string_view text) {
  for (auto b : kAllBands) {
    if (kBandIds[static_cast<std::size_t>(b)] == text) return b;
  }
  return std::nullopt;
}

std::string_view to_string(TestPhase p) { return p == TestPhase::PreTest ? "PreTest" : "PostTest"; }

std::optional<TestPhase> parse_phase(std::string_view text) {
  if (text == "PreTest" || text == "pretest") return TestPhase::PreTest;
  if (text == "PostTest" || text == "posttest") return TestPhase::PostTest;
  return std::nullopt;
}

// ---- selection -----------------------------------------------------------

namespace {

struct Selector {
  const Concept& cpt;
  const std::vector<const Question*>& pool;  // shuffled, unused
  std::vector<std::string> section_ids;
  LevelMix quota;
  std::vector<const Question*> picks;  // one per section, in section order

  bool assign(std::size_t k) {
    if (k == section_ids.size()) return true;
    // One branch per level: any candidate of the same level is interchangeable
    // for feasibility, so take the first in shuffled order.
    std::array<bool, 3> tried{};
    for (const Question* q : pool) {
      if (q->section != section_ids[k]) continue;
      const auto lv = index_of(q->level);
      if (tried[lv] || quota[lv] == 0) continue;
      tried[lv] = true;
      --quota[lv];
      picks.push_back(q);
      if (assign(k + 1)) return true;
      picks.pop_back();
      ++quota[lv];
    }
    return false;
  }
};

[[noreturn]] void exhausted(const Concept& c, const std::string& why, nlohmann::json detail = {}) {
  detail["concept"] = c.id;
  detail["reason"] = why;
  throw Error(errc::kBankExhausted, "question bank of '" + c.id + "' cannot satisfy the test: " + why,
              std::move(detail));
}

}  // namespace

TestInstance select_questions(const Concept& cpt, const TestSpec& spec, const std::set<std::string>& used,
                              std::uint64_t seed) {
  const int mix_total = spec.level_mix[0] + spec.level_mix[1] + spec.level_mix[2];
  if (spec.count < 1 || mix_total != spec.count ||
      std::any_of(spec.level_mix.begin(), spec.level_mix.end(), [](int n) { return n < 0; })) {
    throw Error(errc::kInvalidTestSpec, "level mix must be non-negative and sum to the question count",
                {{"count", spec.count}, {"level_mix", spec.level_mix}});
  }

  std::vector<const Question*> pool;
  for (const auto& q : cpt.questions) {
    if (!used.count(q.id)) pool.push_back(&q);
  }
  seeded_shuffle(pool, seed);

  if (static_cast<std::size_t>(spec.count) < cpt.sections.size()) {
    exhausted(cpt, "fewer questions requested than sections to cover",
              {{"count", spec.count}, {"sections", cpt.sections.size()}});
  }
  LevelMix available{};
  for (const Question* q : pool) ++available[index_of(q->level)];
  for (auto l : kAllLevels) {
    if (available[index_of(l)] < spec.level_mix[index_of(l)]) {
      exhausted(cpt, "not enough unused questions at level " + std::string(to_string(l)),
                {{"level", to_string(l)}, {"needed", spec.level_mix[index_of(l)]}, {"available", available[index_of(l)]}});
    }
  }

  Selector sel{cpt, pool, {}, spec.level_mix, {}};
  for (const auto& s : cpt.sections) sel.section_ids.push_back(s.id);
  if (!sel.assign(0)) exhausted(cpt, "no assignment covers every section within the level mix");

  std::set<const Question*> chosen(sel.picks.begin(), sel.picks.end());
  LevelMix remaining = sel.quota;
  for (const Question* q : pool) {
    auto& r = remaining[index_of(q->level)];
    if (r > 0 && !chosen.count(q)) {
      chosen.insert(q);
      --r;
    }
  }

  // Sequence: easiest level first, shuffled order within a level.
  TestInstance out;
  out.seed = seed;
  for (auto l : kAllLevels) {
    for (const Question* q : pool) {
      if (q->level == l && chosen.count(q)) out.questions.push_back(q->id);
    }
  }
  return out;
}

// ---- grading -------------------------------------------------------------

GradeReport grade(const Concept& cpt, const TestInstance& instance, const Answers& answers, LearningStyle style,
                  const HintsUsed& hints_used) {
  for (const auto& [qid, _] : answers) {
    if (std::find(instance.questions.begin(), instance.questions.end(), qid) == instance.questions.end()) {
      throw Error(errc::kUnknownQuestion, "answer for question '" + qid + "' which is not in this test",
                  {{"question", qid}});
    }
  }
  for (const auto& [qid, n] : hints_used) {
    const Question* q = cpt.find_question(qid);
    if (q == nullptr || n < 0 || static_cast<std::size_t>(n) > q->hints.size()) {
      throw Error(errc::kHintsExceeded, "hint count for '" + qid + "' exceeds the available hints",
                  {{"question", qid}, {"hints_used", n}});
    }
  }

  struct Acc {
    double earned = 0.0;
    double possible = 0.0;
  };
  Acc total;
  std::map<Dimension, Acc> by_dim;
  std::map<std::string, Acc> by_section;
  GradeReport report;

  for (const auto& qid : instance.questions) {
    const Question* q = cpt.find_question(qid);
    if (q == nullptr) throw Error(errc::kUnknownQuestion, "test names unknown question '" + qid + "'", {{"question", qid}});
    auto a = answers.find(qid);
    if (a == answers.end()) {
      throw Error(errc::kUnansweredQuestion, "question '" + qid + "' was not answered", {{"question", qid}});
    }
    const Choice* choice = q->find_choice(a->second);
    if (choice == nullptr) {
      throw Error(errc::kUnknownChoice, "question '" + qid + "' has no choice '" + a->second + "'",
                  {{"question", qid}, {"choice", a->second}});
    }
    auto h = hints_used.find(qid);
    const int hints = h == hints_used.end() ? 0 : h->second;
    const double factor = std::max(0.0, 1.0 - kHintPenalty * hints);
    const double correct = choice->correct ? 1.0 : 0.0;
    const double earned = q->points * correct * factor;
    const double w = cpt.find_section(q->section)->weight(style);

    report.hint_penalty_applied += q->points * correct * (1.0 - factor);
    for (Acc* acc : {&total, &by_dim[q->dimension], &by_section[q->section]}) {
      acc->earned += earned * w;
      acc->possible += q->points * w;
    }
    if (!choice->correct && choice->misconception_tag) report.misconceptions.push_back(*choice->misconception_tag);
  }

  auto pct = [](const Acc& a) { return a.possible > 0.0 ? std::clamp(100.0 * a.earned / a.possible, 0.0, 100.0) : 0.0; };
  report.raw_score = pct(total);
  report.band = band(report.raw_score);
  for (const auto& [d, acc] : by_dim) report.per_dimension[d] = pct(acc);
  for (const auto& [s, acc] : by_section) report.per_section[s] = pct(acc);
  return report;
}

// ---- serialization -------------------------------------------------------

nlohmann::json to_json(const TestSpec& spec) {
  return {{"phase", to_string(spec.phase)},
          {"count", spec.count},
          {"level_mix", {{"L1", spec.level_mix[0]}, {"L2", spec.level_mix[1]}, {"L3", spec.level_mix[2]}}}};
}

TestSpec test_spec_from_json(const nlohmann::json& j) {
  TestSpec s;
  auto p = parse_phase(j.at("phase").get<std::string>());
  if (!p) throw Error(errc::kMalformedDocument, "unknown test phase");
  s.phase = *p;
  s.count = j.at("count").get<int>();
  const auto& m = j.at("level_mix");
  s.level_mix = {m.value("L1", 0), m.value("L2", 0), m.value("L3", 0)};
  return s;
}

nlohmann::json to_json(const TestInstance& t) { return {{"questions", t.questions}, {"seed", t.seed}}; }

TestInstance test_instance_from_json(const nlohmann::json& j) {
  return {j.at("questions").get<std::vector<std::string>>(), j.at("seed").get<std::uint64_t>()};
}

nlohmann::json to_json(const GradeReport& r) {
  nlohmann::json dims = nlohmann::json::object();
  for (const auto& [d, v] : r.per_dimension) dims[std::string(to_string(d))] = v;
  return {{"raw_score", r.raw_score},
          {"band", to_string(r.band)},
          {"per_dimension", dims},
          {"per_section", r.per_section},
          {"misconceptions", r.misconceptions},
          {"hint_penalty_applied", r.hint_penalty_applied}};
}

GradeReport grade_report_from_json(const nlohmann::json& j) {
  GradeReport r;
  r.raw_score = j.at("raw_score").get<double>();
  auto b = parse_band(j.at("band").get<std::string>());
  if (!b) throw Error(errc::kMalformedDocument, "unknown band");
  r.band = *b;
  for (const auto& [k, v] : j.at("per_dimension").items()) {
    auto d = parse_dimension(k);
    if (!d) throw Error(errc::kMalformedDocument, "unknown dimension '" + k + "'");
    r.per_dimension[*d] = v.get<double>();
  }
  r.per_section = j.at("per_section").get<std::map<std::string, double>>();
  r.misconceptions = j.at("misconceptions").get<std::vector<std::string>>();
  r.hint_penalty_applied = j.at("hint_penalty_applied").get<double>();
  return r;
}

}  // namespace adaptutor
