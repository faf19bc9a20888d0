// Shared fixtures and independent oracles for the unit and acceptance suites.
// The oracles deliberately avoid the engine's own helpers: they re-derive each
// answer from the definitions by enumeration or straight summation.
#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "adaptutor/assessment.hpp"
#include "adaptutor/content.hpp"
#include "adaptutor/expert.hpp"
#include "adaptutor/profiler.hpp"

#ifndef ADAPTUTOR_DATA_DIR
#define ADAPTUTOR_DATA_DIR "."
#endif

namespace testsupport {

using namespace adaptutor;

inline std::filesystem::path data_path(const std::string& rel) { return std::filesystem::path(ADAPTUTOR_DATA_DIR) / rel; }

inline nlohmann::json read_json(const std::string& rel) {
  std::ifstream in(data_path(rel));
  return nlohmann::json::parse(in);
}

inline std::shared_ptr<const CoursePack> demo_pack() {
  static auto p = std::make_shared<const CoursePack>(load_course_pack(read_json("packs/demo-computing.json")));
  return p;
}
inline std::shared_ptr<const Rulebook> default_rules() {
  static auto r = std::make_shared<const Rulebook>(parse_rulebook(read_json("rules/default.json")));
  return r;
}
inline std::shared_ptr<const Instrument> demo_instrument() {
  static auto i = std::make_shared<const Instrument>(validate_instrument(read_json("instruments/demo-lsp.json")));
  return i;
}

/// Questionnaire answers that make `style` the clear dominant style.
inline Responses favouring(const Instrument& ins, LearningStyle style) {
  Responses r;
  for (const auto& item : ins.items) {
    const int agree = item.style == style ? ins.scale_max : ins.scale_min + 1;
    r[item.id] = item.reverse_scored ? ins.scale_max + ins.scale_min - agree : agree;
  }
  return r;
}

/// The correct choice id for every question of a test, or a wrong one.
inline Answers answer_all(const Concept& c, const std::vector<std::string>& qids, bool correct) {
  Answers a;
  for (const auto& id : qids) {
    for (const auto& ch : c.find_question(id)->choices) {
      if (ch.correct == correct) {
        a[id] = ch.id;
        break;
      }
    }
  }
  return a;
}

// ---- random concepts -------------------------------------------------------

/// A concept with `sections` sections and, per (section, level) cell, a
/// random number of questions in [0, max_per_cell]. Weights are positive;
/// section 0 is the key and strictly heaviest for every style.
inline Concept random_concept(std::mt19937_64& rng, int sections, int max_per_cell) {
  std::uniform_int_distribution<int> cell(0, max_per_cell);
  std::uniform_real_distribution<double> w(0.5, 3.0);
  std::uniform_int_distribution<int> pts(1, 5);
  Concept c;
  c.id = "c";
  for (int s = 0; s < sections; ++s) {
    Section sec;
    sec.id = "s" + std::to_string(s);
    for (auto st : kAllStyles) sec.weights[index_of(st)] = s == 0 ? 4.0 : w(rng);
    c.sections.push_back(sec);
  }
  c.key_section = "s0";
  int n = 0;
  for (int s = 0; s < sections; ++s) {
    for (auto l : kAllLevels) {
      const int k = cell(rng);
      for (int i = 0; i < k; ++i) {
        Question q;
        q.id = "q" + std::to_string(n++);
        q.section = "s" + std::to_string(s);
        q.level = l;
        q.dimension = (n % 2) ? Dimension::Conceptual : Dimension::Objective;
        q.points = pts(rng);
        q.choices = {{"a", "", true, std::nullopt}, {"b", "", false, "tag-" + q.id}, {"c", "", false, std::nullopt}};
        q.hints = {"h1", "h2"};
        c.questions.push_back(q);
      }
    }
  }
  return c;
}

// ---- selection oracle ------------------------------------------------------

/// Checks the three selection rules directly: no question from `used`, no
/// duplicates, every section present, and exactly the requested level mix.
inline bool valid_instance(const Concept& c, const TestSpec& spec, const std::set<std::string>& used,
                           const std::vector<std::string>& ids) {
  if (static_cast<int>(ids.size()) != spec.count) return false;
  std::set<std::string> seen;
  std::set<std::string> sections;
  int mix[3] = {0, 0, 0};
  for (const auto& id : ids) {
    const Question* q = nullptr;
    for (const auto& cand : c.questions) {
      if (cand.id == id) q = &cand;
    }
    if (q == nullptr || used.count(id) || !seen.insert(id).second) return false;
    sections.insert(q->section);
    ++mix[static_cast<int>(q->level)];
  }
  if (sections.size() != c.sections.size()) return false;
  return mix[0] == spec.level_mix[0] && mix[1] == spec.level_mix[1] && mix[2] == spec.level_mix[2];
}

/// Enumerates every count-sized subset of the unused bank and reports whether
/// any of them is a valid instance. Bank size must stay below 31.
inline bool feasible_by_enumeration(const Concept& c, const TestSpec& spec, const std::set<std::string>& used) {
  std::vector<std::string> free;
  for (const auto& q : c.questions) {
    if (!used.count(q.id)) free.push_back(q.id);
  }
  const int n = static_cast<int>(free.size());
  const int k = spec.count;
  if (k > n || k < 0) return false;
  if (k == 0) return valid_instance(c, spec, used, {});
  std::uint32_t mask = (1u << k) - 1;
  const std::uint32_t limit = 1u << n;
  while (mask < limit) {
    std::vector<std::string> pick;
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) pick.push_back(free[static_cast<std::size_t>(i)]);
    }
    if (valid_instance(c, spec, used, pick)) return true;
    // Gosper's hack: next subset of the same size.
    const std::uint32_t low = mask & -mask;
    const std::uint32_t ripple = mask + low;
    mask = (((ripple ^ mask) >> 2) / low) | ripple;
  }
  return false;
}

// ---- grading oracle --------------------------------------------------------

/// raw score by straight summation of earned vs. possible weighted points.
inline double grade_oracle(const Concept& c, const std::vector<std::string>& ids, const Answers& answers,
                           LearningStyle style, const HintsUsed& hints) {
  double earned = 0.0;
  double possible = 0.0;
  for (const auto& id : ids) {
    const Question* q = c.find_question(id);
    double w = 0.0;
    for (const auto& s : c.sections) {
      if (s.id == q->section) w = s.weights[static_cast<std::size_t>(style)];
    }
    bool right = false;
    for (const auto& ch : q->choices) {
      if (ch.id == answers.at(id)) right = ch.correct;
    }
    const int h = hints.count(id) ? hints.at(id) : 0;
    const double factor = std::max(0.0, 1.0 - 0.2 * h);
    if (right) earned += q->points * factor * w;
    possible += q->points * w;
  }
  return 100.0 * earned / possible;
}

// ---- inference oracle ------------------------------------------------------

inline std::string setting_key(const Action& a) {
  struct V {
    std::string operator()(const action::SetVariant&) const { return "variant"; }
    std::string operator()(const action::SetQuestionCount& x) const {
      return x.phase == TestPhase::PreTest ? "count.PreTest" : "count.PostTest";
    }
    std::string operator()(const action::SetLevelMix& x) const {
      return x.phase == TestPhase::PreTest ? "mix.PreTest" : "mix.PostTest";
    }
    std::string operator()(const action::SetFlow&) const { return "flow"; }
    std::string operator()(const action::SetHintBudget&) const { return "hint_budget"; }
    std::string operator()(const action::FlagForTeacher&) const { return ""; }
  };
  return std::visit(V{}, a);
}

inline double as_number(const Scalar& s) {
  if (auto d = std::get_if<double>(&s)) return *d;
  if (auto st = std::get_if<LearningStyle>(&s)) return static_cast<double>(*st);
  if (auto b = std::get_if<KnowledgeBand>(&s)) return static_cast<double>(*b);
  return std::nan("");
}

/// Condition-vs-fact test written from the rule-language definition.
inline bool oracle_matches(const Condition& c, const Fact& f) {
  if (c.predicate != f.predicate || c.args.size() != f.args.size()) return false;
  for (std::size_t i = 0; i < c.args.size(); ++i) {
    if (!c.args[i]) continue;
    const Scalar& want = *c.args[i];
    const Scalar& got = f.args[i];
    if (want.index() != got.index()) return false;
    const bool last = i + 1 == c.args.size();
    const Comparator op = last ? c.comparator : Comparator::Eq;
    int cmp;
    if (auto s = std::get_if<std::string>(&want)) {
      const auto& g = std::get<std::string>(got);
      cmp = g < *s ? -1 : (g > *s ? 1 : 0);
      if (op != Comparator::Eq && op != Comparator::Ne) return false;
    } else {
      const double g = as_number(got);
      const double w = as_number(want);
      cmp = g < w ? -1 : (g > w ? 1 : 0);
    }
    bool ok = false;
    switch (op) {
      case Comparator::Eq: ok = cmp == 0; break;
      case Comparator::Ne: ok = cmp != 0; break;
      case Comparator::Lt: ok = cmp < 0; break;
      case Comparator::Le: ok = cmp <= 0; break;
      case Comparator::Gt: ok = cmp > 0; break;
      case Comparator::Ge: ok = cmp >= 0; break;
    }
    if (!ok) return false;
  }
  return true;
}

/// Enumerates fired rules, ranks every competing action by
/// (priority desc, condition count desc, position asc) and keeps the best per
/// setting; teacher flags are kept in rulebook order.
inline std::vector<Action> infer_oracle(const std::vector<Fact>& facts, const Rulebook& rb) {
  struct Cand {
    int priority;
    std::size_t conds;
    std::size_t pos;
    Action action;
  };
  std::vector<Cand> cands;
  std::vector<Action> flags;
  for (std::size_t pos = 0; pos < rb.rules.size(); ++pos) {
    const Rule& r = rb.rules[pos];
    bool all = true;
    for (const auto& c : r.conditions) {
      bool any = false;
      for (const auto& f : facts) any = any || oracle_matches(c, f);
      all = all && any;
    }
    if (!all) continue;
    for (const auto& a : r.actions) {
      if (setting_key(a).empty()) flags.push_back(a);
      else cands.push_back({r.priority, r.conditions.size(), pos, a});
    }
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
    return std::tie(y.priority, y.conds, x.pos) < std::tie(x.priority, x.conds, y.pos);
  });
  std::vector<Action> out;
  for (const char* key : {"variant", "count.PreTest", "mix.PreTest", "count.PostTest", "mix.PostTest", "flow",
                          "hint_budget"}) {
    for (const auto& c : cands) {
      if (setting_key(c.action) == key) {
        out.push_back(c.action);
        break;
      }
    }
  }
  out.insert(out.end(), flags.begin(), flags.end());
  return out;
}

/// A random fact set and rulebook over a small value domain so that rules
/// fire and collide often.
inline std::vector<Fact> random_facts(std::mt19937_64& rng) {
  std::vector<Fact> facts;
  facts.push_back({"dominant_style", {kAllStyles[rng() % 5]}});
  for (auto s : kAllStyles) facts.push_back({"effectiveness", {s, static_cast<double>(rng() % 5) / 4.0}});
  facts.push_back({"prior_band", {std::string("c1"), kAllBands[rng() % 5]}});
  facts.push_back({"attempt_count", {std::string("c1"), static_cast<double>(rng() % 4)}});
  if (rng() % 2) facts.push_back({"misconception", {std::string("m") + std::to_string(rng() % 3)}});
  facts.push_back({"phase", {std::string(rng() % 2 ? "pretest" : "gate")}});
  return facts;
}

inline Rulebook random_rulebook(std::mt19937_64& rng) {
  Rulebook rb;
  rb.id = "random";
  const int n = 1 + static_cast<int>(rng() % 12);
  const Comparator ops[] = {Comparator::Eq, Comparator::Ne, Comparator::Lt,
                            Comparator::Le, Comparator::Gt, Comparator::Ge};
  for (int i = 0; i < n; ++i) {
    Rule r;
    r.id = "r" + std::to_string(i);
    r.priority = static_cast<int>(rng() % 4);
    const int nc = static_cast<int>(rng() % 3);
    for (int k = 0; k < nc; ++k) {
      Condition c;
      switch (rng() % 5) {
        case 0:
          c = {"dominant_style", {Scalar{kAllStyles[rng() % 5]}}, Comparator::Eq};
          break;
        case 1:
          c = {"effectiveness",
               {Scalar{kAllStyles[rng() % 5]}, Scalar{static_cast<double>(rng() % 5) / 4.0}},
               ops[rng() % 6]};
          break;
        case 2:
          c = {"prior_band", {std::nullopt, Scalar{kAllBands[rng() % 5]}}, ops[rng() % 6]};
          break;
        case 3:
          c = {"attempt_count", {Scalar{std::string("c1")}, Scalar{static_cast<double>(rng() % 4)}}, ops[rng() % 6]};
          break;
        default:
          c = {"misconception", {Scalar{std::string("m") + std::to_string(rng() % 3)}}, Comparator::Eq};
          break;
      }
      r.conditions.push_back(c);
    }
    std::set<std::string> written;
    const int na = 1 + static_cast<int>(rng() % 3);
    for (int k = 0; k < na; ++k) {
      Action a;
      switch (rng() % 6) {
        case 0: a = action::SetVariant{kAllStyles[rng() % 5]}; break;
        case 1: a = action::SetQuestionCount{TestPhase::PreTest, 3 + static_cast<int>(rng() % 4)}; break;
        case 2: a = action::SetLevelMix{TestPhase::PostTest, {1 + static_cast<int>(rng() % 3), 1, 1}}; break;
        case 3: a = action::SetFlow{Flow::Skip, ""}; break;
        case 4: a = action::SetHintBudget{static_cast<int>(rng() % 4)}; break;
        default: a = action::FlagForTeacher{"flag-" + r.id + "-" + std::to_string(k)}; break;
      }
      const auto key = setting_key(a);
      if (!key.empty() && !written.insert(key).second) continue;
      r.actions.push_back(a);
    }
    rb.rules.push_back(r);
  }
  return rb;
}

}  // namespace testsupport
