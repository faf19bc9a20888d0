#include "adaptutor/sim.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "adaptutor/error.hpp"
#include "adaptutor/rng.hpp"

namespace adaptutor::sim {

namespace {

// Uniform in [0, 1) from the top 53 bits; independent of the standard
// library's distribution implementations so reports match across platforms.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double normal(std::mt19937_64& rng) {
  const double u1 = 1.0 - unit(rng);
  const double u2 = unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t key(std::uint64_t seed, std::initializer_list<std::string_view> parts) {
  std::uint64_t h = fnv1a(std::to_string(seed));
  for (auto p : parts) h = fnv1a(p, fnv1a("/", h));
  return h;
}

constexpr int kMaxSteps = 400;

}  // namespace

double difficulty_penalty(Level level) {
  switch (level) {
    case Level::L1: return 0.0;
    case Level::L2: return 0.15;
    case Level::L3: return 0.3;
  }
  return 0.0;
}

double SimLearner::p_correct(Level level, bool matched, double noise_draw) const {
  const double p = aptitude + style_sensitivity * (matched ? 1.0 : 0.0) - difficulty_penalty(level) + noise_draw;
  return std::clamp(p, 0.0, 1.0);
}

std::string_view to_string(Policy p) {
  switch (p) {
    case Policy::Adaptive: return "adaptive";
    case Policy::FixedVariant: return "fixed-variant";
    case Policy::RandomVariant: return "random-variant";
    case Policy::Oracle: return "oracle";
  }
  return "?";
}

std::optional<Policy> parse_policy(std::string_view text) {
  for (auto p : {Policy::Adaptive, Policy::FixedVariant, Policy::RandomVariant, Policy::Oracle}) {
    if (to_string(p) == text) return p;
  }
  return std::nullopt;
}

PairedDifference paired_difference(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) {
    throw Error(errc::kOutOfRange, "paired samples must be non-empty and of equal size");
  }
  const auto n = static_cast<double>(a.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
  mean /= n;
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) ss += (a[i] - b[i] - mean) * (a[i] - b[i] - mean);
  const double sd = a.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  const double half = 1.96 * sd / std::sqrt(n);
  PairedDifference d;
  d.mean = mean;
  d.sd = sd;
  d.ci_low = mean - half;
  d.ci_high = mean + half;
  return d;
}

const PolicySummary* ExperimentReport::find(Policy p) const {
  for (const auto& s : policies) {
    if (s.policy == p) return &s;
  }
  return nullptr;
}

std::optional<PairedDifference> ExperimentReport::compare(Policy a, Policy b) const {
  for (const auto& c : comparisons) {
    if (c.a == a && c.b == b) return c;
  }
  return std::nullopt;
}

std::vector<SimLearner> make_population(const PopulationSpec& spec, std::uint64_t seed) {
  if (spec.size < 1) throw Error(errc::kOutOfRange, "population must be at least 1", {{"population", spec.size}});
  std::mt19937_64 rng(seed);
  std::vector<SimLearner> out;
  out.reserve(static_cast<std::size_t>(spec.size));
  for (int i = 0; i < spec.size; ++i) {
    SimLearner l;
    std::ostringstream id;
    id << "sim-" << std::setw(4) << std::setfill('0') << i;
    l.id = id.str();
    l.true_style = kAllStyles[bounded(rng, kAllStyles.size())];
    l.aptitude = spec.aptitude_min + (spec.aptitude_max - spec.aptitude_min) * unit(rng);
    l.style_sensitivity = spec.style_sensitivity;
    l.noise = spec.noise;
    l.seed = rng();
    out.push_back(std::move(l));
  }
  return out;
}

Responses simulated_responses(const Instrument& instrument, const SimLearner& learner) {
  std::mt19937_64 rng(key(learner.seed, {"questionnaire"}));
  const auto span = static_cast<std::uint64_t>(instrument.scale_max - instrument.scale_min);
  Responses out;
  for (const auto& item : instrument.items) {
    int agree;
    if (item.style == learner.true_style) {
      agree = instrument.scale_max;
    } else {
      // Lukewarm on everything else: never full agreement.
      agree = instrument.scale_min + static_cast<int>(bounded(rng, span));
    }
    out[item.id] = item.reverse_scored ? instrument.scale_max + instrument.scale_min - agree : agree;
  }
  return out;
}

LearnerOutcome run_learner(std::shared_ptr<const CoursePack> pack, std::shared_ptr<const Rulebook> rules,
                           std::shared_ptr<const Instrument> instrument, const SimLearner& learner, Policy policy,
                           const ExperimentConfig& config) {
  SessionConfig sc;
  sc.give_up_after = config.give_up_after;
  sc.reproducible = true;
  sc.base_seed = config.seed;
  Tutor tutor(pack, rules, instrument, sc);
  tutor.set_clock([] { return std::string("1970-01-01T00:00:00.000Z"); });

  // Variant choices draw from their own stream so answer draws stay paired
  // across policies.
  std::mt19937_64 choice_rng(key(learner.seed, {"variant", to_string(policy)}));
  switch (policy) {
    case Policy::Adaptive:
      break;
    case Policy::FixedVariant:
      tutor.set_variant_policy([s = config.fixed_style](const LearnerModel&, const Concept&) { return s; });
      break;
    case Policy::RandomVariant:
      tutor.set_variant_policy([&choice_rng](const LearnerModel&, const Concept&) {
        return std::optional<LearningStyle>(kAllStyles[bounded(choice_rng, kAllStyles.size())]);
      });
      break;
    case Policy::Oracle:
      tutor.set_variant_policy([s = learner.true_style](const LearnerModel&, const Concept&) { return s; });
      break;
  }

  auto answer = [&](const LearnerModel& m, const IssuedTest& t) {
    const Concept& c = *pack->find_concept(t.cpt);
    const bool matched = t.phase == TestPhase::PostTest && m.current_variant == learner.true_style;
    const auto attempt = std::to_string(m.progress(t.cpt).attempts);
    Answers out;
    for (const auto& qid : t.instance.questions) {
      const Question& q = *c.find_question(qid);
      std::mt19937_64 rng(key(learner.seed, {t.cpt, qid, attempt, to_string(t.phase)}));
      const double u = unit(rng);
      const double p = learner.p_correct(q.level, matched, learner.noise * normal(rng));
      std::vector<const Choice*> wrong;
      const Choice* right = nullptr;
      for (const auto& ch : q.choices) {
        if (ch.correct) right = &ch;
        else wrong.push_back(&ch);
      }
      if (u < p || wrong.empty()) out[qid] = right->id;
      else out[qid] = wrong[bounded(rng, wrong.size())]->id;
    }
    return out;
  };

  LearnerModel m = tutor.new_learner(learner.id);
  std::map<std::string, double> first_gain;
  std::map<std::string, int> posttests;
  LearnerOutcome out;

  for (int step = 0;; ++step) {
    if (step > kMaxSteps) {
      throw Error(errc::kInvalidState, "simulated learner did not finish the course", {{"learner", learner.id}});
    }
    const SessionState s = tutor.start_session(m);
    using K = SessionState::Kind;
    if (s.kind == K::CourseComplete) break;
    if (s.kind == K::AwaitingProfile) {
      tutor.submit_profile(m, simulated_responses(*instrument, learner));
    } else if (s.kind == K::ConceptPretest) {
      try {
        const auto t = tutor.issue_pretest(m, s.cpt);
        tutor.submit_answers(m, t.test_id, answer(m, t));
      } catch (const Error& e) {
        auto detail = e.detail();
        detail["concept"] = s.cpt;
        throw Error(e.code(), e.what(), detail);
      }
    } else if (s.kind == K::ConceptLearning) {
      ++out.presentations;
      if (m.current_variant == learner.true_style) ++out.matched_presentations;
      const double pre = m.progress(s.cpt).pre_score.value_or(0.0);
      IssuedTest t;
      try {
        t = tutor.issue_posttest(m, s.cpt);
      } catch (const Error& e) {
        auto detail = e.detail();
        detail["concept"] = s.cpt;
        throw Error(e.code(), e.what(), detail);
      }
      const auto r = tutor.submit_answers(m, t.test_id, answer(m, t));
      if (posttests[s.cpt]++ == 0) first_gain[s.cpt] = r.report.raw_score - pre;
    } else {
      throw Error(errc::kInvalidState, "unexpected state in simulation", {{"state", to_json(s)}});
    }
  }

  if (!first_gain.empty()) {
    for (const auto& [_, g] : first_gain) out.gain += g;
    out.gain /= static_cast<double>(first_gain.size());
  }
  int total = 0;
  for (const auto& id : pack->topological_order()) {
    total += posttests[id];
    const auto& cs = m.progress(id);
    out.final_bands[id] = cs.band ? std::string(to_string(*cs.band)) : "none";
  }
  out.attempts_per_concept = static_cast<double>(total) / static_cast<double>(pack->concepts.size());
  return out;
}

ExperimentReport run_experiment(std::shared_ptr<const CoursePack> pack, std::shared_ptr<const Rulebook> rules,
                                std::shared_ptr<const Instrument> instrument, const ExperimentConfig& config) {
  if (config.policies.empty()) throw Error(errc::kOutOfRange, "at least one policy is required");
  const auto population = make_population(config.population, config.seed);

  ExperimentReport report;
  report.config = config;
  report.pack_id = pack->id;
  report.rulebook_id = rules->id;
  for (const auto& l : population) report.learner_seeds.push_back(l.seed);

  const std::size_t n = population.size();
  const std::size_t np = config.policies.size();
  std::vector<LearnerOutcome> results(n * np);

  unsigned threads = config.threads > 0 ? static_cast<unsigned>(config.threads) : std::thread::hardware_concurrency();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  std::vector<std::exception_ptr> failures(threads);
  {
    std::vector<std::jthread> workers;
    for (unsigned w = 0; w < threads; ++w) {
      workers.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < n; i += threads) {
            for (std::size_t p = 0; p < np; ++p) {
              results[i * np + p] = run_learner(pack, rules, instrument, population[i], config.policies[p], config);
            }
          }
        } catch (...) {
          failures[w] = std::current_exception();
        }
      });
    }
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  for (std::size_t p = 0; p < np; ++p) {
    PolicySummary s;
    s.policy = config.policies[p];
    for (auto b : kAllBands) s.band_distribution[std::string(to_string(b))] = 0;
    s.band_distribution["none"] = 0;
    int matched = 0;
    int shown = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& r = results[i * np + p];
      s.gains.push_back(r.gain);
      s.mean_gain += r.gain;
      s.mean_attempts += r.attempts_per_concept;
      matched += r.matched_presentations;
      shown += r.presentations;
      for (const auto& [_, b] : r.final_bands) ++s.band_distribution[b];
    }
    s.mean_gain /= static_cast<double>(n);
    s.mean_attempts /= static_cast<double>(n);
    s.match_rate = shown > 0 ? static_cast<double>(matched) / shown : 0.0;
    report.policies.push_back(std::move(s));
  }

  if (const auto* adaptive = report.find(Policy::Adaptive)) {
    for (const auto& s : report.policies) {
      if (s.policy == Policy::Adaptive) continue;
      auto d = paired_difference(adaptive->gains, s.gains);
      d.a = Policy::Adaptive;
      d.b = s.policy;
      report.comparisons.push_back(d);
    }
  }
  return report;
}

nlohmann::json to_json(const ExperimentReport& r) {
  nlohmann::json policies = nlohmann::json::array();
  for (const auto& s : r.policies) {
    policies.push_back({{"policy", to_string(s.policy)},
                        {"mean_gain", s.mean_gain},
                        {"mean_attempts_per_concept", s.mean_attempts},
                        {"match_rate", s.match_rate},
                        {"band_distribution", s.band_distribution},
                        {"gains", s.gains}});
  }
  nlohmann::json comparisons = nlohmann::json::array();
  for (const auto& c : r.comparisons) {
    comparisons.push_back({{"a", to_string(c.a)},
                           {"b", to_string(c.b)},
                           {"mean_difference", c.mean},
                           {"sd", c.sd},
                           {"ci95", {c.ci_low, c.ci_high}},
                           {"excludes_zero", c.excludes_zero()}});
  }
  nlohmann::json policy_names = nlohmann::json::array();
  for (auto p : r.config.policies) policy_names.push_back(to_string(p));
  const auto& pop = r.config.population;
  return {{"config",
           {{"pack", r.pack_id},
            {"rulebook", r.rulebook_id},
            {"population", pop.size},
            {"style_sensitivity", pop.style_sensitivity},
            {"aptitude", {pop.aptitude_min, pop.aptitude_max}},
            {"noise", pop.noise},
            {"policies", policy_names},
            {"fixed_style", to_string(r.config.fixed_style)},
            {"give_up_after", r.config.give_up_after},
            {"seed", r.config.seed}}},
          {"learner_seeds", r.learner_seeds},
          {"policies", policies},
          {"comparisons", comparisons}};
}

std::string summary_table(const ExperimentReport& r) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  out << "population " << r.config.population.size << ", sensitivity " << r.config.population.style_sensitivity
      << ", seed " << r.config.seed << "\n\n";
  out << std::left << std::setw(16) << "policy" << std::right << std::setw(11) << "mean gain" << std::setw(11)
      << "attempts" << std::setw(9) << "match" << "  bands (W/A/G/VG/E/none)\n";
  for (const auto& s : r.policies) {
    out << std::left << std::setw(16) << to_string(s.policy) << std::right << std::setw(11) << s.mean_gain
        << std::setw(11) << s.mean_attempts << std::setw(9) << s.match_rate << "  ";
    const char* sep = "";
    for (auto b : kAllBands) {
      out << sep << s.band_distribution.at(std::string(to_string(b)));
      sep = "/";
    }
    out << "/" << s.band_distribution.at("none") << "\n";
  }
  if (!r.comparisons.empty()) out << "\npaired difference in gain (95% CI)\n";
  for (const auto& c : r.comparisons) {
    out << "  " << to_string(c.a) << " - " << to_string(c.b) << ": " << c.mean << " [" << c.ci_low << ", "
        << c.ci_high << "]" << (c.excludes_zero() ? "" : "  (includes 0)") << "\n";
  }
  return out.str();
}

}  // namespace adaptutor::sim
