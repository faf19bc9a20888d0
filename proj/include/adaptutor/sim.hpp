#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "adaptutor/session.hpp"

namespace adaptutor::sim {

/// Difficulty penalty subtracted from the correctness probability.
double difficulty_penalty(Level level);

struct SimLearner {
  std::string id;
  LearningStyle true_style = LearningStyle::SS;
  double aptitude = 0.5;
  double style_sensitivity = 0.0;
  double noise = 0.0;
  std::uint64_t seed = 0;

  /// clamp(aptitude + sensitivity*match - penalty + noise_draw, 0, 1).
  double p_correct(Level level, bool matched, double noise_draw) const;
};

enum class Policy { Adaptive, FixedVariant, RandomVariant, Oracle };

std::string_view to_string(Policy p);
std::optional<Policy> parse_policy(std::string_view text);

struct PopulationSpec {
  int size = 200;
  double style_sensitivity = 0.3;
  double aptitude_min = 0.35;
  double aptitude_max = 0.65;
  double noise = 0.05;
};

struct ExperimentConfig {
  PopulationSpec population;
  std::vector<Policy> policies = {Policy::Adaptive, Policy::FixedVariant, Policy::RandomVariant, Policy::Oracle};
  LearningStyle fixed_style = LearningStyle::SS;
  std::uint64_t seed = 42;
  int give_up_after = 3;
  /// 0 picks the hardware concurrency.
  int threads = 0;
};

/// Outcome of one learner under one policy.
struct LearnerOutcome {
  /// Mean over taught concepts of (first post-test score - pre-test score).
  double gain = 0.0;
  double attempts_per_concept = 0.0;
  int matched_presentations = 0;
  int presentations = 0;
  std::map<std::string, std::string> final_bands;  // concept -> band id or "none"
};

struct PolicySummary {
  Policy policy = Policy::Adaptive;
  double mean_gain = 0.0;
  double mean_attempts = 0.0;
  double match_rate = 0.0;
  std::map<std::string, int> band_distribution;
  std::vector<double> gains;  // per learner, population order
};

struct PairedDifference {
  Policy a = Policy::Adaptive;
  Policy b = Policy::RandomVariant;
  double mean = 0.0;
  double sd = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;

  bool excludes_zero() const { return ci_low > 0.0 || ci_high < 0.0; }
};

/// Mean of a - b with a normal 95% interval (1.96 standard errors).
PairedDifference paired_difference(const std::vector<double>& a, const std::vector<double>& b);

struct ExperimentReport {
  ExperimentConfig config;
  std::string pack_id;
  std::string rulebook_id;
  std::vector<std::uint64_t> learner_seeds;
  std::vector<PolicySummary> policies;
  std::vector<PairedDifference> comparisons;

  const PolicySummary* find(Policy p) const;
  std::optional<PairedDifference> compare(Policy a, Policy b) const;
};

std::vector<SimLearner> make_population(const PopulationSpec& spec, std::uint64_t seed);

/// Questionnaire answers of a learner whose true style is `style`.
Responses simulated_responses(const Instrument& instrument, const SimLearner& learner);

LearnerOutcome run_learner(std::shared_ptr<const CoursePack> pack, std::shared_ptr<const Rulebook> rules,
                           std::shared_ptr<const Instrument> instrument, const SimLearner& learner, Policy policy,
                           const ExperimentConfig& config);

ExperimentReport run_experiment(std::shared_ptr<const CoursePack> pack, std::shared_ptr<const Rulebook> rules,
                                std::shared_ptr<const Instrument> instrument, const ExperimentConfig& config);

nlohmann::json to_json(const ExperimentReport& r);
std::string summary_table(const ExperimentReport& r);

}  // namespace adaptutor::sim
