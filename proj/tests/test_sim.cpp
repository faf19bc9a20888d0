#include <doctest.h>

#include "adaptutor/sim.hpp"
#include "support.hpp"

using namespace adaptutor;

namespace {

sim::ExperimentReport run(int population, double sensitivity, std::uint64_t seed = 42) {
  sim::ExperimentConfig cfg;
  cfg.population.size = population;
  cfg.population.style_sensitivity = sensitivity;
  cfg.seed = seed;
  return sim::run_experiment(testsupport::demo_pack(), testsupport::default_rules(), testsupport::demo_instrument(),
                             cfg);
}

}  // namespace

TEST_CASE("learner model") {
  sim::SimLearner l;
  l.aptitude = 0.5;
  l.style_sensitivity = 0.3;
  CHECK(l.p_correct(Level::L1, true, 0) == doctest::Approx(0.8));
  CHECK(l.p_correct(Level::L3, false, 0) == doctest::Approx(0.2));
  CHECK(l.p_correct(Level::L2, true, 1.0) == 1.0);
  CHECK(l.p_correct(Level::L3, false, -1.0) == 0.0);
}

TEST_CASE("questionnaire answers reveal the true style") {
  const auto pop = sim::make_population({50, 0.3, 0.35, 0.65, 0.05}, 9);
  for (const auto& l : pop) {
    const auto v = score_questionnaire(*testsupport::demo_instrument(), sim::simulated_responses(*testsupport::demo_instrument(), l));
    CHECK(dominant_style(v) == l.true_style);
  }
}

TEST_CASE("paired difference interval") {
  const auto d = sim::paired_difference({1, 2, 3, 4}, {0, 0, 0, 0});
  CHECK(d.mean == doctest::Approx(2.5));
  CHECK(d.sd == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(d.ci_low == doctest::Approx(2.5 - 1.96 * std::sqrt(5.0 / 3.0) / 2));
  CHECK(d.excludes_zero());
}

TEST_CASE("reports are reproducible") {
  const auto a = sim::to_json(run(12, 0.3, 5)).dump();
  const auto b = sim::to_json(run(12, 0.3, 5)).dump();
  CHECK(a == b);
  CHECK(sim::to_json(run(12, 0.3, 6)).dump() != a);
}

TEST_CASE("a single style-blind learner gains the same under every policy") {
  const auto r = run(1, 0.0);
  const double g = r.find(sim::Policy::Adaptive)->mean_gain;
  for (const auto& p : r.policies) CHECK(std::abs(p.mean_gain - g) <= 15.0);
}

TEST_CASE("advantage grows with sensitivity and never beats the oracle") {
  double last = -1e9;
  for (double s : {0.0, 0.15, 0.3}) {
    const auto r = run(60, s, 3);
    const double adv = r.compare(sim::Policy::Adaptive, sim::Policy::RandomVariant)->mean;
    CHECK(adv >= last - 1.0);
    last = adv;
    if (s > 0) {
      // the oracle is only an upper bound up to sampling noise on 60 learners
      CHECK(r.find(sim::Policy::Adaptive)->mean_gain <= r.find(sim::Policy::Oracle)->mean_gain + 1.0);
    }
  }
  CHECK(last > 5.0);
}
