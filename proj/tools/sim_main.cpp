#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "adaptutor/error.hpp"
#include "adaptutor/sim.hpp"

namespace {

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw adaptutor::Error(adaptutor::errc::kMalformedDocument, "cannot open " + path);
  return nlohmann::json::parse(in);
}

}  // namespace

int main(int argc, char** argv) {
  using namespace adaptutor;
  CLI::App app{"compare adaptive and non-adaptive sequencing on simulated learners"};
  std::string pack_path = "packs/demo-computing.json";
  std::string rules_path = "rules/default.json";
  std::string instrument_path = "instruments/demo-lsp.json";
  std::string out_path;
  std::string fixed = "SS";
  sim::ExperimentConfig config;
  app.add_option("--pack", pack_path, "course pack document");
  app.add_option("--rules", rules_path, "rulebook document");
  app.add_option("--instrument", instrument_path, "questionnaire document");
  app.add_option("--population", config.population.size, "number of simulated learners")->check(CLI::PositiveNumber);
  app.add_option("--sensitivity", config.population.style_sensitivity, "style sensitivity")->check(CLI::Range(0.0, 1.0));
  app.add_option("--noise", config.population.noise, "sd of the per-question noise draw")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", config.seed, "experiment seed");
  app.add_option("--fixed-style", fixed, "variant used by the fixed-variant policy");
  app.add_option("--threads", config.threads, "worker threads (0 = all cores)");
  app.add_option("--out", out_path, "write the JSON report here");
  CLI11_PARSE(app, argc, argv);

  try {
    const auto style = parse_style(fixed);
    if (!style) throw Error(errc::kMalformedDocument, "unknown style '" + fixed + "'");
    config.fixed_style = *style;
    auto pack = std::make_shared<const CoursePack>(load_course_pack(read_json(pack_path)));
    auto rules = std::make_shared<const Rulebook>(parse_rulebook(read_json(rules_path)));
    auto instrument = std::make_shared<const Instrument>(validate_instrument(read_json(instrument_path)));
    const auto report = sim::run_experiment(pack, rules, instrument, config);
    if (!out_path.empty()) {
      std::ofstream out(out_path);
      out << sim::to_json(report).dump(2) << "\n";
    }
    std::cout << sim::summary_table(report);
  } catch (const Error& e) {
    std::cerr << e.code() << ": " << e.what() << " " << e.detail().dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}
