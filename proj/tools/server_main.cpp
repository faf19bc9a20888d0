#include <csignal>
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "adaptutor/error.hpp"
#include "adaptutor/service.hpp"

namespace {

adaptutor::Service* g_service = nullptr;

void on_signal(int) {
  if (g_service != nullptr) g_service->stop();
}

// Environment variables take precedence over flags so a container can be
// configured without touching its command line.
void env_override(const char* name, std::string& value) {
  if (const char* v = std::getenv(name); v != nullptr && *v != '\0') value = v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adaptive tutoring engine HTTP service"};
  std::string pack = "packs/demo-computing.json";
  std::string rules = "rules/default.json";
  std::string instrument = "instruments/demo-lsp.json";
  std::string records = "records";
  std::string bind = "127.0.0.1:8080";
  std::string seed = "0";
  std::string teacher_token;
  app.add_option("--pack", pack, "course pack document");
  app.add_option("--rules", rules, "rulebook document");
  app.add_option("--instrument", instrument, "questionnaire document");
  app.add_option("--records", records, "directory for learner event logs");
  app.add_option("--bind", bind, "host:port to listen on");
  app.add_option("--seed", seed, "base selection seed, or 'entropy'");
  app.add_option("--teacher-token", teacher_token, "bearer token for teacher routes; empty disables auth");
  CLI11_PARSE(app, argc, argv);

  env_override("ADAPTUTOR_PACK", pack);
  env_override("ADAPTUTOR_RULES", rules);
  env_override("ADAPTUTOR_INSTRUMENT", instrument);
  env_override("ADAPTUTOR_RECORDS", records);
  env_override("ADAPTUTOR_BIND", bind);
  env_override("ADAPTUTOR_SEED", seed);
  env_override("ADAPTUTOR_TEACHER_TOKEN", teacher_token);

  adaptutor::ApiConfig config;
  config.pack_path = pack;
  config.rules_path = rules;
  config.instrument_path = instrument;
  config.records_dir = records;
  config.teacher_token = teacher_token;
  try {
    adaptutor::parse_bind(config, bind);
    if (seed == "entropy") {
      config.seed.reset();
    } else {
      config.seed = std::stoull(seed);
    }
  } catch (const std::exception& e) {
    std::cerr << "bad configuration: " << e.what() << "\n";
    return 2;
  }

  std::unique_ptr<adaptutor::Service> service;
  try {
    service = adaptutor::Service::from_config(config);
  } catch (const adaptutor::Error& e) {
    std::cerr << e.code() << ": " << e.what() << "\n";
    return 1;
  }
  g_service = service.get();
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  std::cerr << "listening on " << config.host << ":" << config.port << "\n";
  if (!service->serve()) {
    std::cerr << "cannot listen on " << bind << "\n";
    return 1;
  }
  return 0;
}
