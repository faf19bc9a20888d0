#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "adaptutor/records.hpp"
#include "adaptutor/session.hpp"

namespace adaptutor {

struct ApiConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path pack_path;
  std::filesystem::path rules_path;
  std::filesystem::path instrument_path;
  std::filesystem::path records_dir;
  /// Fixed base seed (reproducible mode) or nullopt for entropy.
  std::optional<std::uint64_t> seed = 0;
  std::string teacher_token;
  /// Secret mixed into learner tokens; defaults to the teacher token.
  std::string token_secret;
};

/// Parses "host:port" or ":port" into the config.
void parse_bind(ApiConfig& config, std::string_view bind);

enum class Channel { ToLearner, ToModel };

struct Message {
  std::string id;
  std::string to;
  Channel channel = Channel::ToLearner;
  std::string body;
  bool read = false;
  std::string timestamp;
};

nlohmann::json to_json(const Message& m);

struct HttpRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> headers;  // lower-case names
  std::string body;
};

struct HttpResponse {
  int status = 200;
  nlohmann::json body;
};

/// HTTP status class for an engine error code.
int status_for(const std::string& code);

/// The tutoring engine behind a JSON-over-HTTP API. `handle` is transport
/// independent; `serve` binds it to a socket.
class Service {
 public:
  Service(std::shared_ptr<const CoursePack> pack, std::shared_ptr<const Rulebook> rules,
          std::shared_ptr<const Instrument> instrument, ApiConfig config);
  ~Service();

  /// Loads every file named by the config. Failures name the offending file.
  static std::unique_ptr<Service> from_config(const ApiConfig& config);

  HttpResponse handle(const HttpRequest& request);

  std::string learner_token(const std::string& learner_id) const;
  const Tutor& tutor() const { return tutor_; }
  const RecordStore& records() const { return store_; }

  /// Serves until stop() is called. Returns false if the socket cannot bind.
  bool serve();
  /// Binds to the configured host on an ephemeral port; returns the port.
  int bind_ephemeral();
  bool listen_after_bind();
  void stop();

 private:
  struct Slot {
    std::mutex mu;
    LearnerModel model;
    std::vector<Message> inbox;
    std::map<std::string, HttpResponse> replies;  // idempotency cache
  };

  std::shared_ptr<Slot> slot(const std::string& learner_id);
  HttpResponse route(const HttpRequest& request);
  HttpResponse learner_route(const HttpRequest& req, const std::string& learner_id,
                             const std::vector<std::string>& rest);
  HttpResponse post_message(const HttpRequest& req);
  void commit(Slot& s);
  void save_inbox(const std::string& learner_id, const std::vector<Message>& inbox) const;
  std::vector<Message> load_inbox(const std::string& learner_id) const;
  bool is_teacher(const HttpRequest& req) const;
  bool may_access(const HttpRequest& req, const std::string& learner_id) const;
  nlohmann::json state_view(const LearnerModel& m) const;
  nlohmann::json test_view(const IssuedTest& t) const;
  nlohmann::json content_view(const std::string& learner_id, const Concept& c, const ContentVariant& v) const;

  std::shared_ptr<const CoursePack> pack_;
  std::shared_ptr<const Rulebook> rules_;
  std::shared_ptr<const Instrument> instrument_;
  ApiConfig config_;
  Tutor tutor_;
  RecordStore store_;

  std::mutex slots_mu_;
  std::map<std::string, std::shared_ptr<Slot>> slots_;
  std::mutex teacher_mu_;
  std::map<std::string, HttpResponse> teacher_replies_;
  std::atomic<std::uint64_t> next_message_{1};

  struct Server;
  std::unique_ptr<Server> server_;
};

}  // namespace adaptutor
