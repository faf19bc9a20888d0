#include "adaptutor/service.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <httplib.h>

#include "adaptutor/error.hpp"
#include "adaptutor/rng.hpp"

namespace adaptutor {

namespace {

const std::map<std::string, int>& status_table() {
  static const std::map<std::string, int> table = {
      {errc::kUnauthorized, 401},
      {errc::kNotFound, 404},
      {errc::kUnknownConcept, 404},
      {errc::kUnknownTest, 404},
      {errc::kUnknownPack, 404},
      {errc::kMethodNotAllowed, 405},
      {errc::kInvalidState, 409},
      {errc::kHintBudgetExhausted, 409},
      {errc::kNoMoreHints, 409},
      {errc::kMalformedDocument, 422},
      {errc::kMissingResponse, 422},
      {errc::kOutOfRangeResponse, 422},
      {errc::kUnknownItem, 422},
      {errc::kUnansweredQuestion, 422},
      {errc::kUnknownChoice, 422},
      {errc::kUnknownQuestion, 422},
      {errc::kHintsExceeded, 422},
      {errc::kOutOfRange, 422},
      {errc::kInvalidLearnerId, 422},
      {errc::kBankExhausted, 500},
      {errc::kReplayDivergence, 500},
      {errc::kCorruptRecord, 500},
  };
  return table;
}

HttpResponse error_response(int status, const std::string& code, const std::string& message,
                            const nlohmann::json& detail = nlohmann::json::object()) {
  return {status, {{"code", code}, {"message", message}, {"detail", detail}}};
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::string cur;
  const auto end = path.find('?');
  for (char c : path.substr(0, end)) {
    if (c == '/') {
      if (!cur.empty()) parts.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) parts.push_back(std::move(cur));
  return parts;
}

nlohmann::json parse_body(const HttpRequest& req) {
  if (req.body.empty()) return nlohmann::json::object();
  try {
    return nlohmann::json::parse(req.body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(errc::kMalformedDocument, std::string("request body is not JSON: ") + e.what());
  }
}

nlohmann::json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::kMalformedDocument, "cannot open " + path.string(), {{"file", path.string()}});
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(errc::kMalformedDocument, path.string() + ": " + e.what(), {{"file", path.string()}});
  }
}

template <typename T, typename F>
std::shared_ptr<const T> load_named(const std::filesystem::path& path, F&& parse) {
  try {
    return std::make_shared<const T>(parse(load_json_file(path)));
  } catch (const Error& e) {
    auto detail = e.detail();
    detail["file"] = path.string();
    throw Error(e.code(), path.string() + ": " + e.what(), detail);
  }
}

std::string_view to_string(Channel c) { return c == Channel::ToLearner ? "ToLearner" : "ToModel"; }

std::string header(const HttpRequest& req, const std::string& name) {
  auto it = req.headers.find(name);
  return it == req.headers.end() ? std::string{} : it->second;
}

}  // namespace

int status_for(const std::string& code) {
  auto it = status_table().find(code);
  return it == status_table().end() ? 500 : it->second;
}

void parse_bind(ApiConfig& config, std::string_view bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string_view::npos) throw Error(errc::kMalformedDocument, "bind address must be host:port");
  if (colon > 0) config.host = std::string(bind.substr(0, colon));
  config.port = std::stoi(std::string(bind.substr(colon + 1)));
}

nlohmann::json to_json(const Message& m) {
  return {{"id", m.id},
          {"to", m.to},
          {"channel", to_string(m.channel)},
          {"body", m.body},
          {"read", m.read},
          {"timestamp", m.timestamp}};
}

struct Service::Server {
  httplib::Server http;
};

Service::Service(std::shared_ptr<const CoursePack> pack, std::shared_ptr<const Rulebook> rules,
                 std::shared_ptr<const Instrument> instrument, ApiConfig config)
    : pack_(pack),
      rules_(rules),
      instrument_(instrument),
      config_(std::move(config)),
      tutor_(pack, rules, instrument,
             SessionConfig{3, 0, config_.seed.has_value(), config_.seed.value_or(0)}),
      store_(config_.records_dir) {
  if (config_.token_secret.empty()) config_.token_secret = config_.teacher_token;
  tutor_.set_event_sink([this](const LearnerModel& m, std::span<const Event> events) {
    store_.append(m.learner_id, events);
  });
}

Service::~Service() { stop(); }

std::unique_ptr<Service> Service::from_config(const ApiConfig& config) {
  auto pack = load_named<CoursePack>(config.pack_path, load_course_pack);
  auto rules = load_named<Rulebook>(config.rules_path, parse_rulebook);
  auto instrument = load_named<Instrument>(config.instrument_path, validate_instrument);
  if (config.records_dir.empty()) throw Error(errc::kMalformedDocument, "records directory is required");
  return std::make_unique<Service>(pack, rules, instrument, config);
}

std::string Service::learner_token(const std::string& learner_id) const {
  const std::uint64_t h = fnv1a(config_.token_secret + ":" + learner_id, fnv1a("adaptutor-learner"));
  std::ostringstream out;
  out << std::hex << h;
  return out.str();
}

bool Service::is_teacher(const HttpRequest& req) const {
  if (config_.teacher_token.empty()) return true;
  return header(req, "authorization") == "Bearer " + config_.teacher_token;
}

bool Service::may_access(const HttpRequest& req, const std::string& learner_id) const {
  return is_teacher(req) || header(req, "authorization") == "Bearer " + learner_token(learner_id);
}

std::shared_ptr<Service::Slot> Service::slot(const std::string& learner_id) {
  std::lock_guard lock(slots_mu_);
  auto it = slots_.find(learner_id);
  if (it != slots_.end()) return it->second;
  auto s = std::make_shared<Slot>();
  s->model = store_.exists(learner_id) ? tutor_.replay(learner_id, store_.load(learner_id))
                                       : tutor_.new_learner(learner_id);
  s->inbox = load_inbox(learner_id);
  slots_[learner_id] = s;
  return s;
}

void Service::commit(Slot& s) {
  if (!s.model.event_log.empty()) store_.write_snapshot(s.model);
}

void Service::save_inbox(const std::string& learner_id, const std::vector<Message>& inbox) const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& m : inbox) arr.push_back(to_json(m));
  const auto path = store_.dir() / (learner_id + ".inbox");
  std::ofstream out(path, std::ios::trunc);
  out << arr.dump(2) << '\n';
}

std::vector<Message> Service::load_inbox(const std::string& learner_id) const {
  std::vector<Message> out;
  std::ifstream in(store_.dir() / (learner_id + ".inbox"));
  if (!in) return out;
  for (const auto& j : nlohmann::json::parse(in)) {
    out.push_back({j.at("id"), j.at("to"), Channel::ToLearner, j.at("body"), j.at("read"), j.at("timestamp")});
  }
  return out;
}

HttpResponse Service::handle(const HttpRequest& request) {
  try {
    return route(request);
  } catch (const Error& e) {
    return error_response(status_for(e.code()), e.code(), e.what(), e.detail());
  } catch (const nlohmann::json::exception& e) {
    return error_response(422, errc::kMalformedDocument, e.what());
  } catch (const std::exception& e) {
    return error_response(500, "InternalError", e.what());
  }
}

HttpResponse Service::route(const HttpRequest& req) {
  const auto parts = split_path(req.path);
  auto method_is = [&](const char* m) {
    if (req.method != m) throw Error(errc::kMethodNotAllowed, req.method + " is not supported on " + req.path);
  };

  if (parts.size() == 1 && parts[0] == "health") {
    method_is("GET");
    return {200, {{"status", "ok"}, {"pack_id", pack_->id}, {"rulebook_id", rules_->id}}};
  }
  if (parts.size() == 1 && parts[0] == "instrument") {
    method_is("GET");
    return {200, to_json(*instrument_)};
  }
  if (parts.size() >= 2 && parts[0] == "teacher") {
    if (!is_teacher(req)) throw Error(errc::kUnauthorized, "teacher token required");
    if (parts.size() == 2 && parts[1] == "messages") {
      method_is("POST");
      const auto key = header(req, "idempotency-key");
      std::lock_guard lock(teacher_mu_);
      if (!key.empty()) {
        if (auto it = teacher_replies_.find(key); it != teacher_replies_.end()) return it->second;
      }
      auto reply = post_message(req);
      if (!key.empty()) teacher_replies_[key] = reply;
      return reply;
    }
    if (parts.size() == 4 && parts[1] == "learners" && parts[3] == "token") {
      method_is("POST");
      if (!is_valid_learner_id(parts[2])) throw Error(errc::kInvalidLearnerId, "invalid learner id");
      return {200, {{"learner_id", parts[2]}, {"token", learner_token(parts[2])}}};
    }
  }
  if (parts.size() >= 3 && parts[0] == "learners") {
    const auto& id = parts[1];
    if (!is_valid_learner_id(id)) throw Error(errc::kInvalidLearnerId, "invalid learner id", {{"learner", id}});
    if (!may_access(req, id)) throw Error(errc::kUnauthorized, "token does not grant access to this learner");
    return learner_route(req, id, {parts.begin() + 2, parts.end()});
  }
  throw Error(errc::kNotFound, "no route for " + req.path, {{"path", req.path}});
}

HttpResponse Service::post_message(const HttpRequest& req) {
  const auto body = parse_body(req);
  const auto to = body.at("to").get<std::string>();
  if (!is_valid_learner_id(to)) throw Error(errc::kInvalidLearnerId, "invalid learner id", {{"learner", to}});
  const auto channel_text = body.value("channel", std::string("ToLearner"));
  if (channel_text != "ToLearner" && channel_text != "ToModel") {
    throw Error(errc::kMalformedDocument, "channel must be ToLearner or ToModel");
  }
  Message msg;
  msg.id = "m" + std::to_string(fnv1a(utc_now() + to) % 1000000) + "-" + std::to_string(next_message_++);
  msg.to = to;
  msg.channel = channel_text == "ToLearner" ? Channel::ToLearner : Channel::ToModel;
  msg.body = body.at("body").get<std::string>();
  msg.timestamp = utc_now();

  auto s = slot(to);
  std::lock_guard lock(s->mu);
  if (msg.channel == Channel::ToLearner) {
    s->inbox.push_back(msg);
    save_inbox(to, s->inbox);
  } else {
    tutor_.annotate(s->model, {{"id", msg.id}, {"body", msg.body}, {"channel", "ToModel"}});
    commit(*s);
  }
  return {201, to_json(msg)};
}

nlohmann::json Service::state_view(const LearnerModel& m) const {
  const SessionState st = tutor_.start_session(m);
  nlohmann::json progress = nlohmann::json::array();
  for (const auto& id : pack_->topological_order()) {
    const Concept& c = *pack_->find_concept(id);
    const auto& cs = m.progress(id);
    progress.push_back({{"concept", id},
                        {"title", c.title},
                        {"band", cs.band ? nlohmann::json(to_string(*cs.band)) : nlohmann::json()},
                        {"band_label", cs.band ? nlohmann::json(display_name(*cs.band)) : nlohmann::json()},
                        {"score", cs.score ? nlohmann::json(*cs.score) : nlohmann::json()},
                        {"attempts", cs.attempts},
                        {"closed", cs.closed}});
  }
  nlohmann::json cpt = nullptr;
  if (!st.cpt.empty()) cpt = {{"id", st.cpt}, {"title", pack_->find_concept(st.cpt)->title}};
  nlohmann::json active = nullptr;
  if (m.active_test) {
    int spent = 0;
    for (const auto& [_, n] : m.active_test->hints_used) spent += n;
    active = {{"test_id", m.active_test->test_id},
              {"concept", m.active_test->cpt},
              {"phase", to_string(m.active_test->phase)},
              {"hint_budget", m.active_test->hint_budget},
              {"hints_remaining", std::max(0, m.active_test->hint_budget - spent)}};
  }
  return {{"learner_id", m.learner_id},
          {"pack_id", pack_->id},
          {"state", to_json(st)},
          {"concept", cpt},
          {"variant", m.current_variant ? nlohmann::json(to_string(*m.current_variant)) : nlohmann::json()},
          {"style_vector", m.style_vector ? to_json(*m.style_vector) : nlohmann::json()},
          {"dominant_style", m.style_vector ? nlohmann::json(to_string(dominant_style(*m.style_vector))) : nlohmann::json()},
          {"active_test", active},
          {"progress", progress}};
}

nlohmann::json Service::test_view(const IssuedTest& t) const {
  const Concept& c = *pack_->find_concept(t.cpt);
  nlohmann::json questions = nlohmann::json::array();
  for (const auto& qid : t.instance.questions) {
    const Question& q = *c.find_question(qid);
    nlohmann::json choices = nlohmann::json::array();
    for (const auto& ch : q.choices) choices.push_back({{"id", ch.id}, {"body", ch.body}});
    questions.push_back({{"id", q.id},
                         {"section", q.section},
                         {"level", to_string(q.level)},
                         {"dimension", to_string(q.dimension)},
                         {"points", q.points},
                         {"body", q.body},
                         {"choices", choices},
                         {"hints_available", q.hints.size()}});
  }
  return {{"test_id", t.test_id},
          {"concept", t.cpt},
          {"phase", to_string(t.phase)},
          {"hint_budget", t.hint_budget},
          {"questions", questions}};
}

nlohmann::json Service::content_view(const std::string& learner_id, const Concept& c, const ContentVariant& v) const {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : v.blocks) {
    nlohmann::json links = nlohmann::json::array();
    for (const auto& link : b.links) {
      if (is_external_link(link)) {
        links.push_back({{"kind", "external"}, {"href", link}});
      } else {
        links.push_back({{"kind", "concept"},
                         {"concept", link},
                         {"title", pack_->find_concept(link)->title},
                         {"href", "/learners/" + learner_id + "/concepts/" + link + "/content"}});
      }
    }
    blocks.push_back({{"kind", to_string(b.kind)}, {"body", b.body}, {"links", links}});
  }
  return {{"concept", c.id}, {"title", c.title}, {"style", to_string(v.style)}, {"blocks", blocks}};
}

HttpResponse Service::learner_route(const HttpRequest& req, const std::string& id,
                                    const std::vector<std::string>& rest) {
  auto s = slot(id);
  std::lock_guard lock(s->mu);

  const bool mutating = req.method != "GET";
  const auto key = header(req, "idempotency-key");
  const std::string cache_key = req.method + " " + req.path + " " + key;
  if (mutating && !key.empty()) {
    if (auto it = s->replies.find(cache_key); it != s->replies.end()) return it->second;
  }
  auto method_is = [&](const char* m) {
    if (req.method != m) throw Error(errc::kMethodNotAllowed, req.method + " is not supported on " + req.path);
  };

  HttpResponse reply;
  LearnerModel& m = s->model;
  if (rest.size() == 1 && rest[0] == "profile") {
    method_is("POST");
    const auto body = parse_body(req);
    const auto state = tutor_.submit_profile(m, body.at("responses").get<Responses>());
    commit(*s);
    reply = {200,
             {{"style_vector", to_json(*m.style_vector)},
              {"dominant_style", to_string(dominant_style(*m.style_vector))},
              {"state", to_json(state)}}};
  } else if (rest.size() == 1 && rest[0] == "state") {
    method_is("GET");
    reply = {200, state_view(m)};
  } else if (rest.size() == 1 && rest[0] == "events") {
    method_is("GET");
    if (!is_teacher(req)) throw Error(errc::kUnauthorized, "teacher token required");
    nlohmann::json events = nlohmann::json::array();
    for (const auto& e : m.event_log) events.push_back(to_json(e));
    reply = {200, {{"learner_id", id}, {"events", events}}};
  } else if (rest.size() == 3 && rest[0] == "concepts" && (rest[2] == "pretest" || rest[2] == "posttest")) {
    method_is("POST");
    const auto t = rest[2] == "pretest" ? tutor_.issue_pretest(m, rest[1]) : tutor_.issue_posttest(m, rest[1]);
    commit(*s);
    reply = {200, test_view(t)};
  } else if (rest.size() == 3 && rest[0] == "concepts" && rest[2] == "content") {
    method_is("GET");
    const Concept& c = tutor_.concept_or_throw(rest[1]);
    reply = {200, content_view(id, c, tutor_.content(m, rest[1]))};
  } else if (rest.size() == 3 && rest[0] == "tests" && rest[2] == "answers") {
    method_is("POST");
    const auto body = parse_body(req);
    const auto test = m.active_test;
    const auto result = tutor_.submit_answers(m, rest[1], body.at("answers").get<Answers>());
    commit(*s);
    nlohmann::json out = {{"report", to_json(result.report)}, {"state", to_json(result.state)}};
    out["flow"] = result.flow ? nlohmann::json(to_string(*result.flow)) : nlohmann::json();
    if (test && test->phase == TestPhase::PostTest) {
      const Concept& c = *pack_->find_concept(test->cpt);
      nlohmann::json solutions = nlohmann::json::object();
      for (const auto& qid : test->instance.questions) {
        for (const auto& ch : c.find_question(qid)->choices) {
          if (ch.correct) solutions[qid] = ch.id;
        }
      }
      out["solutions"] = solutions;
    }
    reply = {200, out};
  } else if (rest.size() == 5 && rest[0] == "tests" && rest[2] == "questions" && rest[4] == "hint") {
    method_is("POST");
    std::string hint;
    try {
      hint = tutor_.request_hint(m, rest[1], rest[3]);
    } catch (const Error& e) {
      if (e.code() == errc::kUnknownQuestion) throw Error(errc::kNotFound, e.what(), e.detail());
      throw;
    }
    commit(*s);
    int spent = 0;
    for (const auto& [_, n] : m.active_test->hints_used) spent += n;
    reply = {200, {{"hint", hint}, {"question", rest[3]}, {"remaining_budget", m.active_test->hint_budget - spent}}};
  } else if (rest.size() == 1 && rest[0] == "inbox") {
    method_is("GET");
    nlohmann::json msgs = nlohmann::json::array();
    for (const auto& msg : s->inbox) msgs.push_back(to_json(msg));
    reply = {200, {{"learner_id", id}, {"messages", msgs}}};
  } else if (rest.size() == 3 && rest[0] == "inbox" && rest[2] == "read") {
    method_is("POST");
    auto it = std::find_if(s->inbox.begin(), s->inbox.end(), [&](const Message& msg) { return msg.id == rest[1]; });
    if (it == s->inbox.end()) throw Error(errc::kNotFound, "no message '" + rest[1] + "'");
    it->read = true;
    save_inbox(id, s->inbox);
    reply = {200, to_json(*it)};
  } else {
    throw Error(errc::kNotFound, "no route for " + req.path, {{"path", req.path}});
  }

  if (mutating && !key.empty()) s->replies[cache_key] = reply;
  return reply;
}

// ---- transport -----------------------------------------------------------

namespace {

HttpRequest from_httplib(const httplib::Request& r) {
  HttpRequest req;
  req.method = r.method;
  req.path = r.path;
  req.body = r.body;
  for (const auto& [k, v] : r.headers) {
    std::string name = k;
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
    req.headers[name] = v;
  }
  return req;
}

}  // namespace

bool Service::serve() {
  if (!server_) {
    server_ = std::make_unique<Server>();
    auto handler = [this](const httplib::Request& r, httplib::Response& res) {
      const auto out = handle(from_httplib(r));
      res.status = out.status;
      res.set_content(out.body.dump(), "application/json");
    };
    server_->http.Get(".*", handler);
    server_->http.Post(".*", handler);
    server_->http.Put(".*", handler);
    server_->http.Delete(".*", handler);
  }
  return server_->http.listen(config_.host, config_.port);
}

int Service::bind_ephemeral() {
  server_ = std::make_unique<Server>();
  auto handler = [this](const httplib::Request& r, httplib::Response& res) {
    const auto out = handle(from_httplib(r));
    res.status = out.status;
    res.set_content(out.body.dump(), "application/json");
  };
  server_->http.Get(".*", handler);
  server_->http.Post(".*", handler);
  server_->http.Put(".*", handler);
  server_->http.Delete(".*", handler);
  return server_->http.bind_to_any_port(config_.host);
}

bool Service::listen_after_bind() { return server_ && server_->http.listen_after_bind(); }

void Service::stop() {
  if (server_) server_->http.stop();
}

}  // namespace adaptutor
