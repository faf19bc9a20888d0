#include "adaptutor/records.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "adaptutor/error.hpp"

namespace adaptutor {

namespace fs = std::filesystem;

bool is_valid_learner_id(std::string_view id) {
  if (id.empty() || id.size() > 64 || id.front() == '.') return false;
  return std::all_of(id.begin(), id.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-' || c == '.';
  });
}

RecordStore::RecordStore(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

fs::path RecordStore::log_path(const std::string& id) const { return dir_ / (id + ".log"); }
fs::path RecordStore::snapshot_path(const std::string& id) const { return dir_ / (id + ".snapshot"); }

bool RecordStore::exists(const std::string& id) const { return fs::exists(log_path(id)); }

void RecordStore::append(const std::string& id, std::span<const Event> events) const {
  if (events.empty()) return;
  std::ofstream out(log_path(id), std::ios::app | std::ios::binary);
  if (!out) throw Error(errc::kCorruptRecord, "cannot open log for '" + id + "'", {{"learner", id}});
  for (const auto& e : events) out << to_json(e).dump() << '\n';
  out.flush();
  if (!out) throw Error(errc::kCorruptRecord, "failed to write log for '" + id + "'", {{"learner", id}});
}

std::vector<Event> RecordStore::load(const std::string& id) const {
  std::vector<Event> events;
  std::ifstream in(log_path(id), std::ios::binary);
  if (!in) return events;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      throw Error(errc::kCorruptRecord, "unparseable event line", {{"learner", id}, {"line", lineno}});
    }
    Event e = event_from_json(j);
    if (e.seq != events.size() + 1) {
      throw Error(errc::kCorruptRecord, "event sequence is not contiguous",
                  {{"learner", id}, {"line", lineno}, {"seq", e.seq}});
    }
    events.push_back(std::move(e));
  }
  return events;
}

std::vector<std::string> RecordStore::learners() const {
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(dir_)) {
    if (entry.path().extension() == ".log") out.push_back(entry.path().stem().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void RecordStore::write_snapshot(const LearnerModel& model) const {
  const auto target = snapshot_path(model.learner_id);
  auto tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
    out << to_json(model).dump(2) << '\n';
    if (!out) throw Error(errc::kCorruptRecord, "failed to write snapshot", {{"learner", model.learner_id}});
  }
  fs::rename(tmp, target);
}

std::optional<LearnerModel> RecordStore::read_snapshot(const std::string& id) const {
  std::ifstream in(snapshot_path(id), std::ios::binary);
  if (!in) return std::nullopt;
  try {
    return learner_model_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception&) {
    throw Error(errc::kCorruptRecord, "unparseable snapshot", {{"learner", id}});
  }
}

}  // namespace adaptutor
