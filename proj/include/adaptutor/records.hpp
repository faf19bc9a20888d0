#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adaptutor/learner_model.hpp"

namespace adaptutor {

/// Learner ids double as file names: [A-Za-z0-9_.-], 1-64 chars, no leading dot.
bool is_valid_learner_id(std::string_view id);

/// One `<id>.log` (newline-delimited events, sequence numbers 1, 2, ...) and
/// one `<id>.snapshot` per learner. The log is authoritative; the snapshot
/// is a cache rewritten after every commit.
class RecordStore {
 public:
  explicit RecordStore(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path log_path(const std::string& learner_id) const;
  std::filesystem::path snapshot_path(const std::string& learner_id) const;

  /// Appends events and flushes. Sequence numbers must continue the file.
  void append(const std::string& learner_id, std::span<const Event> events) const;
  /// Reads the log; throws Error(CorruptRecord) on gaps or malformed lines.
  std::vector<Event> load(const std::string& learner_id) const;
  bool exists(const std::string& learner_id) const;
  std::vector<std::string> learners() const;

  void write_snapshot(const LearnerModel& model) const;
  std::optional<LearnerModel> read_snapshot(const std::string& learner_id) const;

 private:
  std::filesystem::path dir_;
};

}  // namespace adaptutor
