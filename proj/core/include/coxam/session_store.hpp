#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "coxam/json_io.hpp"

namespace coxam {

/// A persisted session: its configuration and the records appended so far, in order.
struct StoredSession {
  std::string id;
  SessionConfig config;
  std::vector<TrialRecord> records;
};

/// Append-only storage of trial logs. Implementations serialize writers per session.
class SessionStore {
 public:
  virtual ~SessionStore() = default;
  /// Throws kConflict if the id exists.
  virtual void create(const std::string& id, const SessionConfig& config) = 0;
  /// Throws kNotFound for unknown ids.
  virtual void append(const std::string& id, const TrialRecord& record) = 0;
  virtual StoredSession load(const std::string& id) const = 0;
  virtual bool exists(const std::string& id) const = 0;
  virtual std::vector<std::string> list() const = 0;
  /// The trial log as JSONL (header line, then one record per line).
  virtual std::string jsonl(const std::string& id) const = 0;
};

class MemorySessionStore final : public SessionStore {
 public:
  void create(const std::string& id, const SessionConfig& config) override;
  void append(const std::string& id, const TrialRecord& record) override;
  StoredSession load(const std::string& id) const override;
  bool exists(const std::string& id) const override;
  std::vector<std::string> list() const override;
  std::string jsonl(const std::string& id) const override;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::vector<std::string>> lines_;
};

/// One `<id>.jsonl` file per session under `root`, plus `index.jsonl` naming every session.
/// Each append is a single flushed line; a torn final line is ignored on load.
class FileSessionStore final : public SessionStore {
 public:
  explicit FileSessionStore(std::string root);

  void create(const std::string& id, const SessionConfig& config) override;
  void append(const std::string& id, const TrialRecord& record) override;
  StoredSession load(const std::string& id) const override;
  bool exists(const std::string& id) const override;
  std::vector<std::string> list() const override;
  std::string jsonl(const std::string& id) const override;

  const std::string& root() const { return root_; }

 private:
  std::string path_for(const std::string& id) const;
  std::mutex& lock_for(const std::string& id);

  std::string root_;
  mutable std::mutex registry_mutex_;
  std::map<std::string, std::unique_ptr<std::mutex>> locks_;
};

/// Session ids become file names, so they are restricted to [A-Za-z0-9_-]{1,64}.
bool valid_session_id(const std::string& id);

/// First line of every trial log.
Json session_header(const std::string& id, const SessionConfig& config);

/// Parses a JSONL trial log. Blank lines and a torn trailing line are skipped; any other
/// malformed line throws kParse naming its line number.
StoredSession parse_session_jsonl(const std::string& text);

}  // namespace coxam
