#include "coxam/session_store.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace coxam {

bool valid_session_id(const std::string& id) {
  if (id.empty() || id.size() > 64) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
  });
}

namespace {

void require_valid_id(const std::string& id) {
  if (!valid_session_id(id)) {
    throw Error(ErrorCode::kValidation, "session id must match [A-Za-z0-9_-]{1,64}");
  }
}

}  // namespace

Json session_header(const std::string& id, const SessionConfig& config) {
  Json config_json = to_json(config);
  return Json{{"schema_version", kSchemaVersion}, {"kind", "session"}, {"session_id", id}, {"config", config_json}};
}

StoredSession parse_session_jsonl(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  const bool torn_tail = !text.empty() && text.back() != '\n';

  StoredSession out;
  bool have_header = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::exception&) {
      if (torn_tail && i + 1 == lines.size()) break;
      throw Error(ErrorCode::kParse, "trial log line " + std::to_string(i + 1) + " is not JSON");
    }
    if (!have_header) {
      check_schema_version(j, "trial log header");
      if (j.value("kind", "") != "session") throw Error(ErrorCode::kParse, "trial log must start with a session header");
      out.id = j.at("session_id").get<std::string>();
      out.config = session_config_from_json(j.at("config"));
      have_header = true;
      continue;
    }
    try {
      out.records.push_back(trial_record_from_json(j));
    } catch (const Error& e) {
      throw Error(ErrorCode::kParse, "trial log line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  if (!have_header) throw Error(ErrorCode::kParse, "trial log has no header");
  return out;
}

void MemorySessionStore::create(const std::string& id, const SessionConfig& config) {
  require_valid_id(id);
  std::lock_guard lock(mutex_);
  if (lines_.count(id)) throw Error(ErrorCode::kConflict, "session '" + id + "' already exists");
  lines_[id].push_back(session_header(id, config).dump());
}

void MemorySessionStore::append(const std::string& id, const TrialRecord& record) {
  const std::string line = to_json(record).dump();
  std::lock_guard lock(mutex_);
  auto it = lines_.find(id);
  if (it == lines_.end()) throw Error(ErrorCode::kNotFound, "unknown session '" + id + "'");
  it->second.push_back(line);
}

StoredSession MemorySessionStore::load(const std::string& id) const { return parse_session_jsonl(jsonl(id)); }

bool MemorySessionStore::exists(const std::string& id) const {
  std::lock_guard lock(mutex_);
  return lines_.count(id) > 0;
}

std::vector<std::string> MemorySessionStore::list() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, lines] : lines_) ids.push_back(id);
  return ids;
}

std::string MemorySessionStore::jsonl(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = lines_.find(id);
  if (it == lines_.end()) throw Error(ErrorCode::kNotFound, "unknown session '" + id + "'");
  std::string out;
  for (const auto& l : it->second) out += l + '\n';
  return out;
}

FileSessionStore::FileSessionStore(std::string root) : root_(std::move(root)) {
  std::error_code ec;
  std::filesystem::create_directories(root_, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create session directory " + root_ + ": " + ec.message());
}

std::string FileSessionStore::path_for(const std::string& id) const {
  return (std::filesystem::path(root_) / (id + ".jsonl")).string();
}

std::mutex& FileSessionStore::lock_for(const std::string& id) {
  std::lock_guard lock(registry_mutex_);
  auto& slot = locks_[id];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

void FileSessionStore::create(const std::string& id, const SessionConfig& config) {
  require_valid_id(id);
  std::lock_guard lock(lock_for(id));
  const std::string path = path_for(id);
  if (std::filesystem::exists(path)) throw Error(ErrorCode::kConflict, "session '" + id + "' already exists");
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot create " + path);
    out << session_header(id, config).dump() << '\n';
    out.flush();
    if (!out) throw Error(ErrorCode::kIo, "write failed for " + path);
  }
  std::lock_guard registry(registry_mutex_);
  std::ofstream index(std::filesystem::path(root_) / "index.jsonl", std::ios::binary | std::ios::app);
  index << Json{{"schema_version", kSchemaVersion}, {"session_id", id}, {"file", id + ".jsonl"}}.dump() << '\n';
  index.flush();
  if (!index) throw Error(ErrorCode::kIo, "cannot update the session index in " + root_);
}

void FileSessionStore::append(const std::string& id, const TrialRecord& record) {
  require_valid_id(id);
  const std::string line = to_json(record).dump() + '\n';
  std::lock_guard lock(lock_for(id));
  const std::string path = path_for(id);
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::kNotFound, "unknown session '" + id + "'");
  std::ofstream out(path, std::ios::binary | std::ios::app);
  out << line;
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "append failed for " + path);
}

StoredSession FileSessionStore::load(const std::string& id) const { return parse_session_jsonl(jsonl(id)); }

bool FileSessionStore::exists(const std::string& id) const {
  return valid_session_id(id) && std::filesystem::exists(path_for(id));
}

std::vector<std::string> FileSessionStore::list() const {
  std::vector<std::string> ids;
  for (const auto& entry : std::filesystem::directory_iterator(root_)) {
    const auto name = entry.path().filename().string();
    if (name == "index.jsonl" || entry.path().extension() != ".jsonl") continue;
    ids.push_back(entry.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::string FileSessionStore::jsonl(const std::string& id) const {
  require_valid_id(id);
  std::ifstream in(path_for(id), std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, "unknown session '" + id + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace coxam
