#include "valsim/runstore.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <ctime>

#include "jsonl.hpp"
#include "valsim/error.hpp"
#include "valsim/prompts.hpp"
#include "valsim/values.hpp"

namespace valsim {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

// ---- schemas ---------------------------------------------------------------
//
// A schema node is a type name ("string", "int", "uint", "number", "bool",
// "any", or a domain enum: "value", "task", "speaker", "person",
// "placement"), optionally suffixed with '?' for nullable; a one-element
// array (array of that node); or an object of required fields.

const json& schema_for(RecordType type) {
  static const json pvq_run = json::parse(R"({
    "condition": {"person": "person", "placement": "placement", "include_definition": "bool",
                  "language": "string", "value": "value"},
    "iteration": "int",
    "order_seed": "uint",
    "responses": [{"item": "int", "raw": "string", "rating": "int?"}]
  })");
  static const json transcript = json::parse(R"({
    "pair": ["value"],
    "task": "task",
    "repetition": "int",
    "turns": [{"speaker": "speaker", "text": "string"}]
  })");
  static const json evaluation = json::parse(R"({
    "evaluator_value": "value", "target_value": "value", "task": "task", "repetition": "int",
    "language": "string", "evaluator_role": "speaker", "trust_items": ["int?"], "trust_mean": "number?",
    "ios": "int?", "valid": "bool", "raw_replies": ["string"]
  })");
  static const json report = json::parse(R"({"name": "string", "sha256": "string"})");
  static const json cell_status = json::parse(R"({"status": "string", "detail": "string"})");
  switch (type) {
    case RecordType::pvq_run: return pvq_run;
    case RecordType::transcript: return transcript;
    case RecordType::evaluation: return evaluation;
    case RecordType::report: return report;
    case RecordType::cell_status: return cell_status;
  }
  return report;
}

bool parses(void (*fn)(std::string_view), const json& v) {
  if (!v.is_string()) return false;
  try {
    fn(v.get<std::string>());
    return true;
  } catch (const Error&) {
    return false;
  }
}

bool is_domain_type(const std::string& type) {
  return type == "value" || type == "task" || type == "speaker" || type == "person" || type == "placement";
}

bool matches_scalar(const std::string& type, const json& v) {
  if (type == "string") return v.is_string();
  if (type == "int") return v.is_number_integer();
  if (type == "uint") return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
  if (type == "number") return v.is_number();
  if (type == "bool") return v.is_boolean();
  if (type == "any") return true;
  if (type == "value") return parses([](std::string_view s) { parse_value(s); }, v);
  if (type == "task") return parses([](std::string_view s) { parse_task(s); }, v);
  if (type == "speaker") return parses([](std::string_view s) { parse_speaker(s); }, v);
  if (type == "person") return parses([](std::string_view s) { parse_person(s); }, v);
  if (type == "placement") return parses([](std::string_view s) { parse_placement(s); }, v);
  throw std::logic_error("unknown schema type " + type);
}

void check(const json& schema, const json& v, const std::string& path) {
  if (schema.is_string()) {
    std::string type = schema.get<std::string>();
    const bool nullable = type.back() == '?';
    if (nullable) type.pop_back();
    if (nullable && v.is_null()) return;
    if (!matches_scalar(type, v))
      throw ValidationError(path + ": expected " + type + (nullable ? " or null" : "") + ", got " +
                            (v.is_string() && is_domain_type(type) ? "\"" + v.get<std::string>() + "\""
                                                                   : std::string(v.type_name())));
    return;
  }
  if (schema.is_array()) {
    if (!v.is_array()) throw ValidationError(path + ": expected array, got " + std::string(v.type_name()));
    for (std::size_t i = 0; i < v.size(); ++i) check(schema[0], v[i], path + "[" + std::to_string(i) + "]");
    return;
  }
  if (!v.is_object()) throw ValidationError(path + ": expected object, got " + std::string(v.type_name()));
  for (const auto& [key, sub] : schema.items()) {
    if (!v.contains(key)) throw ValidationError(path + "." + key + ": missing");
    check(sub, v.at(key), path + "." + key);
  }
}

std::string now_iso8601() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

[[noreturn]] void throw_errno(const std::string& what) {
  throw Error(what + ": " + std::strerror(errno));
}

void write_all(int fd, std::string_view data, const std::string& what) {
  while (!data.empty()) {
    const ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno(what);
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

void fsync_dir(const fs::path& dir) {
  const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw_errno("cannot write " + tmp.string());
  try {
    write_all(fd, content, "write " + tmp.string());
    if (::fsync(fd) != 0) throw_errno("fsync " + tmp.string());
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
  if (::rename(tmp.c_str(), path.c_str()) != 0) throw_errno("rename " + tmp.string());
  fsync_dir(path.parent_path());
}

// Parses the committed prefix of a records file. `committed_size` is set to
// the byte offset just past the last committed line.
std::vector<StoredRecord> parse_records(const std::string& text, std::size_t& committed_size) {
  std::vector<StoredRecord> committed;
  std::vector<StoredRecord> batch;
  committed_size = 0;
  std::size_t pos = 0;
  std::uint64_t expected = 1;
  while (pos < text.size()) {
    const std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) break;  // torn final line
    json line;
    try {
      line = json::parse(text.begin() + static_cast<std::ptrdiff_t>(pos), text.begin() + static_cast<std::ptrdiff_t>(end));
    } catch (const json::parse_error&) {
      break;
    }
    StoredRecord r;
    r.sequence = line.at("seq").get<std::uint64_t>();
    if (r.sequence != expected)
      throw ValidationError("records file: sequence " + std::to_string(r.sequence) + " where " +
                            std::to_string(expected) + " expected");
    ++expected;
    r.type = parse_record_type(line.at("type").get<std::string>());
    r.cell = line.value("cell", std::string{});
    r.payload = std::move(line.at("payload"));
    batch.push_back(std::move(r));
    pos = end + 1;
    if (line.at("commit").get<bool>()) {
      for (auto& b : batch) committed.push_back(std::move(b));
      batch.clear();
      committed_size = pos;
    }
  }
  return committed;
}

}  // namespace

std::string_view to_string(RecordType t) {
  switch (t) {
    case RecordType::pvq_run: return "pvq_run";
    case RecordType::transcript: return "transcript";
    case RecordType::evaluation: return "evaluation";
    case RecordType::report: return "report";
    case RecordType::cell_status: return "cell_status";
  }
  return "?";
}

RecordType parse_record_type(std::string_view s) {
  if (s == "pvq_run") return RecordType::pvq_run;
  if (s == "transcript") return RecordType::transcript;
  if (s == "evaluation") return RecordType::evaluation;
  if (s == "report") return RecordType::report;
  if (s == "cell_status") return RecordType::cell_status;
  throw ValidationError("unknown record type '" + std::string(s) + "'");
}

std::string_view to_string(CellStatus s) {
  switch (s) {
    case CellStatus::pending: return "pending";
    case CellStatus::done: return "done";
    case CellStatus::failed: return "failed";
    case CellStatus::aborted: return "aborted";
  }
  return "?";
}

CellStatus parse_cell_status(std::string_view s) {
  if (s == "pending") return CellStatus::pending;
  if (s == "done") return CellStatus::done;
  if (s == "failed") return CellStatus::failed;
  if (s == "aborted") return CellStatus::aborted;
  throw ValidationError("unknown cell status '" + std::string(s) + "'");
}

bool is_allowed_transition(CellStatus from, CellStatus to) {
  if (to == CellStatus::pending) return false;
  return from == CellStatus::pending || from == CellStatus::failed;
}

void validate_payload(RecordType type, const json& payload) {
  check(schema_for(type), payload, "payload");
  if (type == RecordType::cell_status) {
    const auto s = payload.at("status").get<std::string>();
    if (s != "done" && s != "failed" && s != "aborted")
      throw ValidationError("payload.status: expected done, failed or aborted, got \"" + s + "\"");
  }
}

json to_json(const RunManifest& m) {
  json cells = json::array();
  for (const auto& c : m.cells) cells.push_back({{"key", c.key}, {"status", std::string(to_string(c.status))}});
  return {{"campaign_id", m.campaign_id}, {"created_at", m.created_at}, {"config_digest", m.config_digest},
          {"kind", m.kind},               {"meta", m.meta},             {"cells", std::move(cells)}};
}

RunManifest manifest_from_json(const json& j) {
  RunManifest m;
  m.campaign_id = j.at("campaign_id").get<std::string>();
  m.created_at = j.at("created_at").get<std::string>();
  m.config_digest = j.at("config_digest").get<std::string>();
  m.kind = j.at("kind").get<std::string>();
  m.meta = j.value("meta", json::object());
  for (const auto& c : j.at("cells"))
    m.cells.push_back({c.at("key").get<std::string>(), parse_cell_status(c.at("status").get<std::string>())});
  return m;
}

// ---- RunStore --------------------------------------------------------------

RunStore::RunStore(fs::path dir, int lock_fd) : dir_(std::move(dir)), lock_fd_(lock_fd) {}

RunStore::RunStore(RunStore&& other) noexcept
    : dir_(std::move(other.dir_)),
      lock_fd_(std::exchange(other.lock_fd_, -1)),
      records_fd_(std::exchange(other.records_fd_, -1)),
      recovered_bytes_(other.recovered_bytes_),
      manifest_(std::move(other.manifest_)),
      index_(std::move(other.index_)),
      next_seq_(other.next_seq_) {}

RunStore::~RunStore() {
  if (records_fd_ >= 0) ::close(records_fd_);
  if (lock_fd_ >= 0) ::close(lock_fd_);  // releases the flock
}

namespace {

int acquire_lock(const fs::path& dir) {
  const fs::path path = dir / ".lock";
  const int fd = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) throw_errno("cannot open " + path.string());
  if (::flock(fd, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd);
    throw ConfigError("campaign at " + dir.string() + " is in use by another process");
  }
  return fd;
}

}  // namespace

bool RunStore::exists(const fs::path& dir) { return fs::exists(dir / kManifestFile); }

RunStore RunStore::create(const fs::path& dir, RunManifest manifest) {
  if (exists(dir)) throw ConfigError("campaign already exists at " + dir.string());
  fs::create_directories(dir / kReportsDir);
  RunStore store(dir, acquire_lock(dir));
  if (manifest.created_at.empty()) manifest.created_at = now_iso8601();
  for (auto& c : manifest.cells) c.status = CellStatus::pending;
  {
    const int fd = ::open((dir / kRecordsFile).c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) throw_errno("cannot create records file");
    ::close(fd);
  }
  write_file_atomic(dir / kManifestFile, to_json(manifest).dump(2) + "\n");
  store.load();
  return store;
}

RunStore RunStore::open(const fs::path& dir) {
  if (!exists(dir)) throw ConfigError("no campaign at " + dir.string());
  RunStore store(dir, acquire_lock(dir));
  store.load();
  return store;
}

void RunStore::load() {
  manifest_ = manifest_from_json(json::parse(detail::read_file((dir_ / kManifestFile).string())));
  index_.clear();
  for (std::size_t i = 0; i < manifest_.cells.size(); ++i) {
    if (!index_.emplace(manifest_.cells[i].key, i).second)
      throw ValidationError("manifest lists cell '" + manifest_.cells[i].key + "' twice");
    manifest_.cells[i].status = CellStatus::pending;
  }

  const fs::path records_path = dir_ / kRecordsFile;
  const std::string text = fs::exists(records_path) ? detail::read_file(records_path.string()) : std::string{};
  std::size_t committed_size = 0;
  const auto records = parse_records(text, committed_size);
  recovered_bytes_ = text.size() - committed_size;

  records_fd_ = ::open(records_path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (records_fd_ < 0) throw_errno("cannot open " + records_path.string());
  if (recovered_bytes_ > 0) {
    if (::ftruncate(records_fd_, static_cast<off_t>(committed_size)) != 0) throw_errno("truncate records file");
    ::fsync(records_fd_);
  }

  next_seq_ = records.empty() ? 1 : records.back().sequence + 1;
  for (const auto& r : records) {
    if (r.type != RecordType::cell_status) continue;
    auto it = index_.find(r.cell);
    if (it == index_.end()) throw ValidationError("status record for unknown cell '" + r.cell + "'");
    auto& entry = manifest_.cells[it->second];
    const auto to = parse_cell_status(r.payload.at("status").get<std::string>());
    if (!is_allowed_transition(entry.status, to))
      throw ValidationError("cell '" + r.cell + "': illegal transition " + std::string(to_string(entry.status)) +
                            " -> " + std::string(to_string(to)));
    entry.status = to;
  }
}

RunManifest RunStore::manifest() const {
  std::lock_guard lock(mu_);
  return manifest_;
}

std::uint64_t RunStore::write_batch(const std::string& cell, std::vector<PendingRecord> records) {
  for (const auto& r : records) validate_payload(r.type, r.payload);
  std::string buf;
  std::uint64_t seq = next_seq_;
  for (std::size_t i = 0; i < records.size(); ++i) {
    json line = {{"seq", seq++},
                 {"type", std::string(to_string(records[i].type))},
                 {"cell", cell},
                 {"payload", std::move(records[i].payload)},
                 {"commit", i + 1 == records.size()}};
    buf += line.dump();
    buf += '\n';
  }
  write_all(records_fd_, buf, "append to records file");
  if (::fdatasync(records_fd_) != 0) throw_errno("fsync records file");
  next_seq_ = seq;
  return seq - 1;
}

std::uint64_t RunStore::append(RecordType type, json payload, const std::string& cell) {
  if (type == RecordType::cell_status) throw ValidationError("use commit_cell to change a cell status");
  std::lock_guard lock(mu_);
  std::vector<PendingRecord> batch;
  batch.push_back({type, std::move(payload)});
  return write_batch(cell, std::move(batch));
}

std::uint64_t RunStore::commit_cell(const std::string& cell, CellStatus status, std::vector<PendingRecord> records,
                                    const std::string& detail) {
  std::lock_guard lock(mu_);
  auto it = index_.find(cell);
  if (it == index_.end()) throw ValidationError("unknown cell '" + cell + "'");
  auto& entry = manifest_.cells[it->second];
  if (!is_allowed_transition(entry.status, status))
    throw ValidationError("cell '" + cell + "': illegal transition " + std::string(to_string(entry.status)) + " -> " +
                          std::string(to_string(status)));
  records.push_back({RecordType::cell_status, {{"status", std::string(to_string(status))}, {"detail", detail}}});
  const auto seq = write_batch(cell, std::move(records));
  entry.status = status;
  return seq;
}

std::optional<CellStatus> RunStore::status(const std::string& cell) const {
  std::lock_guard lock(mu_);
  auto it = index_.find(cell);
  if (it == index_.end()) return std::nullopt;
  return manifest_.cells[it->second].status;
}

std::size_t RunStore::count(CellStatus status) const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (const auto& c : manifest_.cells) n += c.status == status;
  return n;
}

std::vector<std::string> RunStore::resume(const std::string& current_digest) const {
  std::lock_guard lock(mu_);
  if (current_digest != manifest_.config_digest)
    throw ConfigError("refusing to resume " + dir_.string() + ": config digest " + current_digest +
                      " differs from the campaign's " + manifest_.config_digest);
  std::vector<std::string> out;
  for (const auto& c : manifest_.cells)
    if (c.status == CellStatus::pending || c.status == CellStatus::failed) out.push_back(c.key);
  return out;
}

std::uint64_t RunStore::last_sequence() const {
  std::lock_guard lock(mu_);
  return next_seq_ - 1;
}

void RunStore::save_manifest() const {
  std::lock_guard lock(mu_);
  write_file_atomic(dir_ / kManifestFile, to_json(manifest_).dump(2) + "\n");
}

std::vector<StoredRecord> RunStore::read_records(const fs::path& dir) {
  const fs::path path = dir / kRecordsFile;
  if (!fs::exists(path)) throw ConfigError("no records file at " + path.string());
  std::size_t committed_size = 0;
  return parse_records(detail::read_file(path.string()), committed_size);
}

RunManifest RunStore::read_manifest(const fs::path& dir) {
  if (!exists(dir)) throw ConfigError("no campaign at " + dir.string());
  return manifest_from_json(json::parse(detail::read_file((dir / kManifestFile).string())));
}

}  // namespace valsim
