#pragma once

// Append-only campaign store.
//
// A campaign directory holds
//   manifest.json   campaign id, config digest, cell list (snapshot)
//   records.jsonl   one StoredRecord per line, the source of truth
//   reports/        CSV and SVG outputs
//
// Each line of records.jsonl is
//   {"seq": n, "type": "...", "cell": "...", "payload": {...}, "commit": bool}
// A multi-record write sets "commit" only on its last line. On open, the
// file is truncated after the last committed line, so a crash mid-batch
// leaves no partial cell behind. Cell statuses are replayed from
// cell_status records; the manifest is rewritten atomically as a
// convenience snapshot.

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace valsim {

enum class RecordType : std::uint8_t { pvq_run, transcript, evaluation, report, cell_status };

std::string_view to_string(RecordType t);
RecordType parse_record_type(std::string_view s);

enum class CellStatus : std::uint8_t { pending, done, failed, aborted };

std::string_view to_string(CellStatus s);
CellStatus parse_cell_status(std::string_view s);

// pending -> {done, failed, aborted}; failed -> {done, failed, aborted} when
// a failed cell is retried on resume. done and aborted are terminal.
bool is_allowed_transition(CellStatus from, CellStatus to);

struct StoredRecord {
  std::uint64_t sequence = 0;
  RecordType type = RecordType::report;
  // Campaign cell the record belongs to; empty for campaign-level records.
  std::string cell;
  nlohmann::json payload;
};

// Throws ValidationError naming the offending field path (e.g.
// "payload.turns[2].speaker") when a payload does not match its schema.
void validate_payload(RecordType type, const nlohmann::json& payload);

struct CellEntry {
  std::string key;
  CellStatus status = CellStatus::pending;
};

struct RunManifest {
  std::string campaign_id;
  std::string created_at;  // ISO-8601 UTC
  std::string config_digest;
  // "controllability" or "dialogue".
  std::string kind;
  // Free-form description of the campaign (model, language, mode, ...).
  nlohmann::json meta = nlohmann::json::object();
  std::vector<CellEntry> cells;
};

nlohmann::json to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);

struct PendingRecord {
  RecordType type;
  nlohmann::json payload;
};

class RunStore {
 public:
  static constexpr const char* kManifestFile = "manifest.json";
  static constexpr const char* kRecordsFile = "records.jsonl";
  static constexpr const char* kReportsDir = "reports";

  // New campaign directory. Throws ConfigError if one already exists there.
  static RunStore create(const std::filesystem::path& dir, RunManifest manifest);
  // Existing campaign; recovers from a torn tail. Throws ConfigError if
  // missing or locked by another writer.
  static RunStore open(const std::filesystem::path& dir);
  static bool exists(const std::filesystem::path& dir);

  // Committed records without taking the writer lock.
  static std::vector<StoredRecord> read_records(const std::filesystem::path& dir);
  static RunManifest read_manifest(const std::filesystem::path& dir);

  RunStore(RunStore&& other) noexcept;
  RunStore& operator=(RunStore&&) = delete;
  RunStore(const RunStore&) = delete;
  ~RunStore();

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path reports_dir() const { return dir_ / kReportsDir; }
  RunManifest manifest() const;
  // Bytes discarded from an uncommitted tail when the store was opened.
  std::uintmax_t recovered_bytes() const { return recovered_bytes_; }

  // Durable (fsync'd) before returning; returns the record's sequence.
  std::uint64_t append(RecordType type, nlohmann::json payload, const std::string& cell = {});
  // Writes all records, then a cell_status record, as one atomic batch.
  // Returns the sequence of the status record.
  std::uint64_t commit_cell(const std::string& cell, CellStatus status, std::vector<PendingRecord> records = {},
                            const std::string& detail = {});

  std::optional<CellStatus> status(const std::string& cell) const;
  std::size_t count(CellStatus status) const;
  // Cells still to run: pending or failed, in manifest order. Throws
  // ConfigError when `current_digest` differs from the campaign's.
  std::vector<std::string> resume(const std::string& current_digest) const;

  std::vector<StoredRecord> records() const { return read_records(dir_); }
  std::uint64_t last_sequence() const;

  // Rewrites manifest.json from the replayed cell statuses.
  void save_manifest() const;

 private:
  RunStore(std::filesystem::path dir, int lock_fd);
  void load();
  std::uint64_t write_batch(const std::string& cell, std::vector<PendingRecord> records);

  std::filesystem::path dir_;
  int lock_fd_ = -1;
  int records_fd_ = -1;
  std::uintmax_t recovered_bytes_ = 0;

  mutable std::mutex mu_;
  RunManifest manifest_;
  std::unordered_map<std::string, std::size_t> index_;  // cell key -> manifest position
  std::uint64_t next_seq_ = 1;
};

}  // namespace valsim
