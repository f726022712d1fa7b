#include <gtest/gtest.h>

#include <fstream>

#include "test_support.hpp"
#include "valsim/error.hpp"
#include "valsim/runstore.hpp"

using namespace valsim;
using valsim::testing::slurp;
using valsim::testing::TempDir;
using json = nlohmann::json;

namespace {

RunManifest manifest_with(std::size_t cells, const std::string& digest = "digest-1") {
  RunManifest m;
  m.campaign_id = "test/campaign";
  m.created_at = "2024-01-01T00:00:00Z";
  m.config_digest = digest;
  m.kind = "dialogue";
  m.meta = {{"language", "en"}};
  for (std::size_t i = 0; i < cells; ++i) m.cells.push_back({"cell-" + std::to_string(i), CellStatus::pending});
  return m;
}

json report_payload(const std::string& name) { return {{"name", name}, {"sha256", "abc"}}; }

json transcript_payload() {
  json turns = json::array();
  for (int i = 0; i < 10; ++i) turns.push_back({{"speaker", i % 2 ? "B" : "A"}, {"text", "t" + std::to_string(i)}});
  return {{"pair", {"power", "achievement"}}, {"task", "hobbies"}, {"repetition", 1}, {"turns", turns}};
}

void append_raw(const std::filesystem::path& file, const std::string& bytes) {
  std::ofstream out(file, std::ios::binary | std::ios::app);
  out << bytes;
}

}  // namespace

TEST(RunStore, SequencesIncreaseByOne) {
  TempDir dir;
  auto store = RunStore::create(dir.path() / "c", manifest_with(2));
  const auto a = store.append(RecordType::report, report_payload("a.csv"));
  const auto b = store.append(RecordType::report, report_payload("b.csv"));
  EXPECT_EQ(b, a + 1);
  EXPECT_EQ(store.last_sequence(), b);
  const auto s = store.commit_cell("cell-0", CellStatus::done, {{RecordType::transcript, transcript_payload()}});
  EXPECT_EQ(s, b + 2);
}

TEST(RunStore, RecordsSurviveReopenByteForByte) {
  TempDir dir;
  const auto path = dir.path() / "c";
  const json payload = transcript_payload();
  {
    auto store = RunStore::create(path, manifest_with(1));
    store.commit_cell("cell-0", CellStatus::done, {{RecordType::transcript, payload}});
  }
  const auto records = RunStore::read_records(path);
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[0].payload.dump(), payload.dump());
  EXPECT_EQ(records[0].cell, "cell-0");
  EXPECT_EQ(records[1].type, RecordType::cell_status);
  auto reopened = RunStore::open(path);
  EXPECT_EQ(reopened.status("cell-0"), CellStatus::done);
  EXPECT_EQ(reopened.records().at(0).payload.dump(), payload.dump());
  EXPECT_EQ(reopened.recovered_bytes(), 0u);
}

TEST(RunStore, InvalidPayloadIsRejectedWithItsPath) {
  TempDir dir;
  const auto path = dir.path() / "c";
  auto store = RunStore::create(path, manifest_with(1));
  const std::string before = slurp(path / RunStore::kRecordsFile);
  json bad = transcript_payload();
  bad["turns"][2]["speaker"] = "C";
  try {
    store.commit_cell("cell-0", CellStatus::done, {{RecordType::transcript, bad}});
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("payload.turns[2].speaker"), std::string::npos) << e.what();
  }
  json missing = transcript_payload();
  missing.erase("task");
  EXPECT_THROW(store.append(RecordType::transcript, missing), ValidationError);
  EXPECT_THROW(store.append(RecordType::report, {{"name", 3}, {"sha256", "x"}}), ValidationError);
  EXPECT_EQ(slurp(path / RunStore::kRecordsFile), before);
  EXPECT_EQ(store.status("cell-0"), CellStatus::pending);
}

TEST(RunStore, ValidatePayloadNamesNestedFields) {
  const json run = {{"condition",
                     {{"person", "second"},
                      {"placement", "system"},
                      {"include_definition", true},
                      {"language", "en"},
                      {"value", "power"}}},
                    {"iteration", 1},
                    {"order_seed", 5},
                    {"responses", {{{"item", 1}, {"raw", "5"}, {"rating", 5}}, {{"item", 2}, {"raw", "?"}, {"rating", nullptr}}}}};
  EXPECT_NO_THROW(validate_payload(RecordType::pvq_run, run));
  json bad = run;
  bad["responses"][1]["rating"] = "five";
  try {
    validate_payload(RecordType::pvq_run, bad);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(std::string(e.what()), "payload.responses[1].rating: expected int or null, got string");
  }
  bad = run;
  bad["condition"]["value"] = "kindness";
  EXPECT_THROW(validate_payload(RecordType::pvq_run, bad), ValidationError);
  EXPECT_THROW(validate_payload(RecordType::cell_status, {{"status", "pending"}, {"detail", ""}}), ValidationError);
}

TEST(RunStore, TornTailIsDiscardedOnOpen) {
  TempDir dir;
  const auto path = dir.path() / "c";
  {
    auto store = RunStore::create(path, manifest_with(2));
    store.commit_cell("cell-0", CellStatus::done, {{RecordType::transcript, transcript_payload()}});
  }
  const std::string committed = slurp(path / RunStore::kRecordsFile);
  // An uncommitted batch line followed by a half-written one.
  append_raw(path / RunStore::kRecordsFile,
             json{{"seq", 3}, {"type", "transcript"}, {"cell", "cell-1"}, {"payload", transcript_payload()},
                  {"commit", false}}
                     .dump() +
                 "\n{\"seq\": 4, \"type\": \"cell_st");
  EXPECT_EQ(RunStore::read_records(path).size(), 2u);
  auto store = RunStore::open(path);
  EXPECT_GT(store.recovered_bytes(), 0u);
  EXPECT_EQ(slurp(path / RunStore::kRecordsFile), committed);
  EXPECT_EQ(store.status("cell-1"), CellStatus::pending);
  EXPECT_EQ(store.last_sequence(), 2u);
  EXPECT_EQ(store.commit_cell("cell-1", CellStatus::done), 3u);
}

TEST(RunStore, ResumeReturnsUnfinishedCells) {
  TempDir dir;
  const auto path = dir.path() / "c";
  {
    auto store = RunStore::create(path, manifest_with(1100));
    store.commit_cell("cell-0", CellStatus::done);
    EXPECT_EQ(store.resume("digest-1").size(), 1099u);
  }
  auto store = RunStore::open(path);
  const auto todo = store.resume("digest-1");
  ASSERT_EQ(todo.size(), 1099u);
  EXPECT_EQ(todo.front(), "cell-1");
  EXPECT_EQ(store.resume("digest-1"), todo);
  EXPECT_EQ(store.count(CellStatus::done), 1u);
  EXPECT_EQ(store.count(CellStatus::pending), 1099u);
  EXPECT_THROW(store.resume("digest-2"), ConfigError);
}

TEST(RunStore, FailedCellsAreRetriedAbortedAreNot) {
  TempDir dir;
  auto store = RunStore::create(dir.path() / "c", manifest_with(3));
  store.commit_cell("cell-0", CellStatus::failed, {}, "HTTP 503");
  store.commit_cell("cell-1", CellStatus::aborted, {}, "4 of 40 replies invalid in iteration 1");
  EXPECT_EQ(store.resume("digest-1"), (std::vector<std::string>{"cell-0", "cell-2"}));
  store.commit_cell("cell-0", CellStatus::done);
  EXPECT_EQ(store.status("cell-0"), CellStatus::done);
}

TEST(RunStore, IllegalTransitionsAreRejected) {
  EXPECT_TRUE(is_allowed_transition(CellStatus::pending, CellStatus::done));
  EXPECT_TRUE(is_allowed_transition(CellStatus::failed, CellStatus::done));
  EXPECT_FALSE(is_allowed_transition(CellStatus::done, CellStatus::failed));
  EXPECT_FALSE(is_allowed_transition(CellStatus::aborted, CellStatus::done));
  EXPECT_FALSE(is_allowed_transition(CellStatus::failed, CellStatus::pending));

  TempDir dir;
  auto store = RunStore::create(dir.path() / "c", manifest_with(1));
  store.commit_cell("cell-0", CellStatus::done);
  EXPECT_THROW(store.commit_cell("cell-0", CellStatus::done), ValidationError);
  EXPECT_THROW(store.commit_cell("cell-9", CellStatus::done), ValidationError);
  EXPECT_THROW(store.commit_cell("cell-0", CellStatus::pending), ValidationError);
  EXPECT_THROW(store.append(RecordType::cell_status, {{"status", "done"}, {"detail", ""}}, "cell-0"), ValidationError);
}

TEST(RunStore, WriterLockIsExclusive) {
  TempDir dir;
  const auto path = dir.path() / "c";
  auto store = RunStore::create(path, manifest_with(1));
  EXPECT_THROW(RunStore::open(path), ConfigError);
  EXPECT_NO_THROW(RunStore::read_records(path));
  {
    RunStore moved(std::move(store));
    EXPECT_THROW(RunStore::open(path), ConfigError);
  }
  EXPECT_NO_THROW(RunStore::open(path));
}

TEST(RunStore, CreateRefusesExistingCampaignAndOpenRefusesMissing) {
  TempDir dir;
  const auto path = dir.path() / "c";
  { RunStore::create(path, manifest_with(1)); }
  EXPECT_THROW(RunStore::create(path, manifest_with(1)), ConfigError);
  EXPECT_THROW(RunStore::open(dir.path() / "nope"), ConfigError);
  EXPECT_FALSE(RunStore::exists(dir.path() / "nope"));
}

TEST(RunStore, ManifestSnapshotReflectsStatuses) {
  TempDir dir;
  const auto path = dir.path() / "c";
  {
    auto store = RunStore::create(path, manifest_with(2));
    store.commit_cell("cell-1", CellStatus::done);
    store.save_manifest();
  }
  const auto m = RunStore::read_manifest(path);
  EXPECT_EQ(m.campaign_id, "test/campaign");
  EXPECT_EQ(m.meta["language"], "en");
  ASSERT_EQ(m.cells.size(), 2u);
  EXPECT_EQ(m.cells[1].status, CellStatus::done);
  EXPECT_EQ(manifest_from_json(to_json(m)).cells[1].key, "cell-1");
  EXPECT_FALSE(std::filesystem::exists(path / "manifest.json.tmp"));
}
