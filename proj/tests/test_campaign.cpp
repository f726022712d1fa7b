#include <gtest/gtest.h>

#include <set>

#include "test_support.hpp"
#include "valsim/campaign.hpp"
#include "valsim/error.hpp"
#include "valsim/reports.hpp"

using namespace valsim;
using valsim::testing::slurp;
using valsim::testing::TempDir;

namespace {

// English only, short protocols, so campaigns finish in well under a second.
Config small_config(const std::filesystem::path& out) {
  Config c = valsim::testing::test_config(out);
  c.languages = {"en"};
  c.controllability.iterations = 2;
  c.dialogue.reps = 1;
  c.dialogue.tasks = {Task::hobbies};
  return c;
}

std::set<std::string> dialogue_cells_with_transcripts(const std::filesystem::path& dir) {
  std::set<std::string> cells;
  std::size_t n = 0;
  for (const auto& r : RunStore::read_records(dir))
    if (r.type == RecordType::transcript) {
      cells.insert(r.cell);
      ++n;
    }
  EXPECT_EQ(cells.size(), n) << "duplicate transcripts";
  return cells;
}

}  // namespace

TEST(Campaign, FilterSelectsConditionSubsets) {
  const std::vector<std::string> exprs{"person=2"};
  const auto f = parse_filter(exprs);
  int matched = 0;
  for (const auto& c : condition_grid(BasicValue::power, "en")) matched += f.matches(c);
  EXPECT_EQ(matched, 4);

  const std::vector<std::string> narrow{"person=3", "placement=user", "definition=no", "language=ja", "values=higher"};
  const auto g = parse_filter(narrow);
  EXPECT_TRUE(g.matches({Person::third, Placement::user, false, "ja", Dimension::conservation}));
  EXPECT_FALSE(g.matches({Person::third, Placement::user, false, "ja", BasicValue::power}));
  EXPECT_FALSE(g.matches({Person::third, Placement::user, false, "en", Dimension::conservation}));

  for (const std::string bad : {"person=4", "colour=red", "person", "definition=maybe"}) {
    const std::vector<std::string> e{bad};
    EXPECT_THROW(parse_filter(e), UsageError) << bad;
  }
}

TEST(Campaign, CellKeysAndLayout) {
  EXPECT_EQ(controllability_cell_key({Person::second, Placement::system, true, "en", BasicValue::power}),
            "ctl/en/system/second/def/power");
  EXPECT_EQ(dialogue_cell_key({BasicValue::power, BasicValue::achievement}, Task::hobbies, 3),
            "dlg/power+achievement/hobbies/3");
  TempDir dir;
  const Config c = valsim::testing::test_config(dir.path());
  EXPECT_EQ(controllability_cells(c).size(), 224u);
  EXPECT_EQ(controllability_dir(c, "scripted"), dir.path() / "test" / "controllability-scripted");
  EXPECT_EQ(dialogue_dir(c, "ja", ValueKind::higher_order), dir.path() / "test" / "dialogue-ja-higher");
}

TEST(Campaign, ControllabilityRunsFilteredCellsAndReports) {
  TempDir dir;
  const Config config = small_config(dir.path());
  const Workspace ws(config);
  auto provider = make_provider(config.provider("scripted"), config.circumplex);
  const std::vector<std::string> exprs{"values=higher"};
  const auto outcome = run_controllability(config, ws, *provider, parse_filter(exprs));
  EXPECT_EQ(outcome.total, 112u);
  EXPECT_EQ(outcome.ran, 32u);
  EXPECT_EQ(outcome.done, 32u);
  EXPECT_EQ(outcome.pending, 80u);
  EXPECT_FALSE(outcome.complete());

  std::size_t runs = 0;
  for (const auto& r : RunStore::read_records(outcome.dir))
    if (r.type == RecordType::pvq_run) ++runs;
  EXPECT_EQ(runs, 64u);

  const auto files = write_controllability_report(load_snapshot(outcome.dir), outcome.dir / "reports", config.circumplex);
  const std::string table = slurp(files.at(0));
  EXPECT_NE(table.find("en,system,second,yes,,1.0000"), std::string::npos) << table;

  // Finishing the rest completes the campaign; a further run does nothing.
  const auto rest = run_controllability(config, ws, *provider);
  EXPECT_EQ(rest.ran, 80u);
  EXPECT_TRUE(rest.complete());
  EXPECT_EQ(run_controllability(config, ws, *provider).ran, 0u);
}

TEST(Campaign, AbortedConditionsRenderAsDashes) {
  TempDir dir;
  Config config = small_config(dir.path());
  config.providers[0].scripted.invalid_items = {3, 9, 17, 28};
  const Workspace ws(config);
  auto provider = make_provider(config.provider("scripted"), config.circumplex);
  const std::vector<std::string> exprs{"person=2", "placement=system", "definition=yes"};
  const auto outcome = run_controllability(config, ws, *provider, parse_filter(exprs));
  EXPECT_EQ(outcome.aborted, 14u);
  const auto snapshot = load_snapshot(outcome.dir);
  for (const auto& r : snapshot.records) {
    if (r.type == RecordType::cell_status) EXPECT_EQ(r.payload["detail"], "4 of 40 replies invalid in iteration 1");
    if (r.type == RecordType::pvq_run) EXPECT_EQ(r.payload["iteration"], 1);
  }
  const auto files = write_controllability_report(snapshot, outcome.dir / "reports", config.circumplex);
  EXPECT_NE(slurp(files.at(0)).find("en,system,second,yes,---,---"), std::string::npos) << slurp(files.at(0));
  // Aborted cells are final.
  EXPECT_EQ(run_controllability(config, ws, *provider, parse_filter(exprs)).ran, 0u);
}

TEST(Campaign, DialogueResumesWithoutDuplicates) {
  TempDir dir;
  const Config config = small_config(dir.path());
  const Workspace ws(config);
  auto provider = make_provider(config.dialogue_provider(), config.circumplex);
  RunOptions first;
  first.max_cells = 20;
  first.workers = 3;
  const auto partial = run_dialogue_campaign(config, ws, *provider, "en", ValueKind::basic, std::nullopt, first);
  EXPECT_EQ(partial.total, 55u);
  EXPECT_EQ(partial.done, 20u);
  EXPECT_EQ(dialogue_cells_with_transcripts(partial.dir).size(), 20u);

  RunOptions rest;
  rest.workers = 3;
  const auto done = run_dialogue_campaign(config, ws, *provider, "en", ValueKind::basic, std::nullopt, rest);
  EXPECT_EQ(done.ran, 35u);
  EXPECT_TRUE(done.complete());
  EXPECT_EQ(dialogue_cells_with_transcripts(done.dir).size(), 55u);

  const auto data = load_dialogue_data(done.dir);
  EXPECT_EQ(data.transcripts.size(), 55u);
  EXPECT_EQ(data.evaluations.size(), 110u);
}

TEST(Campaign, SerialAndPooledRunsAreByteIdentical) {
  TempDir a, b;
  std::string records[2];
  for (int k = 0; k < 2; ++k) {
    const Config config = small_config(k == 0 ? a.path() : b.path());
    const Workspace ws(config);
    auto provider = make_provider(config.dialogue_provider(), config.circumplex);
    RunOptions options;
    options.serial = k == 0;
    options.workers = 4;
    const auto outcome = run_dialogue_campaign(config, ws, *provider, "en", ValueKind::higher_order, std::nullopt, options);
    EXPECT_EQ(outcome.done, 10u);
    records[k] = slurp(outcome.dir / RunStore::kRecordsFile);
  }
  EXPECT_FALSE(records[0].empty());
  EXPECT_EQ(records[0], records[1]);
}

TEST(Campaign, ResumeIsRefusedWhenTheExperimentChanged) {
  TempDir dir;
  Config config = small_config(dir.path());
  {
    const Workspace ws(config);
    auto provider = make_provider(config.dialogue_provider(), config.circumplex);
    RunOptions options;
    options.max_cells = 1;
    run_dialogue_campaign(config, ws, *provider, "en", ValueKind::basic, std::nullopt, options);
    const DialogueCondition other{Person::third, Placement::user, false};
    EXPECT_THROW(run_dialogue_campaign(config, ws, *provider, "en", ValueKind::basic, other, options), ConfigError);
  }
  config.dialogue.turns = 12;
  const Workspace ws(config);
  auto provider = make_provider(config.dialogue_provider(), config.circumplex);
  EXPECT_THROW(run_dialogue_campaign(config, ws, *provider, "en", ValueKind::basic), ConfigError);
  EXPECT_THROW(run_dialogue_campaign(config, ws, *provider, "ja", ValueKind::basic), UsageError);
}

TEST(Campaign, DialogueReportsFromTheStore) {
  TempDir dir;
  const Config config = small_config(dir.path());
  const Workspace ws(config);
  auto provider = make_provider(config.dialogue_provider(), config.circumplex);
  const auto outcome = run_dialogue_campaign(config, ws, *provider, "en", ValueKind::basic);
  const auto data = load_dialogue_data(outcome.dir);
  ReportOptions options;
  options.heatmaps = true;
  const auto files = write_dialogue_reports(data, dir.path() / "reports", config.circumplex, options);
  std::set<std::string> names;
  for (const auto& f : files) names.insert(f.filename().string());
  for (const char* expected : {"matrix_trust_hobbies.csv", "matrix_ios_hobbies.csv", "heatmap_trust_hobbies.svg",
                               "similarity.csv", "stats.csv", "validity.csv"})
    EXPECT_TRUE(names.count(expected)) << expected;
  const std::string similarity = slurp(dir.path() / "reports" / "similarity.csv");
  EXPECT_NE(similarity.find("trust,hobbies,high-identical,5.0000,10"), std::string::npos) << similarity;
  EXPECT_NE(similarity.find("ios,hobbies,low,1.0000,26"), std::string::npos) << similarity;
  const std::string matrix = slurp(dir.path() / "reports" / "matrix_trust_hobbies.csv");
  EXPECT_EQ(matrix.substr(0, matrix.find('\n')),
            "evaluator,power,achievement,hedonism,stimulation,self-direction,universalism,benevolence,tradition,"
            "conformity,security");
  EXPECT_NE(slurp(dir.path() / "reports" / "heatmap_trust_hobbies.svg").find("<svg"), std::string::npos);
}
