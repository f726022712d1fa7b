#include "valsim/campaign.hpp"

#include "valsim/controllability.hpp"
#include "valsim/dialogue.hpp"
#include "valsim/digest.hpp"
#include "valsim/error.hpp"

namespace valsim {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

struct CellResult {
  CellStatus status = CellStatus::done;
  std::vector<PendingRecord> records;
  std::string detail;
};

std::string mode_name(ValueKind mode) { return mode == ValueKind::basic ? "basic" : "higher"; }

json to_json(const DialogueCondition& c) {
  return {{"person", std::string(to_string(c.person))},
          {"placement", std::string(to_string(c.placement))},
          {"definition", c.include_definition}};
}

bool parse_bool_word(const std::string& s, bool& out) {
  if (s == "yes" || s == "true" || s == "def" || s == "1") return out = true, true;
  if (s == "no" || s == "false" || s == "nodef" || s == "0") return out = false, true;
  return false;
}

RunStore open_or_create(const fs::path& dir, RunManifest manifest) {
  if (!RunStore::exists(dir)) return RunStore::create(dir, std::move(manifest));
  RunStore store = RunStore::open(dir);
  const RunManifest existing = store.manifest();
  (void)store.resume(manifest.config_digest);  // digest guard
  if (existing.kind != manifest.kind) throw ConfigError(dir.string() + " holds a " + existing.kind + " campaign");
  for (const auto& [key, value] : manifest.meta.items()) {
    if (existing.meta.value(key, json()) != value)
      throw ConfigError("refusing to resume " + dir.string() + ": '" + key + "' was " +
                        existing.meta.value(key, json()).dump() + ", now " + value.dump());
  }
  std::vector<std::string> expected;
  for (const auto& c : manifest.cells) expected.push_back(c.key);
  std::vector<std::string> actual;
  for (const auto& c : existing.cells) actual.push_back(c.key);
  if (expected != actual) throw ConfigError("refusing to resume " + dir.string() + ": cell list differs");
  return store;
}

template <typename Produce>
CampaignOutcome execute(RunStore& store, std::vector<std::string> cells, Produce&& produce, const RunOptions& options) {
  if (options.cell_filter) std::erase_if(cells, [&](const auto& c) { return !options.cell_filter(c); });
  if (options.max_cells && cells.size() > *options.max_cells) cells.resize(*options.max_cells);
  std::size_t since_save = 0;
  std::size_t committed = 0;
  auto commit = [&](std::size_t i, CellResult r) {
    store.commit_cell(cells[i], r.status, std::move(r.records), r.detail);
    if (++since_save >= 64) {
      store.save_manifest();
      since_save = 0;
    }
    ++committed;
    if (options.progress) options.progress(cells[i], r.status, committed, cells.size());
  };
  auto run = [&](std::size_t i) { return produce(cells[i]); };
  const ExecStats stats = options.serial ? run_serial(cells.size(), run, commit, options.cancel)
                                         : run_ordered(cells.size(), options.workers, run, commit, options.cancel);
  store.save_manifest();
  CampaignOutcome out = summarize(store);
  out.ran = stats.committed;
  out.cancelled = stats.cancelled;
  return out;
}

}  // namespace

bool ConditionFilter::matches(const PromptCondition& c) const {
  if (person && *person != c.person) return false;
  if (placement && *placement != c.placement) return false;
  if (include_definition && *include_definition != c.include_definition) return false;
  if (language && *language != c.language) return false;
  if (values && *values != kind_of(c.value)) return false;
  return true;
}

ConditionFilter parse_filter(std::span<const std::string> expressions) {
  ConditionFilter f;
  for (const auto& expr : expressions) {
    const auto eq = expr.find('=');
    if (eq == std::string::npos) throw UsageError("filter '" + expr + "' is not key=value");
    const std::string key = expr.substr(0, eq);
    const std::string value = expr.substr(eq + 1);
    try {
      if (key == "person") {
        f.person = parse_person(value);
      } else if (key == "placement") {
        f.placement = parse_placement(value);
      } else if (key == "definition") {
        bool b = false;
        if (!parse_bool_word(value, b)) throw UsageError("filter definition expects yes|no, got '" + value + "'");
        f.include_definition = b;
      } else if (key == "language") {
        f.language = value;
      } else if (key == "values") {
        f.values = parse_value_kind(value);
      } else {
        throw UsageError("unknown filter key '" + key + "' (person, placement, definition, language, values)");
      }
    } catch (const ValidationError& e) {
      throw UsageError(std::string("filter '") + expr + "': " + e.what());
    }
  }
  return f;
}

std::string controllability_cell_key(const PromptCondition& c) {
  return "ctl/" + condition_key(c) + "/" + std::string(to_string(c.value));
}

std::string dialogue_cell_key(const ValuePair& pair, Task task, int repetition) {
  return "dlg/" + std::string(to_string(pair.first)) + "+" + std::string(to_string(pair.second)) + "/" +
         std::string(to_string(task)) + "/" + std::to_string(repetition);
}

fs::path campaign_root(const Config& config) { return fs::path(config.output_dir) / config.campaign_id; }

fs::path controllability_dir(const Config& config, const std::string& model) {
  return campaign_root(config) / ("controllability-" + model);
}

fs::path dialogue_dir(const Config& config, const std::string& language, ValueKind mode) {
  return campaign_root(config) / ("dialogue-" + language + "-" + mode_name(mode));
}

std::vector<PromptCondition> controllability_cells(const Config& config) {
  std::vector<PromptCondition> out;
  for (const auto& lang : config.languages) {
    for (ValueKind kind : {ValueKind::basic, ValueKind::higher_order}) {
      const auto values = all_values(kind);
      const auto grid = condition_grid(values.front(), lang);
      for (const auto& cond : grid) {
        for (const auto& v : values) {
          PromptCondition c = cond;
          c.value = v;
          out.push_back(c);
        }
      }
    }
  }
  return out;
}

CampaignOutcome summarize(const RunStore& store) {
  CampaignOutcome out;
  out.dir = store.dir();
  out.total = store.manifest().cells.size();
  out.done = store.count(CellStatus::done);
  out.failed = store.count(CellStatus::failed);
  out.aborted = store.count(CellStatus::aborted);
  out.pending = store.count(CellStatus::pending);
  return out;
}

CampaignOutcome run_controllability(const Config& config, const Workspace& workspace, Provider& provider,
                                    const ConditionFilter& filter, const RunOptions& options) {
  const auto all = controllability_cells(config);
  const fs::path dir = controllability_dir(config, provider.name());

  RunManifest manifest;
  manifest.campaign_id = config.campaign_id + "/" + dir.filename().string();
  manifest.config_digest = config_digest(config);
  manifest.kind = "controllability";
  manifest.meta = {{"model", provider.name()}};
  std::map<std::string, PromptCondition> by_key;
  for (const auto& c : all) {
    const auto key = controllability_cell_key(c);
    manifest.cells.push_back({key, CellStatus::pending});
    by_key.emplace(key, c);
  }
  const std::string campaign_id = manifest.campaign_id;
  RunStore store = open_or_create(dir, std::move(manifest));

  std::vector<std::string> selected;
  for (const auto& key : store.resume(config_digest(config)))
    if (filter.matches(by_key.at(key))) selected.push_back(key);

  const auto& settings = config.controllability;
  auto produce = [&](const std::string& key) {
    const PromptCondition& cond = by_key.at(key);
    CellResult result;
    PvqOptions opts;
    opts.parse_mode = settings.parse_mode;
    try {
      for (int it = 1; it <= settings.iterations; ++it) {
        const auto seed = stable_seed(campaign_id, key, static_cast<std::uint64_t>(it));
        PvqRun run = administer_pvq(provider, workspace.builder(), cond, it, seed, opts);
        const bool abort = it == 1 && should_abort(run, settings.abort_fraction);
        result.records.push_back({RecordType::pvq_run, to_json(run)});
        if (abort) {
          result.status = CellStatus::aborted;
          result.detail = std::to_string(run.invalid_count()) + " of " + std::to_string(run.responses.size()) +
                          " replies invalid in iteration 1";
          return result;
        }
      }
    } catch (const TransportError& e) {
      return CellResult{CellStatus::failed, {}, e.what()};
    }
    return result;
  };
  return execute(store, std::move(selected), produce, options);
}

CampaignOutcome run_dialogue_campaign(const Config& config, const Workspace& workspace, Provider& provider,
                                      const std::string& language, ValueKind mode,
                                      std::optional<DialogueCondition> condition, const RunOptions& options) {
  if (std::find(config.languages.begin(), config.languages.end(), language) == config.languages.end())
    throw UsageError("language '" + language + "' is not configured");
  const DialogueCondition dc = condition ? *condition : config.dialogue_condition(language, mode);
  const fs::path dir = dialogue_dir(config, language, mode);
  const auto& settings = config.dialogue;

  struct Cell {
    ValuePair pair;
    Task task;
    int rep;
  };
  RunManifest manifest;
  manifest.campaign_id = config.campaign_id + "/" + dir.filename().string();
  manifest.config_digest = config_digest(config);
  manifest.kind = "dialogue";
  manifest.meta = {{"language", language},
                   {"mode", mode_name(mode)},
                   {"condition", to_json(dc)},
                   {"provider", provider.name()}};
  std::map<std::string, Cell> by_key;
  for (const auto& pair : enumerate_pairs(mode)) {
    for (Task task : settings.tasks) {
      for (int rep = 1; rep <= settings.reps; ++rep) {
        const auto key = dialogue_cell_key(pair, task, rep);
        manifest.cells.push_back({key, CellStatus::pending});
        by_key.emplace(key, Cell{pair, task, rep});
      }
    }
  }
  const std::string campaign_id = manifest.campaign_id;
  RunStore store = open_or_create(dir, std::move(manifest));

  PromptCondition factors;
  factors.person = dc.person;
  factors.placement = dc.placement;
  factors.include_definition = dc.include_definition;
  factors.language = language;

  auto produce = [&](const std::string& key) {
    const Cell& cell = by_key.at(key);
    DialogueOptions opts;
    opts.turns = settings.turns;
    opts.joint_trust_items = settings.joint_trust_items;
    opts.parse_mode = settings.parse_mode;
    opts.seed = stable_seed(campaign_id, key, static_cast<std::uint64_t>(cell.rep));
    try {
      auto r = run_repetition(provider, workspace.builder(), factors, cell.pair, cell.task, cell.rep,
                              settings.retry_budget, opts);
      CellResult result;
      result.records.push_back({RecordType::transcript, to_json(r.transcript)});
      result.records.push_back({RecordType::evaluation, to_json(r.evaluations[0])});
      result.records.push_back({RecordType::evaluation, to_json(r.evaluations[1])});
      if (r.attempts > 1) result.detail = std::to_string(r.attempts) + " attempts";
      return result;
    } catch (const TransportError& e) {
      return CellResult{CellStatus::failed, {}, e.what()};
    }
  };
  return execute(store, store.resume(config_digest(config)), produce, options);
}

}  // namespace valsim
