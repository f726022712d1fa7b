#pragma once

// Resumable campaigns over the run store.
//
// Controllability: one cell per (language, condition, value); a cell runs
// iteration 1, applies the abort rule, then the remaining iterations.
// Dialogue: one cell per (pair, task, repetition).
//
// Seeds derive from (campaign id, cell key, iteration), so a cell's records
// do not depend on scheduling, worker count, or which run executed it.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "valsim/config.hpp"
#include "valsim/executor.hpp"
#include "valsim/runstore.hpp"

namespace valsim {

struct RunOptions {
  unsigned workers = 1;
  // Use the serial reference executor regardless of `workers`.
  bool serial = false;
  const CancelToken* cancel = nullptr;
  // Only cells whose key passes run in this invocation.
  std::function<bool(const std::string& cell)> cell_filter;
  // Stop after this many cells have been committed in this invocation.
  std::optional<std::size_t> max_cells;
  // Called on the committing thread after each cell with the number of
  // cells committed so far in this invocation and the number scheduled.
  std::function<void(const std::string& cell, CellStatus status, std::size_t committed, std::size_t scheduled)>
      progress;
};

struct CampaignOutcome {
  std::filesystem::path dir;
  std::size_t total = 0;
  std::size_t done = 0;
  std::size_t failed = 0;
  std::size_t aborted = 0;
  std::size_t pending = 0;
  // Cells executed by this invocation.
  std::size_t ran = 0;
  bool cancelled = false;

  bool complete() const { return pending == 0 && failed == 0; }
};

// Condition subset for the controllability grid, e.g. "person=2",
// "placement=user", "definition=no", "language=ja", "values=higher".
struct ConditionFilter {
  std::optional<Person> person;
  std::optional<Placement> placement;
  std::optional<bool> include_definition;
  std::optional<std::string> language;
  std::optional<ValueKind> values;

  bool matches(const PromptCondition& c) const;
};

// Throws UsageError for a malformed expression.
ConditionFilter parse_filter(std::span<const std::string> expressions);

std::string controllability_cell_key(const PromptCondition& c);
std::string dialogue_cell_key(const ValuePair& pair, Task task, int repetition);

std::filesystem::path campaign_root(const Config& config);
std::filesystem::path controllability_dir(const Config& config, const std::string& model);
std::filesystem::path dialogue_dir(const Config& config, const std::string& language, ValueKind mode);

// Every (language, value set, condition, value) cell in report order.
std::vector<PromptCondition> controllability_cells(const Config& config);

// Creates or resumes the campaign and runs the pending cells that pass the
// filter. Throws ConfigError when resuming under a different digest.
CampaignOutcome run_controllability(const Config& config, const Workspace& workspace, Provider& provider,
                                    const ConditionFilter& filter = {}, const RunOptions& options = {});

// Creates or resumes a dialogue campaign for one language and value set.
// `condition` overrides the configured selection; resuming under a
// different condition than the campaign was created with is refused.
CampaignOutcome run_dialogue_campaign(const Config& config, const Workspace& workspace, Provider& provider,
                                      const std::string& language, ValueKind mode,
                                      std::optional<DialogueCondition> condition = std::nullopt,
                                      const RunOptions& options = {});

CampaignOutcome summarize(const RunStore& store);

}  // namespace valsim
