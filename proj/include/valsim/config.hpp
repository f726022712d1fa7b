#pragma once

// Experiment configuration: providers, languages, circumplex placement,
// protocol constants, data files, and the digest that pins a campaign to
// them.

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "valsim/controllability.hpp"
#include "valsim/instruments.hpp"
#include "valsim/prompts.hpp"
#include "valsim/provider.hpp"
#include "valsim/values.hpp"

namespace valsim {

struct DataPaths {
  std::string values = "data/values.jsonl";
  std::string templates = "data/templates.jsonl";
  std::string instruments = "data/instruments.sample.jsonl";
};

struct ControllabilitySettings {
  int iterations = 50;
  double abort_fraction = 0.10;
  Pooling pooling = Pooling::pooled;
  ParseMode parse_mode = ParseMode::first_integer;
};

// Prompt factors shared by both agents of every dialogue.
struct DialogueCondition {
  Person person = Person::second;
  Placement placement = Placement::system;
  bool include_definition = true;
};

struct DialogueSettings {
  int turns = 10;
  int reps = 10;
  std::vector<Task> tasks{Task::hobbies, Task::housing};
  // Extra attempts for a repetition that hits a transport failure.
  int retry_budget = 2;
  bool joint_trust_items = false;
  ParseMode parse_mode = ParseMode::first_integer;
  // Provider used for dialogues; empty means the first configured.
  std::string provider;
  // Selected best condition per "<language>.<basic|higher>".
  std::map<std::string, DialogueCondition> conditions;
};

struct Config {
  std::string campaign_id = "default";
  std::vector<ProviderConfig> providers;
  std::vector<std::string> languages{"en", "ja"};
  CircumplexConfig circumplex;
  DataPaths data;
  std::string output_dir = "runs";
  int workers = 4;
  // Request/response audit log; empty disables it.
  std::string audit_log;
  ControllabilitySettings controllability;
  DialogueSettings dialogue;

  // Throws UsageError for an unknown name.
  const ProviderConfig& provider(std::string_view name) const;
  const ProviderConfig& dialogue_provider() const;
  // Throws ConfigError when no condition is selected for the combination.
  DialogueCondition dialogue_condition(const std::string& language, ValueKind kind) const;
};

// Relative data and output paths resolve against `base_dir`. Unknown keys
// are rejected so typos do not silently fall back to defaults.
Config config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
Config load_config(const std::filesystem::path& path);
nlohmann::json to_json(const Config& c);

// SHA-256 over the canonical experiment-relevant configuration plus the
// contents of the data files. Operational settings (workers, output
// directory, timeouts, retries, pacing, audit log, simulated latency) are
// excluded so they can change between a run and its resume.
std::string config_digest(const Config& c);

// Loaded data files and a prompt builder over them. Not movable: the
// builder refers to the other members.
class Workspace {
 public:
  explicit Workspace(const Config& config);
  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;

  const ValueCatalog& catalog() const { return catalog_; }
  const TemplateSet& templates() const { return templates_; }
  const InstrumentBank& instruments() const { return instruments_; }
  const PromptBuilder& builder() const { return builder_; }

 private:
  ValueCatalog catalog_;
  TemplateSet templates_;
  InstrumentBank instruments_;
  PromptBuilder builder_;
};

}  // namespace valsim
