#include "valsim/config.hpp"

#include <algorithm>
#include <initializer_list>

#include "jsonl.hpp"
#include "valsim/digest.hpp"
#include "valsim/error.hpp"

namespace valsim {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

void reject_unknown_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
  }
}

std::string_view to_string(ParseMode m) { return m == ParseMode::strict ? "strict" : "first_integer"; }

ParseMode parse_mode(const std::string& s) {
  if (s == "first_integer") return ParseMode::first_integer;
  if (s == "strict") return ParseMode::strict;
  throw ConfigError("unknown parse_mode '" + s + "' (expected first_integer|strict)");
}

std::string_view to_string(Pooling p) { return p == Pooling::pooled ? "pooled" : "per_iteration"; }

Pooling parse_pooling(const std::string& s) {
  if (s == "pooled") return Pooling::pooled;
  if (s == "per_iteration") return Pooling::per_iteration;
  throw ConfigError("unknown pooling '" + s + "' (expected pooled|per_iteration)");
}

std::string resolve(const fs::path& base, const std::string& p) {
  if (p.empty() || base.empty() || fs::path(p).is_absolute()) return p;
  return (base / p).lexically_normal().string();
}

std::string condition_slot(const std::string& language, ValueKind kind) {
  return language + "." + (kind == ValueKind::basic ? "basic" : "higher");
}

}  // namespace

const ProviderConfig& Config::provider(std::string_view name) const {
  for (const auto& p : providers)
    if (p.name == name) return p;
  std::string known;
  for (const auto& p : providers) known += (known.empty() ? "" : ", ") + p.name;
  throw UsageError("unknown model '" + std::string(name) + "' (configured: " + known + ")");
}

const ProviderConfig& Config::dialogue_provider() const {
  if (!dialogue.provider.empty()) return provider(dialogue.provider);
  if (providers.empty()) throw ConfigError("no providers configured");
  return providers.front();
}

DialogueCondition Config::dialogue_condition(const std::string& language, ValueKind kind) const {
  const auto slot = condition_slot(language, kind);
  auto it = dialogue.conditions.find(slot);
  if (it == dialogue.conditions.end())
    throw ConfigError("no dialogue condition selected for '" + slot + "' (set dialogue.conditions." + slot +
                      " or pass --condition)");
  return it->second;
}

Config config_from_json(const json& j, const fs::path& base_dir) {
  reject_unknown_keys(j,
                      {"campaign_id", "providers", "languages", "circumplex", "data", "output_dir", "workers",
                       "audit_log", "controllability", "dialogue"},
                      "config");
  Config c;
  try {
    c.campaign_id = j.value("campaign_id", c.campaign_id);
    if (c.campaign_id.empty() || c.campaign_id.find('/') != std::string::npos)
      throw ConfigError("config: campaign_id must be a non-empty name without '/'");
    for (const auto& p : j.value("providers", json::array())) c.providers.push_back(provider_config_from_json(p));
    for (std::size_t i = 0; i < c.providers.size(); ++i)
      for (std::size_t k = 0; k < i; ++k)
        if (c.providers[i].name == c.providers[k].name)
          throw ConfigError("config: provider '" + c.providers[i].name + "' defined twice");
    c.languages = j.value("languages", c.languages);
    if (c.languages.empty()) throw ConfigError("config: at least one language is required");
    for (const auto& l : c.languages)
      if (l != "en" && l != "ja") throw ConfigError("config: unsupported language '" + l + "' (expected en|ja)");

    if (auto it = j.find("circumplex"); it != j.end()) {
      reject_unknown_keys(*it, {"hedonism"}, "circumplex");
      c.circumplex = CircumplexConfig(parse_dimension(it->value("hedonism", std::string("openness-to-change"))));
    }
    if (auto it = j.find("data"); it != j.end()) {
      reject_unknown_keys(*it, {"values", "templates", "instruments"}, "data");
      c.data.values = it->value("values", c.data.values);
      c.data.templates = it->value("templates", c.data.templates);
      c.data.instruments = it->value("instruments", c.data.instruments);
    }
    c.data.values = resolve(base_dir, c.data.values);
    c.data.templates = resolve(base_dir, c.data.templates);
    c.data.instruments = resolve(base_dir, c.data.instruments);
    c.output_dir = resolve(base_dir, j.value("output_dir", c.output_dir));
    c.audit_log = resolve(base_dir, j.value("audit_log", c.audit_log));
    c.workers = j.value("workers", c.workers);
    if (c.workers < 1) throw ConfigError("config: workers must be positive");

    if (auto it = j.find("controllability"); it != j.end()) {
      reject_unknown_keys(*it, {"iterations", "abort_fraction", "pooling", "parse_mode"}, "controllability");
      auto& s = c.controllability;
      s.iterations = it->value("iterations", s.iterations);
      s.abort_fraction = it->value("abort_fraction", s.abort_fraction);
      s.pooling = parse_pooling(it->value("pooling", std::string(to_string(s.pooling))));
      s.parse_mode = parse_mode(it->value("parse_mode", std::string(to_string(s.parse_mode))));
      if (s.iterations < 1) throw ConfigError("controllability: iterations must be positive");
      if (s.abort_fraction <= 0.0 || s.abort_fraction > 1.0)
        throw ConfigError("controllability: abort_fraction must lie in (0, 1]");
    }
    if (auto it = j.find("dialogue"); it != j.end()) {
      reject_unknown_keys(*it,
                          {"turns", "reps", "tasks", "retry_budget", "joint_trust_items", "parse_mode", "provider",
                           "conditions"},
                          "dialogue");
      auto& d = c.dialogue;
      d.turns = it->value("turns", d.turns);
      d.reps = it->value("reps", d.reps);
      if (auto t = it->find("tasks"); t != it->end()) {
        d.tasks.clear();
        for (const auto& name : *t) d.tasks.push_back(parse_task(name.get<std::string>()));
        if (d.tasks.empty()) throw ConfigError("dialogue: at least one task is required");
      }
      d.retry_budget = it->value("retry_budget", d.retry_budget);
      d.joint_trust_items = it->value("joint_trust_items", d.joint_trust_items);
      d.parse_mode = parse_mode(it->value("parse_mode", std::string(to_string(d.parse_mode))));
      d.provider = it->value("provider", d.provider);
      if (d.turns < 2) throw ConfigError("dialogue: turns must be at least 2");
      if (d.reps < 1) throw ConfigError("dialogue: reps must be positive");
      if (d.retry_budget < 0) throw ConfigError("dialogue: retry_budget must be non-negative");
      const json conditions = it->value("conditions", json::object());
      for (const auto& [slot, cond] : conditions.items()) {
        reject_unknown_keys(cond, {"person", "placement", "definition"}, "dialogue.conditions." + slot);
        const auto dot = slot.find('.');
        if (dot == std::string::npos) throw ConfigError("dialogue.conditions: key '" + slot + "' is not <lang>.<mode>");
        const auto kind = parse_value_kind(slot.substr(dot + 1));
        DialogueCondition dc;
        dc.person = parse_person(cond.at("person").get<std::string>());
        dc.placement = parse_placement(cond.at("placement").get<std::string>());
        dc.include_definition = cond.at("definition").get<bool>();
        d.conditions[condition_slot(slot.substr(0, dot), kind)] = dc;
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!c.dialogue.provider.empty()) (void)c.dialogue_provider();
  return c;
}

Config load_config(const fs::path& path) {
  json j;
  try {
    j = json::parse(detail::read_file(path.string()));
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

json to_json(const Config& c) {
  json providers = json::array();
  for (const auto& p : c.providers) providers.push_back(to_json(p));
  json tasks = json::array();
  for (Task t : c.dialogue.tasks) tasks.push_back(std::string(to_string(t)));
  json conditions = json::object();
  for (const auto& [slot, dc] : c.dialogue.conditions) {
    conditions[slot] = {{"person", std::string(to_string(dc.person))},
                        {"placement", std::string(to_string(dc.placement))},
                        {"definition", dc.include_definition}};
  }
  return {
      {"campaign_id", c.campaign_id},
      {"providers", std::move(providers)},
      {"languages", c.languages},
      {"circumplex", {{"hedonism", std::string(to_string(c.circumplex.hedonism_dimension()))}}},
      {"data", {{"values", c.data.values}, {"templates", c.data.templates}, {"instruments", c.data.instruments}}},
      {"controllability",
       {{"iterations", c.controllability.iterations},
        {"abort_fraction", c.controllability.abort_fraction},
        {"pooling", std::string(to_string(c.controllability.pooling))},
        {"parse_mode", std::string(to_string(c.controllability.parse_mode))}}},
      {"dialogue",
       {{"turns", c.dialogue.turns},
        {"reps", c.dialogue.reps},
        {"tasks", std::move(tasks)},
        {"retry_budget", c.dialogue.retry_budget},
        {"joint_trust_items", c.dialogue.joint_trust_items},
        {"parse_mode", std::string(to_string(c.dialogue.parse_mode))},
        {"provider", c.dialogue.provider},
        {"conditions", std::move(conditions)}}},
  };
}

std::string config_digest(const Config& c) {
  json j = to_json(c);
  // Paths are where the data lives, not what it is; hash contents instead.
  j["data"] = {{"values", sha256_hex(detail::read_file(c.data.values))},
               {"templates", sha256_hex(detail::read_file(c.data.templates))},
               {"instruments", sha256_hex(detail::read_file(c.data.instruments))}};
  // nlohmann::json objects are key-sorted, so dump() is canonical.
  return sha256_hex(j.dump());
}

Workspace::Workspace(const Config& config)
    : catalog_(ValueCatalog::load(config.data.values)),
      templates_(TemplateSet::load(config.data.templates)),
      instruments_(InstrumentBank::load(config.data.instruments)),
      builder_(catalog_, templates_, instruments_, config.circumplex) {
  catalog_.require_languages(config.languages);
  templates_.require_languages(config.languages);
  instruments_.require_languages(config.languages);
}

}  // namespace valsim
