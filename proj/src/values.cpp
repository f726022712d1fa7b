#include "valsim/values.hpp"

#include <algorithm>

#include "jsonl.hpp"
#include "valsim/error.hpp"

namespace valsim {
namespace {

constexpr std::array<std::string_view, 10> kBasicIds{
    "power",          "achievement",  "hedonism",    "stimulation", "self-direction",
    "universalism",   "benevolence",  "tradition",   "conformity",  "security"};

constexpr std::array<std::string_view, 4> kDimensionIds{
    "self-enhancement", "self-transcendence", "openness-to-change", "conservation"};

constexpr std::array<std::string_view, 4> kLevelNames{
    "high-identical", "high-same-dimension", "medium", "low"};

const std::array<ValueRef, 10> kBasicRefs = [] {
  std::array<ValueRef, 10> out;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = kBasicValues[i];
  return out;
}();

const std::array<ValueRef, 4> kDimensionRefs = [] {
  std::array<ValueRef, 4> out;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = kDimensions[i];
  return out;
}();

}  // namespace

ValueKind kind_of(const ValueRef& v) {
  return std::holds_alternative<BasicValue>(v) ? ValueKind::basic : ValueKind::higher_order;
}

std::span<const ValueRef> all_values(ValueKind kind) {
  if (kind == ValueKind::basic) return kBasicRefs;
  return kDimensionRefs;
}

std::string_view to_string(BasicValue v) { return kBasicIds[static_cast<std::size_t>(v)]; }
std::string_view to_string(Dimension d) { return kDimensionIds[static_cast<std::size_t>(d)]; }

std::string_view to_string(const ValueRef& v) {
  return std::visit([](auto x) { return to_string(x); }, v);
}

std::string_view to_string(ValueKind k) { return k == ValueKind::basic ? "basic" : "higher-order"; }

std::string_view to_string(SimilarityLevel level) {
  return kLevelNames[static_cast<std::size_t>(level)];
}

BasicValue parse_basic_value(std::string_view id) {
  for (std::size_t i = 0; i < kBasicIds.size(); ++i)
    if (kBasicIds[i] == id) return kBasicValues[i];
  throw ValidationError("unknown basic value '" + std::string(id) + "'");
}

Dimension parse_dimension(std::string_view id) {
  for (std::size_t i = 0; i < kDimensionIds.size(); ++i)
    if (kDimensionIds[i] == id) return kDimensions[i];
  throw ValidationError("unknown higher-order value '" + std::string(id) + "'");
}

ValueRef parse_value(std::string_view id) {
  for (std::size_t i = 0; i < kBasicIds.size(); ++i)
    if (kBasicIds[i] == id) return kBasicValues[i];
  for (std::size_t i = 0; i < kDimensionIds.size(); ++i)
    if (kDimensionIds[i] == id) return kDimensions[i];
  throw ValidationError("unknown value '" + std::string(id) + "'");
}

ValueKind parse_value_kind(std::string_view s) {
  if (s == "basic") return ValueKind::basic;
  if (s == "higher-order" || s == "higher") return ValueKind::higher_order;
  throw ValidationError("unknown value kind '" + std::string(s) + "'");
}

Dimension opposing(Dimension d) {
  switch (d) {
    case Dimension::self_enhancement: return Dimension::self_transcendence;
    case Dimension::self_transcendence: return Dimension::self_enhancement;
    case Dimension::openness_to_change: return Dimension::conservation;
    case Dimension::conservation: return Dimension::openness_to_change;
  }
  return d;
}

CircumplexConfig::CircumplexConfig(Dimension hedonism_dimension) : hedonism_(hedonism_dimension) {
  if (hedonism_dimension != Dimension::openness_to_change &&
      hedonism_dimension != Dimension::self_enhancement)
    throw ConfigError("hedonism can only be placed in openness-to-change or self-enhancement, got '" +
                      std::string(to_string(hedonism_dimension)) + "'");
  auto set = [this](BasicValue v, Dimension d) { membership_[static_cast<std::size_t>(v)] = d; };
  set(BasicValue::power, Dimension::self_enhancement);
  set(BasicValue::achievement, Dimension::self_enhancement);
  set(BasicValue::hedonism, hedonism_dimension);
  set(BasicValue::stimulation, Dimension::openness_to_change);
  set(BasicValue::self_direction, Dimension::openness_to_change);
  set(BasicValue::universalism, Dimension::self_transcendence);
  set(BasicValue::benevolence, Dimension::self_transcendence);
  set(BasicValue::tradition, Dimension::conservation);
  set(BasicValue::conformity, Dimension::conservation);
  set(BasicValue::security, Dimension::conservation);
}

std::vector<BasicValue> CircumplexConfig::members(Dimension d) const {
  std::vector<BasicValue> out;
  for (BasicValue v : kBasicValues)
    if (dimension_of(v) == d) out.push_back(v);
  return out;
}

SimilarityLevel classify_similarity(const ValueRef& a, const ValueRef& b, const CircumplexConfig& config) {
  if (kind_of(a) != kind_of(b))
    throw ValidationError("cannot compare '" + std::string(to_string(a)) + "' with '" +
                          std::string(to_string(b)) + "': different value kinds");
  if (a == b) return SimilarityLevel::high_identical;

  Dimension da, db;
  if (const auto* ba = std::get_if<BasicValue>(&a)) {
    da = config.dimension_of(*ba);
    db = config.dimension_of(std::get<BasicValue>(b));
    if (da == db) return SimilarityLevel::high_same_dimension;
  } else {
    da = std::get<Dimension>(a);
    db = std::get<Dimension>(b);
  }
  return opposing(da) == db ? SimilarityLevel::low : SimilarityLevel::medium;
}

std::vector<ValuePair> enumerate_pairs(ValueKind kind) { return unordered_pairs(all_values(kind)); }

// ---- catalog ---------------------------------------------------------------

ValueCatalog ValueCatalog::load(const std::string& path) {
  return parse(detail::read_file(path), path);
}

ValueCatalog ValueCatalog::parse(std::string_view jsonl, std::string_view source) {
  ValueCatalog catalog;
  detail::for_each_jsonl(jsonl, source, [&](const nlohmann::json& r, std::size_t line) {
    const std::string id = detail::require_string(r, "id", source, line);
    const std::string language = detail::require_string(r, "language", source, line);
    ValueRef value;
    try {
      value = parse_value(id);
    } catch (const ValidationError& e) {
      throw ConfigError(std::string(source) + ":" + std::to_string(line) + ": " + e.what());
    }
    if (auto kind = r.find("kind"); kind != r.end()) {
      if (!kind->is_string() || parse_value_kind(kind->get<std::string>()) != kind_of(value))
        throw ConfigError(std::string(source) + ":" + std::to_string(line) + ": kind does not match id '" +
                          id + "'");
    }
    Entry entry;
    entry.label = detail::require_string(r, "label", source, line);
    entry.definition = r.value("definition", std::string{});
    catalog.add(value, language, std::move(entry));
  });
  return catalog;
}

void ValueCatalog::add(const ValueRef& value, const std::string& language, Entry entry) {
  entries_[{value, language}] = std::move(entry);
}

bool ValueCatalog::has_language(std::string_view language) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const auto& kv) { return kv.first.second == language; });
}

const ValueCatalog::Entry& ValueCatalog::entry(const ValueRef& value, std::string_view language) const {
  auto it = entries_.find({value, std::string(language)});
  if (it == entries_.end())
    throw ConfigError("no localization for value '" + std::string(to_string(value)) + "' in language '" +
                      std::string(language) + "'");
  return it->second;
}

const std::string& ValueCatalog::label(const ValueRef& value, std::string_view language) const {
  const Entry& e = entry(value, language);
  if (e.label.empty())
    throw ConfigError("empty label for value '" + std::string(to_string(value)) + "' in language '" +
                      std::string(language) + "'");
  return e.label;
}

const std::string& ValueCatalog::basic_definition(BasicValue value, std::string_view language) const {
  const Entry& e = entry(value, language);
  if (e.definition.empty())
    throw ConfigError("empty definition for value '" + std::string(to_string(value)) + "' in language '" +
                      std::string(language) + "'");
  return e.definition;
}

void ValueCatalog::require_languages(std::span<const std::string> languages) const {
  for (const auto& lang : languages) {
    for (BasicValue v : kBasicValues) {
      (void)label(v, lang);
      (void)basic_definition(v, lang);
    }
    for (Dimension d : kDimensions) (void)label(d, lang);
  }
}

std::string join_enumeration(std::span<const std::string> items, std::string_view language) {
  std::string out;
  if (language == "ja") {
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i > 0) out += "、";
      out += items[i];
    }
    return out;
  }
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) {
      if (items.size() == 2) out += " and ";
      else if (i + 1 == items.size()) out += ", and ";
      else out += ", ";
    }
    out += items[i];
  }
  return out;
}

std::string value_definition(const ValueCatalog& catalog, const ValueRef& value, std::string_view language,
                             const CircumplexConfig& config) {
  if (const auto* basic = std::get_if<BasicValue>(&value)) return catalog.basic_definition(*basic, language);
  std::vector<std::string> labels;
  for (BasicValue member : config.members(std::get<Dimension>(value)))
    labels.push_back(catalog.label(member, language));
  return join_enumeration(labels, language);
}

}  // namespace valsim
