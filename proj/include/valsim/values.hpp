#pragma once

// Schwartz value model: the ten basic values, the four higher-order
// dimensions, dimension membership, opposition, and pair similarity.

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace valsim {

enum class BasicValue : std::uint8_t {
  power,
  achievement,
  hedonism,
  stimulation,
  self_direction,
  universalism,
  benevolence,
  tradition,
  conformity,
  security,
};

enum class Dimension : std::uint8_t {
  self_enhancement,
  self_transcendence,
  openness_to_change,
  conservation,
};

// Canonical enumeration order. Pair manifests, matrix rows and flattened
// vectors all follow it.
inline constexpr std::array<BasicValue, 10> kBasicValues{
    BasicValue::power,        BasicValue::achievement,  BasicValue::hedonism,
    BasicValue::stimulation,  BasicValue::self_direction, BasicValue::universalism,
    BasicValue::benevolence,  BasicValue::tradition,    BasicValue::conformity,
    BasicValue::security,
};

inline constexpr std::array<Dimension, 4> kDimensions{
    Dimension::self_enhancement,
    Dimension::self_transcendence,
    Dimension::openness_to_change,
    Dimension::conservation,
};

enum class ValueKind : std::uint8_t { basic, higher_order };

// A value of either kind. Ordered by kind first, then canonical index.
using ValueRef = std::variant<BasicValue, Dimension>;

ValueKind kind_of(const ValueRef& v);
std::span<const ValueRef> all_values(ValueKind kind);

std::string_view to_string(BasicValue v);
std::string_view to_string(Dimension d);
std::string_view to_string(const ValueRef& v);
std::string_view to_string(ValueKind k);

// Parses identifiers such as "self-direction" or "openness-to-change".
// Throws ValidationError on unknown ids.
ValueRef parse_value(std::string_view id);
BasicValue parse_basic_value(std::string_view id);
Dimension parse_dimension(std::string_view id);
ValueKind parse_value_kind(std::string_view s);

Dimension opposing(Dimension d);

class CircumplexConfig {
 public:
  // Default placement: hedonism belongs to openness-to-change.
  CircumplexConfig() : CircumplexConfig(Dimension::openness_to_change) {}
  // Only openness-to-change and self-enhancement are accepted.
  explicit CircumplexConfig(Dimension hedonism_dimension);

  Dimension hedonism_dimension() const { return hedonism_; }
  Dimension dimension_of(BasicValue v) const { return membership_[static_cast<std::size_t>(v)]; }
  // Members in canonical order.
  std::vector<BasicValue> members(Dimension d) const;

  friend bool operator==(const CircumplexConfig&, const CircumplexConfig&) = default;

 private:
  Dimension hedonism_;
  std::array<Dimension, 10> membership_{};
};

inline Dimension dimension_of(BasicValue v, const CircumplexConfig& config) {
  return config.dimension_of(v);
}

enum class SimilarityLevel : std::uint8_t {
  high_identical,
  high_same_dimension,
  medium,
  low,
};

inline constexpr std::array<SimilarityLevel, 4> kSimilarityLevels{
    SimilarityLevel::high_identical, SimilarityLevel::high_same_dimension,
    SimilarityLevel::medium, SimilarityLevel::low};

std::string_view to_string(SimilarityLevel level);

// Throws ValidationError when a and b are of different kinds.
SimilarityLevel classify_similarity(const ValueRef& a, const ValueRef& b,
                                    const CircumplexConfig& config = {});

// All unordered pairs (with repetition) of `universe`, i <= j, in
// row-major canonical order. n values yield n(n+1)/2 pairs.
template <typename T>
std::vector<std::pair<T, T>> unordered_pairs(std::span<const T> universe) {
  std::vector<std::pair<T, T>> out;
  out.reserve(universe.size() * (universe.size() + 1) / 2);
  for (std::size_t i = 0; i < universe.size(); ++i)
    for (std::size_t j = i; j < universe.size(); ++j) out.emplace_back(universe[i], universe[j]);
  return out;
}

using ValuePair = std::pair<ValueRef, ValueRef>;

// 55 pairs for basic values, 10 for higher-order dimensions.
std::vector<ValuePair> enumerate_pairs(ValueKind kind);

// Localized labels and definitions, loaded from a line-delimited file of
// {id, kind, language, label, definition} records.
class ValueCatalog {
 public:
  struct Entry {
    std::string label;
    std::string definition;
  };

  ValueCatalog() = default;

  static ValueCatalog load(const std::string& path);
  static ValueCatalog parse(std::string_view jsonl, std::string_view source = "<memory>");

  void add(const ValueRef& value, const std::string& language, Entry entry);

  // Every basic value needs a label and definition, every dimension a label,
  // in each of `languages`. Throws ConfigError naming the first gap.
  void require_languages(std::span<const std::string> languages) const;

  const std::string& label(const ValueRef& value, std::string_view language) const;
  const std::string& basic_definition(BasicValue value, std::string_view language) const;
  bool has_language(std::string_view language) const;

 private:
  const Entry& entry(const ValueRef& value, std::string_view language) const;

  std::map<std::pair<ValueRef, std::string>, Entry> entries_;
};

// Joins phrases the way the language lists them ("a, b, and c" in English).
std::string join_enumeration(std::span<const std::string> items, std::string_view language);

// Basic value: its localized definition. Dimension: the enumeration of its
// constituent basic value labels under `config`.
std::string value_definition(const ValueCatalog& catalog, const ValueRef& value,
                             std::string_view language, const CircumplexConfig& config = {});

}  // namespace valsim
