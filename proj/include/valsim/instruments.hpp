#pragma once

// Questionnaire instruments (PVQ-40, three-item trust scale, IOS), reply
// parsing and score composition.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "valsim/values.hpp"

namespace valsim {

enum class Instrument : std::uint8_t { pvq, trust, ios };

std::string_view to_string(Instrument instrument);
Instrument parse_instrument(std::string_view s);

struct RatingScale {
  int min = 1;
  int max = 6;
  // One label per scale point, min first. May be empty.
  std::vector<std::string> anchor_labels;

  int points() const { return max - min + 1; }
  bool contains(int r) const { return r >= min && r <= max; }
};

inline const RatingScale kPvqScale{1, 6, {}};
inline const RatingScale kTrustScale{1, 5, {}};
inline const RatingScale kIosScale{1, 7, {}};

struct InstrumentItem {
  Instrument instrument = Instrument::pvq;
  int index = 0;
  std::string text;
  // Set for PVQ items only.
  std::optional<BasicValue> target_value;
  RatingScale scale;
};

// The published PVQ-40 scoring key: item index (1-based) -> basic value.
std::span<const BasicValue, 40> pvq40_key();

// Item banks for all instruments and languages, loaded from a line-delimited
// file of {instrument, index, language, text, target_value?, scale_min,
// scale_max} records. Scale anchors and IOS options are records with
// instrument "pvq_anchor", "trust_anchor" or "ios_option".
class InstrumentBank {
 public:
  static InstrumentBank load(const std::string& path);
  static InstrumentBank parse(std::string_view jsonl, std::string_view source = "<memory>");

  // Throws ConfigError if any instrument is incomplete for a language, or the
  // PVQ key disagrees with the published one.
  void require_languages(std::span<const std::string> languages) const;

  bool has(Instrument instrument, std::string_view language) const;
  // Items in index order. Throws ConfigError when the bank is missing.
  const std::vector<InstrumentItem>& items(Instrument instrument, std::string_view language) const;
  const InstrumentItem& item(Instrument instrument, std::string_view language, int index) const;

 private:
  std::map<std::pair<Instrument, std::string>, std::vector<InstrumentItem>> banks_;
};

// Seeded Fisher-Yates permutation of the 40 PVQ items.
std::vector<InstrumentItem> pvq_items(const InstrumentBank& bank, std::string_view language,
                                      std::uint64_t order_seed);

// Fisher-Yates over mt19937_64 with a rejection-sampled bounded draw, so the
// permutation for a seed is the same under every standard library
// (std::uniform_int_distribution and std::shuffle are not).
class SeededShuffle {
 public:
  explicit SeededShuffle(std::uint64_t seed);
  std::uint64_t below(std::uint64_t bound);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

enum class ParseMode : std::uint8_t {
  // First standalone integer anywhere in the reply.
  first_integer,
  // The trimmed reply must be exactly one integer.
  strict,
};

// Extracts a rating from a free-text reply. A standalone integer is a
// maximal run of digits that is not part of a decimal number such as "3.5"
// or a digit group such as "1,000". Full-width digits count. Returns
// nullopt when no candidate exists or it falls outside the scale.
std::optional<int> parse_rating(std::string_view raw, const RatingScale& scale,
                                ParseMode mode = ParseMode::first_integer);

// The first `count` standalone integers, each checked against `scale`.
// Used when several items are asked in one request.
std::vector<std::optional<int>> parse_ratings(std::string_view raw, const RatingScale& scale, std::size_t count);

// Affine map of the scale onto [0, 1]. Throws ValidationError out of range.
double normalize(int raw, const RatingScale& scale);

struct MutualEvaluation {
  std::array<int, 3> trust_items{};
  double trust_mean = 0.0;
  int ios = 0;
};

// Mean of the three trust items. Throws ValidationError if any is outside
// 1..5.
double trust_score(std::span<const int, 3> items);

}  // namespace valsim
