#include "valsim/instruments.hpp"

#include <algorithm>
#include <cctype>
#include <limits>

#include "jsonl.hpp"
#include "valsim/error.hpp"

namespace valsim {
namespace {

using BV = BasicValue;

// Schwartz (2001) PVQ-40 key.
constexpr std::array<BasicValue, 40> kPvq40Key{
    BV::self_direction, BV::power,        BV::universalism,  BV::achievement,   BV::security,       //  1- 5
    BV::stimulation,    BV::conformity,   BV::universalism,  BV::tradition,     BV::hedonism,       //  6-10
    BV::self_direction, BV::benevolence,  BV::achievement,   BV::security,      BV::stimulation,    // 11-15
    BV::conformity,     BV::power,        BV::benevolence,   BV::universalism,  BV::tradition,      // 16-20
    BV::security,       BV::self_direction, BV::universalism, BV::achievement,  BV::tradition,      // 21-25
    BV::hedonism,       BV::benevolence,  BV::conformity,    BV::universalism,  BV::stimulation,    // 26-30
    BV::security,       BV::achievement,  BV::benevolence,   BV::self_direction, BV::security,      // 31-35
    BV::conformity,     BV::hedonism,     BV::tradition,     BV::power,         BV::universalism,   // 36-40
};

constexpr std::array<std::string_view, 3> kInstrumentNames{"pvq", "trust", "ios"};

struct AnchorRef {
  Instrument instrument;
  bool is_anchor;
};

std::optional<AnchorRef> classify_record(std::string_view name) {
  if (name == "pvq_anchor") return AnchorRef{Instrument::pvq, true};
  if (name == "trust_anchor") return AnchorRef{Instrument::trust, true};
  if (name == "ios_option") return AnchorRef{Instrument::ios, true};
  for (std::size_t i = 0; i < kInstrumentNames.size(); ++i)
    if (kInstrumentNames[i] == name) return AnchorRef{static_cast<Instrument>(i), false};
  return std::nullopt;
}

std::size_t expected_count(Instrument instrument) {
  switch (instrument) {
    case Instrument::pvq: return 40;
    case Instrument::trust: return 3;
    case Instrument::ios: return 1;
  }
  return 0;
}

const RatingScale& default_scale(Instrument instrument) {
  switch (instrument) {
    case Instrument::pvq: return kPvqScale;
    case Instrument::trust: return kTrustScale;
    case Instrument::ios: return kIosScale;
  }
  return kPvqScale;
}

// Replaces full-width digits (U+FF10..U+FF19) and the full-width hyphen-minus
// with their ASCII forms so replies written in Japanese parse the same.
std::string fold_digits(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto c0 = static_cast<unsigned char>(raw[i]);
    if (c0 == 0xEF && i + 2 < raw.size()) {
      const auto c1 = static_cast<unsigned char>(raw[i + 1]);
      const auto c2 = static_cast<unsigned char>(raw[i + 2]);
      if (c1 == 0xBC && c2 >= 0x90 && c2 <= 0x99) {
        out.push_back(static_cast<char>('0' + (c2 - 0x90)));
        i += 2;
        continue;
      }
      if (c1 == 0xBC && c2 == 0x8D) {
        out.push_back('-');
        i += 2;
        continue;
      }
    }
    out.push_back(raw[i]);
  }
  return out;
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

long long to_int_saturating(std::string_view digits) {
  long long v = 0;
  for (char c : digits) {
    if (v > (std::numeric_limits<long long>::max() - 9) / 10) return std::numeric_limits<long long>::max();
    v = v * 10 + (c - '0');
  }
  return v;
}

// Standalone integers in order of appearance.
std::vector<long long> standalone_integers(const std::string& s, std::size_t limit) {
  std::vector<long long> out;
  std::size_t i = 0;
  while (i < s.size() && out.size() < limit) {
    if (!is_digit(s[i])) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < s.size() && is_digit(s[i])) ++i;
    std::size_t end = i;
    bool embedded = false;
    // A decimal point or a three-digit group continues the same number;
    // "4,5,3" is three integers, "1,000" and "3.5" are not integers.
    while (i + 1 < s.size() && is_digit(s[i + 1])) {
      std::size_t run = i + 1;
      while (run < s.size() && is_digit(s[run])) ++run;
      if (s[i] == '.' || (s[i] == ',' && run - (i + 1) == 3)) {
        embedded = true;
        i = run;
      } else {
        break;
      }
    }
    if (embedded) continue;
    long long value = to_int_saturating(std::string_view(s).substr(start, end - start));
    if (start > 0 && s[start - 1] == '-' && (start < 2 || !is_alnum(s[start - 2]))) value = -value;
    out.push_back(value);
  }
  return out;
}

std::optional<int> checked(long long v, const RatingScale& scale) {
  if (v < scale.min || v > scale.max) return std::nullopt;
  return static_cast<int>(v);
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string_view to_string(Instrument instrument) {
  return kInstrumentNames[static_cast<std::size_t>(instrument)];
}

Instrument parse_instrument(std::string_view s) {
  for (std::size_t i = 0; i < kInstrumentNames.size(); ++i)
    if (kInstrumentNames[i] == s) return static_cast<Instrument>(i);
  throw ValidationError("unknown instrument '" + std::string(s) + "'");
}

std::span<const BasicValue, 40> pvq40_key() { return kPvq40Key; }

// ---- bank ------------------------------------------------------------------

InstrumentBank InstrumentBank::load(const std::string& path) { return parse(detail::read_file(path), path); }

InstrumentBank InstrumentBank::parse(std::string_view jsonl, std::string_view source) {
  InstrumentBank bank;
  std::map<std::pair<Instrument, std::string>, std::map<int, std::string>> anchors;
  auto where = [&](std::size_t line) { return std::string(source) + ":" + std::to_string(line) + ": "; };

  detail::for_each_jsonl(jsonl, source, [&](const nlohmann::json& r, std::size_t line) {
    const std::string name = detail::require_string(r, "instrument", source, line);
    const std::string language = detail::require_string(r, "language", source, line);
    const auto kind = classify_record(name);
    if (!kind) throw ConfigError(where(line) + "unknown instrument '" + name + "'");
    if (!r.contains("index") || !r["index"].is_number_integer())
      throw ConfigError(where(line) + "missing integer field 'index'");
    const int index = r["index"].get<int>();
    std::string text = detail::require_string(r, "text", source, line);
    if (text.empty()) throw ConfigError(where(line) + "empty text");

    if (kind->is_anchor) {
      anchors[{kind->instrument, language}][index] = std::move(text);
      return;
    }

    InstrumentItem item;
    item.instrument = kind->instrument;
    item.index = index;
    item.text = std::move(text);
    item.scale = default_scale(kind->instrument);
    if (r.contains("scale_min")) item.scale.min = r["scale_min"].get<int>();
    if (r.contains("scale_max")) item.scale.max = r["scale_max"].get<int>();
    if (item.scale.min >= item.scale.max) throw ConfigError(where(line) + "scale_min must be below scale_max");
    if (auto tv = r.find("target_value"); tv != r.end() && !tv->is_null()) {
      try {
        item.target_value = parse_basic_value(tv->get<std::string>());
      } catch (const ValidationError& e) {
        throw ConfigError(where(line) + e.what());
      }
    }
    if (item.instrument == Instrument::pvq && !item.target_value)
      throw ConfigError(where(line) + "PVQ item " + std::to_string(index) + " has no target_value");
    auto& items = bank.banks_[{item.instrument, language}];
    if (std::any_of(items.begin(), items.end(), [&](const auto& it) { return it.index == index; }))
      throw ConfigError(where(line) + "duplicate " + name + " item " + std::to_string(index));
    items.push_back(std::move(item));
  });

  for (auto& [key, items] : bank.banks_) {
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
    auto anchor_it = anchors.find(key);
    if (anchor_it == anchors.end()) continue;
    for (auto& item : items) {
      item.scale.anchor_labels.clear();
      for (int p = item.scale.min; p <= item.scale.max; ++p) {
        auto label = anchor_it->second.find(p);
        if (label == anchor_it->second.end()) {
          item.scale.anchor_labels.clear();
          break;
        }
        item.scale.anchor_labels.push_back(label->second);
      }
    }
  }
  return bank;
}

bool InstrumentBank::has(Instrument instrument, std::string_view language) const {
  return banks_.count({instrument, std::string(language)}) > 0;
}

const std::vector<InstrumentItem>& InstrumentBank::items(Instrument instrument, std::string_view language) const {
  auto it = banks_.find({instrument, std::string(language)});
  if (it == banks_.end())
    throw ConfigError("no " + std::string(to_string(instrument)) + " item bank for language '" +
                      std::string(language) + "'");
  return it->second;
}

const InstrumentItem& InstrumentBank::item(Instrument instrument, std::string_view language, int index) const {
  for (const auto& item : items(instrument, language))
    if (item.index == index) return item;
  throw ConfigError("no " + std::string(to_string(instrument)) + " item " + std::to_string(index) +
                    " for language '" + std::string(language) + "'");
}

void InstrumentBank::require_languages(std::span<const std::string> languages) const {
  for (const auto& lang : languages) {
    for (Instrument instrument : {Instrument::pvq, Instrument::trust, Instrument::ios}) {
      const auto& list = items(instrument, lang);
      if (list.size() != expected_count(instrument))
        throw ConfigError(std::string(to_string(instrument)) + " bank for '" + lang + "' has " +
                          std::to_string(list.size()) + " items, expected " +
                          std::to_string(expected_count(instrument)));
      for (std::size_t i = 0; i < list.size(); ++i) {
        if (list[i].index != static_cast<int>(i) + 1)
          throw ConfigError(std::string(to_string(instrument)) + " bank for '" + lang +
                            "' is missing item " + std::to_string(i + 1));
      }
    }
    for (const auto& item : items(Instrument::pvq, lang)) {
      if (item.target_value != kPvq40Key[static_cast<std::size_t>(item.index - 1)])
        throw ConfigError("PVQ item " + std::to_string(item.index) + " for '" + lang + "' is keyed to '" +
                          std::string(to_string(*item.target_value)) + "', published key says '" +
                          std::string(to_string(kPvq40Key[static_cast<std::size_t>(item.index - 1)])) + "'");
    }
    const auto& ios = items(Instrument::ios, lang).front();
    if (ios.scale.anchor_labels.size() != static_cast<std::size_t>(ios.scale.points()))
      throw ConfigError("IOS for '" + lang + "' needs one ios_option record per scale point");
  }
}

// ---- ordering --------------------------------------------------------------

SeededShuffle::SeededShuffle(std::uint64_t seed) : engine_(seed) {}

std::uint64_t SeededShuffle::below(std::uint64_t bound) {
  if (bound <= 1) return 0;
  // Reject the top partial bucket so every residue is equally likely.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

std::vector<InstrumentItem> pvq_items(const InstrumentBank& bank, std::string_view language,
                                      std::uint64_t order_seed) {
  std::vector<InstrumentItem> items = bank.items(Instrument::pvq, language);
  SeededShuffle(order_seed).shuffle(items);
  return items;
}

// ---- parsing and scoring ---------------------------------------------------

std::optional<int> parse_rating(std::string_view raw, const RatingScale& scale, ParseMode mode) {
  const std::string folded = fold_digits(raw);
  if (mode == ParseMode::strict) {
    std::string_view t = trim(folded);
    bool negative = false;
    if (!t.empty() && (t.front() == '-' || t.front() == '+')) {
      negative = t.front() == '-';
      t.remove_prefix(1);
    }
    if (t.empty() || !std::all_of(t.begin(), t.end(), is_digit)) return std::nullopt;
    const long long v = to_int_saturating(t);
    return checked(negative ? -v : v, scale);
  }
  const auto ints = standalone_integers(folded, 1);
  if (ints.empty()) return std::nullopt;
  return checked(ints.front(), scale);
}

std::vector<std::optional<int>> parse_ratings(std::string_view raw, const RatingScale& scale, std::size_t count) {
  const auto ints = standalone_integers(fold_digits(raw), count);
  std::vector<std::optional<int>> out(count);
  for (std::size_t i = 0; i < ints.size(); ++i) out[i] = checked(ints[i], scale);
  return out;
}

double normalize(int raw, const RatingScale& scale) {
  if (!scale.contains(raw))
    throw ValidationError("rating " + std::to_string(raw) + " outside scale [" + std::to_string(scale.min) + ", " +
                          std::to_string(scale.max) + "]");
  return static_cast<double>(raw - scale.min) / static_cast<double>(scale.max - scale.min);
}

double trust_score(std::span<const int, 3> items) {
  int sum = 0;
  for (int r : items) {
    if (!kTrustScale.contains(r))
      throw ValidationError("trust item rating " + std::to_string(r) + " outside [1, 5]");
    sum += r;
  }
  return static_cast<double>(sum) / 3.0;
}

}  // namespace valsim
