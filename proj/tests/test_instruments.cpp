#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <map>
#include <random>

#include "test_support.hpp"
#include "valsim/error.hpp"
#include "valsim/instruments.hpp"

using namespace valsim;
using valsim::testing::data_file;
using valsim::testing::slurp;

namespace {

// The published scoring key, written out as item lists per value.
const std::map<BasicValue, std::vector<int>>& literal_key() {
  static const std::map<BasicValue, std::vector<int>> key{
      {BasicValue::self_direction, {1, 11, 22, 34}},
      {BasicValue::power, {2, 17, 39}},
      {BasicValue::universalism, {3, 8, 19, 23, 29, 40}},
      {BasicValue::achievement, {4, 13, 24, 32}},
      {BasicValue::security, {5, 14, 21, 31, 35}},
      {BasicValue::stimulation, {6, 15, 30}},
      {BasicValue::conformity, {7, 16, 28, 36}},
      {BasicValue::tradition, {9, 20, 25, 38}},
      {BasicValue::hedonism, {10, 26, 37}},
      {BasicValue::benevolence, {12, 18, 27, 33}},
  };
  return key;
}

InstrumentBank sample_bank() { return InstrumentBank::load(data_file("instruments.sample.jsonl")); }

}  // namespace

TEST(Instruments, PublishedKeyMatchesLiteralKey) {
  const auto key = pvq40_key();
  std::map<BasicValue, int> counts;
  for (const auto& [value, items] : literal_key()) {
    for (int item : items) EXPECT_EQ(key[static_cast<std::size_t>(item - 1)], value) << "item " << item;
  }
  for (BasicValue v : key) ++counts[v];
  EXPECT_EQ(counts.size(), 10u);
  int total = 0;
  for (const auto& [value, n] : counts) {
    EXPECT_EQ(n, static_cast<int>(literal_key().at(value).size())) << to_string(value);
    total += n;
  }
  EXPECT_EQ(total, 40);
}

TEST(Instruments, SampleBankIsComplete) {
  const auto bank = sample_bank();
  const std::vector<std::string> langs{"en", "ja"};
  EXPECT_NO_THROW(bank.require_languages(langs));
  EXPECT_EQ(bank.items(Instrument::pvq, "en").size(), 40u);
  EXPECT_EQ(bank.items(Instrument::trust, "en").size(), 3u);
  EXPECT_EQ(bank.items(Instrument::ios, "en").size(), 1u);
  EXPECT_EQ(bank.item(Instrument::trust, "en", 1).scale.max, 5);
  EXPECT_EQ(bank.item(Instrument::ios, "en", 1).scale.anchor_labels.size(), 7u);
  EXPECT_EQ(bank.item(Instrument::pvq, "en", 1).scale.anchor_labels.size(), 6u);
  EXPECT_THROW(bank.items(Instrument::pvq, "fr"), ConfigError);
}

TEST(Instruments, MiskeyedItemIsRejected) {
  std::string text = slurp(data_file("instruments.sample.jsonl"));
  const std::string from = R"("index": 2, "language": "en", "text": "[PVQ-40 portrait 2: replace with the licensed item text]", "target_value": "power")";
  const auto pos = text.find(from);
  ASSERT_NE(pos, std::string::npos);
  std::string to = from;
  to.replace(to.find("\"power\""), 7, "\"hedonism\"");
  text.replace(pos, from.size(), to);
  const auto bank = InstrumentBank::parse(text);
  const std::vector<std::string> langs{"en"};
  EXPECT_THROW(bank.require_languages(langs), ConfigError);
}

TEST(Instruments, PvqOrderIsSeededPermutation) {
  const auto bank = sample_bank();
  const auto a = pvq_items(bank, "en", 1);
  const auto b = pvq_items(bank, "en", 1);
  const auto c = pvq_items(bank, "en", 2);
  ASSERT_EQ(a.size(), 40u);
  std::vector<int> ia, ib, ic;
  for (const auto& it : a) ia.push_back(it.index);
  for (const auto& it : b) ib.push_back(it.index);
  for (const auto& it : c) ic.push_back(it.index);
  EXPECT_EQ(ia, ib);
  EXPECT_NE(ia, ic);
  std::vector<int> sorted = ia;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 40; ++i) EXPECT_EQ(sorted[static_cast<std::size_t>(i)], i + 1);
  std::map<BasicValue, int> per_value;
  for (const auto& it : a) ++per_value[*it.target_value];
  for (const auto& [value, items] : literal_key()) EXPECT_EQ(per_value[value], static_cast<int>(items.size()));
}

TEST(Instruments, SeededShuffleIsUniformOnSmallInput) {
  // Each of the 6 orders of 3 items should appear; frequencies near 1/6.
  std::map<std::vector<int>, int> seen;
  for (std::uint64_t seed = 0; seed < 6000; ++seed) {
    std::vector<int> v{0, 1, 2};
    SeededShuffle(seed).shuffle(v);
    ++seen[v];
  }
  EXPECT_EQ(seen.size(), 6u);
  for (const auto& [order, n] : seen) {
    EXPECT_GT(n, 850);
    EXPECT_LT(n, 1150);
  }
}

TEST(Instruments, ParseRatingExamples) {
  EXPECT_EQ(parse_rating("I would say 5.", kPvqScale), 5);
  EXPECT_EQ(parse_rating("", kPvqScale), std::nullopt);
  EXPECT_EQ(parse_rating("7 out of 6, honestly", kPvqScale), std::nullopt);
  EXPECT_EQ(parse_rating("no idea", kPvqScale), std::nullopt);
  EXPECT_EQ(parse_rating("４です", kPvqScale), 4);
  EXPECT_EQ(parse_rating("3.5, maybe 4", kPvqScale), 4);
  EXPECT_EQ(parse_rating("1,000 reasons, but 2", kPvqScale), 2);
  EXPECT_EQ(parse_rating("-3", kPvqScale), std::nullopt);
  EXPECT_EQ(parse_rating("between 1-5 I pick 3", kTrustScale), 1);
  EXPECT_EQ(parse_rating("6", kTrustScale), std::nullopt);
  EXPECT_EQ(parse_rating("Rating: 2/6", kPvqScale), 2);
  EXPECT_EQ(parse_rating("99999999999999999999999", kPvqScale), std::nullopt);
}

TEST(Instruments, ParseRatingStrictMode) {
  EXPECT_EQ(parse_rating(" 5\n", kPvqScale, ParseMode::strict), 5);
  EXPECT_EQ(parse_rating("I would say 5.", kPvqScale, ParseMode::strict), std::nullopt);
  EXPECT_EQ(parse_rating("5.", kPvqScale, ParseMode::strict), std::nullopt);
  EXPECT_EQ(parse_rating("", kPvqScale, ParseMode::strict), std::nullopt);
  EXPECT_EQ(parse_rating("-", kPvqScale, ParseMode::strict), std::nullopt);
  EXPECT_EQ(parse_rating("７", kIosScale, ParseMode::strict), 7);
}

TEST(Instruments, ParseRatingRoundTripsEveryScalePoint) {
  for (const RatingScale* scale : {&kPvqScale, &kTrustScale, &kIosScale}) {
    for (int r = scale->min; r <= scale->max; ++r) {
      const std::string s = std::to_string(r);
      EXPECT_EQ(parse_rating(s, *scale), r);
      EXPECT_EQ(parse_rating(s, *scale, ParseMode::strict), r);
      EXPECT_EQ(parse_rating("My answer is " + s + ".", *scale), r);
    }
  }
}

TEST(Instruments, ParseRatingNeverLeavesTheScale) {
  std::mt19937 rng(12345);
  const std::string alphabet = "0123456789 .,-abcXYZ\n/";
  for (int trial = 0; trial < 5000; ++trial) {
    std::string s;
    const int len = static_cast<int>(rng() % 24);
    for (int i = 0; i < len; ++i) s.push_back(alphabet[rng() % alphabet.size()]);
    for (ParseMode mode : {ParseMode::first_integer, ParseMode::strict}) {
      const auto r = parse_rating(s, kPvqScale, mode);
      if (r) {
        EXPECT_TRUE(kPvqScale.contains(*r)) << '"' << s << '"';
      }
    }
  }
}

TEST(Instruments, ParseRatingsReadsSeveralItems) {
  const auto r = parse_ratings("4, 5, 3", kTrustScale, 3);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0], 4);
  EXPECT_EQ(r[1], 5);
  EXPECT_EQ(r[2], 3);
  const auto short_reply = parse_ratings("4 and 9", kTrustScale, 3);
  EXPECT_EQ(short_reply[0], 4);
  EXPECT_EQ(short_reply[1], std::nullopt);
  EXPECT_EQ(short_reply[2], std::nullopt);
}

TEST(Instruments, NormalizeMapsScaleOntoUnitInterval) {
  EXPECT_DOUBLE_EQ(normalize(1, kPvqScale), 0.0);
  EXPECT_DOUBLE_EQ(normalize(6, kPvqScale), 1.0);
  EXPECT_DOUBLE_EQ(normalize(3, kPvqScale), 0.4);
  EXPECT_DOUBLE_EQ(normalize(4, kIosScale), 0.5);
  EXPECT_THROW(normalize(0, kPvqScale), ValidationError);
  EXPECT_THROW(normalize(7, kPvqScale), ValidationError);
}

TEST(Instruments, TrustScore) {
  const std::array<int, 3> top{5, 5, 5};
  const std::array<int, 3> bottom{1, 1, 1};
  const std::array<int, 3> mixed{4, 5, 3};
  const std::array<int, 3> bad{4, 6, 3};
  EXPECT_DOUBLE_EQ(trust_score(top), 5.0);
  EXPECT_DOUBLE_EQ(trust_score(bottom), 1.0);
  EXPECT_DOUBLE_EQ(trust_score(mixed), 4.0);
  EXPECT_THROW(trust_score(bad), ValidationError);
  std::array<int, 3> perm{2, 3, 5};
  const double expected = trust_score(perm);
  while (std::next_permutation(perm.begin(), perm.end())) EXPECT_DOUBLE_EQ(trust_score(perm), expected);
}
