#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "test_support.hpp"
#include "valsim/controllability.hpp"
#include "valsim/error.hpp"

using namespace valsim;
using valsim::testing::data_file;

namespace {

// A run with one response per item, rating chosen by `rate(item_index)`.
template <typename F>
PvqRun make_run(F rate, int iteration = 1) {
  PvqRun run;
  run.iteration = iteration;
  for (int i = 1; i <= 40; ++i) {
    const std::optional<int> r = rate(i);
    run.responses.push_back({i, r ? std::to_string(*r) : "n/a", r});
  }
  return run;
}

class ControllabilityTest : public ::testing::Test {
 protected:
  ControllabilityTest()
      : catalog_(ValueCatalog::load(data_file("values.jsonl"))),
        templates_(TemplateSet::load(data_file("templates.jsonl"))),
        instruments_(InstrumentBank::load(data_file("instruments.sample.jsonl"))),
        builder_(catalog_, templates_, instruments_) {}

  PvqRun administer(double alignment, const ValueRef& value, std::vector<int> invalid = {}, std::uint64_t seed = 1) {
    ScriptedSettings s;
    s.alignment = alignment;
    s.invalid_items = std::move(invalid);
    ScriptedProvider provider("scripted", s);
    const PromptCondition cond{Person::second, Placement::system, true, "en", value};
    return administer_pvq(provider, builder_, cond, 1, seed);
  }

  ValueCatalog catalog_;
  TemplateSet templates_;
  InstrumentBank instruments_;
  PromptBuilder builder_;
};

}  // namespace

TEST(Controllability, ScoreFromPoolsExample) {
  const std::vector<double> target{1.0, 0.8, 0.8};
  const std::vector<double> other{0.5, 0.5};
  EXPECT_NEAR(controllability_from_pools(target, other), 0.36666666666666664, 1e-9);
  const std::vector<double> empty;
  EXPECT_THROW(controllability_from_pools(empty, other), UndefinedResultError);
  EXPECT_THROW(controllability_from_pools(target, empty), UndefinedResultError);
}

TEST(Controllability, TargetItemsFollowTheKey) {
  EXPECT_EQ(target_items(BasicValue::power), (std::vector<int>{2, 17, 39}));
  EXPECT_EQ(target_items(BasicValue::universalism), (std::vector<int>{3, 8, 19, 23, 29, 40}));
  // Openness holds self-direction, stimulation and hedonism by default: 4 + 3 + 3 items.
  EXPECT_EQ(target_items(Dimension::openness_to_change).size(), 10u);
  EXPECT_EQ(target_items(Dimension::openness_to_change, CircumplexConfig(Dimension::self_enhancement)).size(), 7u);
  EXPECT_EQ(target_items(Dimension::conservation).size(), 13u);
}

TEST_F(ControllabilityTest, ScriptedAlignmentYieldsExactScore) {
  for (double a : {-1.0, 0.0, 1.0}) {
    for (const auto kind : {ValueKind::basic, ValueKind::higher_order}) {
      for (const auto& value : all_values(kind)) {
        const std::vector<PvqRun> runs{administer(a, value)};
        EXPECT_EQ(controllability_score(runs, value).score, a) << to_string(value) << " a=" << a;
      }
    }
  }
}

TEST_F(ControllabilityTest, AdministrationUsesSeededOrderAndCoversEveryItem) {
  const auto run = administer(1.0, BasicValue::power, {}, 99);
  ASSERT_EQ(run.responses.size(), 40u);
  std::vector<int> order;
  for (const auto& r : run.responses) order.push_back(r.item_index);
  std::vector<int> expected;
  for (const auto& item : pvq_items(instruments_, "en", 99)) expected.push_back(item.index);
  EXPECT_EQ(order, expected);
  EXPECT_EQ(run.invalid_count(), 0u);
  EXPECT_EQ(run.order_seed, 99u);
}

TEST_F(ControllabilityTest, AbortRuleUsesTenPercentOfItems) {
  EXPECT_EQ(abort_threshold(40), 4u);
  EXPECT_EQ(abort_threshold(40, 0.05), 2u);
  EXPECT_EQ(abort_threshold(41), 5u);
  const auto three = administer(1.0, BasicValue::power, {3, 9, 17});
  const auto four = administer(1.0, BasicValue::power, {3, 9, 17, 28});
  EXPECT_EQ(three.invalid_count(), 3u);
  EXPECT_EQ(four.invalid_count(), 4u);
  EXPECT_FALSE(should_abort(three));
  EXPECT_TRUE(should_abort(four));
}

TEST(Controllability, InvalidResponsesAreExcludedFromPools) {
  // Power items at 6, everything else at 1, plus garbage on two other items.
  const auto run = make_run([](int i) -> std::optional<int> {
    if (i == 5 || i == 6) return std::nullopt;
    return (i == 2 || i == 17 || i == 39) ? 6 : 1;
  });
  const std::vector<PvqRun> runs{run};
  const auto s = controllability_score(runs, BasicValue::power);
  EXPECT_DOUBLE_EQ(s.score, 1.0);
  EXPECT_EQ(s.n_valid_target, 3u);
  EXPECT_EQ(s.n_valid_other, 35u);
}

TEST(Controllability, UndefinedWhenTargetPoolIsEmpty) {
  const auto run = make_run([](int i) -> std::optional<int> {
    if (i == 2 || i == 17 || i == 39) return std::nullopt;
    return 3;
  });
  const std::vector<PvqRun> runs{run};
  EXPECT_THROW(controllability_score(runs, BasicValue::power), UndefinedResultError);
}

TEST(Controllability, PermutationOfRunsDoesNotChangeScore) {
  std::mt19937 rng(7);
  std::vector<PvqRun> runs;
  for (int k = 0; k < 6; ++k)
    runs.push_back(make_run([&](int) -> std::optional<int> { return 1 + static_cast<int>(rng() % 6); }, k + 1));
  const double base = controllability_score(runs, BasicValue::achievement).score;
  const double base_iter = controllability_score(runs, BasicValue::achievement, {}, Pooling::per_iteration).score;
  EXPECT_GE(base, -1.0);
  EXPECT_LE(base, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::shuffle(runs.begin(), runs.end(), rng);
    EXPECT_NEAR(controllability_score(runs, BasicValue::achievement).score, base, 1e-12);
    EXPECT_NEAR(controllability_score(runs, BasicValue::achievement, {}, Pooling::per_iteration).score, base_iter,
                1e-12);
  }
}

TEST(Controllability, MeanStability) {
  // Target pool {1.0, 0.6, 0.8} has mean 0.8; adding another 0.8 keeps it.
  const std::vector<double> target{1.0, 0.6, 0.8};
  const std::vector<double> extended{1.0, 0.6, 0.8, 0.8};
  const std::vector<double> other{0.2, 0.4};
  EXPECT_NEAR(controllability_from_pools(target, other), controllability_from_pools(extended, other), 1e-12);
}

TEST(Controllability, RaisingTargetRatingsNeverLowersTheScore) {
  std::mt19937 rng(11);
  const auto key = target_items(BasicValue::benevolence);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> ratings(41);
    for (int i = 1; i <= 40; ++i) ratings[static_cast<std::size_t>(i)] = 1 + static_cast<int>(rng() % 6);
    const std::vector<PvqRun> before{make_run([&](int i) -> std::optional<int> { return ratings[static_cast<std::size_t>(i)]; })};
    for (int i : key) ratings[static_cast<std::size_t>(i)] = std::min(6, ratings[static_cast<std::size_t>(i)] + 1);
    const std::vector<PvqRun> after{make_run([&](int i) -> std::optional<int> { return ratings[static_cast<std::size_t>(i)]; })};
    EXPECT_GE(controllability_score(after, BasicValue::benevolence).score,
              controllability_score(before, BasicValue::benevolence).score);
  }
}

TEST(Controllability, AggregateIsUnweightedMean) {
  std::vector<ControllabilityScore> basic;
  for (BasicValue v : kBasicValues) basic.push_back({v, 0.5, 3, 37});
  const auto l = aggregate(basic, ValueKind::basic);
  ASSERT_TRUE(l.value);
  EXPECT_DOUBLE_EQ(*l.value, 0.5);

  const std::vector<double> hs{0.8, 0.6, 0.7, 0.9};
  std::vector<ControllabilityScore> higher;
  for (std::size_t i = 0; i < 4; ++i) higher.push_back({kDimensions[i], hs[i], 10, 30});
  const auto h = aggregate(higher, ValueKind::higher_order);
  ASSERT_TRUE(h.value);
  EXPECT_NEAR(*h.value, 0.75, 1e-12);
  EXPECT_TRUE(h.missing.empty());

  basic.erase(basic.begin() + 3);
  const auto partial = aggregate(basic, ValueKind::basic);
  EXPECT_FALSE(partial.value);
  ASSERT_EQ(partial.missing.size(), 1u);
  EXPECT_EQ(partial.missing[0], ValueRef(BasicValue::stimulation));
}

TEST_F(ControllabilityTest, PvqRunJsonRoundTrip) {
  const auto run = administer(1.0, Dimension::self_transcendence, {4});
  EXPECT_EQ(pvq_run_from_json(to_json(run)), run);
  EXPECT_EQ(to_json(run)["responses"].size(), 40u);
}
