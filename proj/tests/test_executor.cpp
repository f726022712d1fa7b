#include <gtest/gtest.h>

#include <chrono>
#include <stdexcept>
#include <thread>

#include "valsim/executor.hpp"

using namespace valsim;

namespace {

int work(std::size_t i) {
  // Uneven durations so completion order differs from index order.
  std::this_thread::sleep_for(std::chrono::microseconds((i * 37) % 200));
  return static_cast<int>(i * i);
}

}  // namespace

TEST(Executor, OrderedPoolCommitsLikeSerial) {
  std::vector<std::pair<std::size_t, int>> serial, pooled;
  const auto s = run_serial(200, work, [&](std::size_t i, int r) { serial.emplace_back(i, r); });
  const auto p = run_ordered(200, 4, work, [&](std::size_t i, int r) { pooled.emplace_back(i, r); });
  EXPECT_EQ(serial, pooled);
  EXPECT_EQ(s.committed, 200u);
  EXPECT_EQ(p.committed, 200u);
  EXPECT_FALSE(p.cancelled);
}

TEST(Executor, CommitRunsOnCallingThread) {
  const auto caller = std::this_thread::get_id();
  bool same = true;
  run_ordered(50, 3, work, [&](std::size_t, int) { same = same && std::this_thread::get_id() == caller; });
  EXPECT_TRUE(same);
}

TEST(Executor, ReorderWindowIsBounded) {
  std::atomic<std::size_t> produced{0};
  std::size_t committed = 0;
  std::size_t max_lead = 0;
  run_ordered(
      100, 2,
      [&](std::size_t i) {
        // Index 0 is slow; others must not run far ahead of the frontier.
        if (i == 0) std::this_thread::sleep_for(std::chrono::milliseconds(30));
        ++produced;
        return 0;
      },
      [&](std::size_t, int) {
        max_lead = std::max(max_lead, produced.load() - committed);
        ++committed;
      });
  EXPECT_LE(max_lead, 4u + 2u);
}

TEST(Executor, CancellationStopsNewWorkAndKeepsOrder) {
  for (unsigned workers : {1u, 4u}) {
    CancelToken cancel;
    std::vector<std::size_t> committed;
    const auto stats = run_ordered(
        1000, workers, work,
        [&](std::size_t i, int) {
          committed.push_back(i);
          if (committed.size() == 10) cancel.request();
        },
        &cancel);
    EXPECT_TRUE(stats.cancelled);
    EXPECT_EQ(stats.committed, committed.size());
    EXPECT_GE(committed.size(), 10u);
    EXPECT_LT(committed.size(), 1000u);
    for (std::size_t k = 1; k < committed.size(); ++k) EXPECT_LT(committed[k - 1], committed[k]);
    for (std::size_t k = 0; k < 10; ++k) EXPECT_EQ(committed[k], k);
  }
}

TEST(Executor, ProducerExceptionPropagates) {
  std::vector<std::size_t> committed;
  EXPECT_THROW(run_ordered(
                   100, 4,
                   [](std::size_t i) {
                     if (i == 17) throw std::runtime_error("boom");
                     return 1;
                   },
                   [&](std::size_t i, int) { committed.push_back(i); }),
               std::runtime_error);
  for (std::size_t k = 0; k < committed.size(); ++k) EXPECT_EQ(committed[k], k);
  EXPECT_LE(committed.size(), 17u);
}

TEST(Executor, CommitExceptionPropagates) {
  EXPECT_THROW(run_ordered(
                   100, 3, work,
                   [](std::size_t i, int) {
                     if (i == 5) throw std::logic_error("commit failed");
                   }),
               std::logic_error);
}

TEST(Executor, EmptyAndSingleWork) {
  int calls = 0;
  EXPECT_EQ(run_ordered(0, 4, work, [&](std::size_t, int) { ++calls; }).committed, 0u);
  EXPECT_EQ(run_ordered(1, 4, work, [&](std::size_t, int) { ++calls; }).committed, 1u);
  EXPECT_EQ(calls, 1);
}
