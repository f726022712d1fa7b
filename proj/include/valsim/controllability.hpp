#pragma once

// Value controllability: PVQ administration under a persona condition, the
// first-iteration abort rule, and the target-minus-other score with its
// basic/higher-order aggregates.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "valsim/instruments.hpp"
#include "valsim/prompts.hpp"
#include "valsim/provider.hpp"

namespace valsim {

struct InstrumentResponse {
  int item_index = 0;
  std::string raw_text;
  std::optional<int> rating;

  friend bool operator==(const InstrumentResponse&, const InstrumentResponse&) = default;
};

struct PvqRun {
  PromptCondition condition;
  int iteration = 1;
  std::uint64_t order_seed = 0;
  // In presentation order; every item index appears once.
  std::vector<InstrumentResponse> responses;

  std::size_t invalid_count() const;
  friend bool operator==(const PvqRun&, const PvqRun&) = default;
};

nlohmann::json to_json(const PvqRun& run);
PvqRun pvq_run_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PromptCondition& c);
PromptCondition condition_from_json(const nlohmann::json& j);

struct PvqOptions {
  ParseMode parse_mode = ParseMode::first_integer;
};

// One independent request per item in the seeded order. The caller supplies
// the order seed (derived from run id and iteration). Transport failures
// propagate as TransportError.
PvqRun administer_pvq(Provider& provider, const PromptBuilder& builder, const PromptCondition& cond, int iteration,
                      std::uint64_t order_seed, const PvqOptions& options = {});

// Minimum invalid replies that abort a condition: ceil(fraction * items).
std::size_t abort_threshold(std::size_t item_count, double abort_fraction = 0.10);

// True when the first iteration has at least abort_threshold invalid replies.
bool should_abort(const PvqRun& first_run, double abort_fraction = 0.10);

struct ControllabilityScore {
  ValueRef value = BasicValue::power;
  double score = 0.0;
  std::size_t n_valid_target = 0;
  std::size_t n_valid_other = 0;
};

enum class Pooling : std::uint8_t {
  // Means over all valid responses of all runs.
  pooled,
  // Mean of per-iteration scores; iterations without both pools are skipped.
  per_iteration,
};

// Item indices whose keyed value is the target, or one of its constituents
// for a higher-order target.
std::vector<int> target_items(const ValueRef& target, const CircumplexConfig& circumplex = {});

// mean(normalized target-item ratings) - mean(normalized other ratings).
// Throws UndefinedResultError when either valid pool is empty.
ControllabilityScore controllability_score(std::span<const PvqRun> runs, const ValueRef& target,
                                           const CircumplexConfig& circumplex = {},
                                           Pooling pooling = Pooling::pooled);

// Same computation over already-normalized pools.
double controllability_from_pools(std::span<const double> target_pool, std::span<const double> other_pool);

struct AggregateScore {
  std::optional<double> value;
  // Values of the set with no score, in canonical order.
  std::vector<ValueRef> missing;
};

// Unweighted mean over all values of `kind`; missing when any is absent.
AggregateScore aggregate(std::span<const ControllabilityScore> scores, ValueKind kind);

}  // namespace valsim
