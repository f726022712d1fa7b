#include "valsim/controllability.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "valsim/error.hpp"

namespace valsim {
namespace {

using json = nlohmann::json;

double mean(std::span<const double> xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

// Raw ratings are summed as integers and normalized once, so equal ratings in
// pools of different sizes give bit-identical means.
struct Pool {
  long long sum = 0;
  std::size_t n = 0;
  bool empty() const { return n == 0; }
  std::size_t size() const { return n; }
  double mean() const {
    const long long lo = kPvqScale.min;
    const long long range = kPvqScale.max - kPvqScale.min;
    const long long count = static_cast<long long>(n);
    return static_cast<double>(sum - count * lo) / static_cast<double>(count * range);
  }
};

struct Pools {
  Pool target;
  Pool other;
  double score() const { return target.mean() - other.mean(); }
};

void add_run(Pools& pools, const PvqRun& run, const std::vector<bool>& is_target) {
  for (const auto& r : run.responses) {
    if (!r.rating || r.item_index < 1 || r.item_index > 40) continue;
    Pool& pool = is_target[static_cast<std::size_t>(r.item_index)] ? pools.target : pools.other;
    pool.sum += *r.rating;
    ++pool.n;
  }
}

}  // namespace

std::size_t PvqRun::invalid_count() const {
  return static_cast<std::size_t>(
      std::count_if(responses.begin(), responses.end(), [](const auto& r) { return !r.rating.has_value(); }));
}

json to_json(const PromptCondition& c) {
  return {{"person", std::string(to_string(c.person))},
          {"placement", std::string(to_string(c.placement))},
          {"include_definition", c.include_definition},
          {"language", c.language},
          {"value", std::string(to_string(c.value))}};
}

PromptCondition condition_from_json(const json& j) {
  PromptCondition c;
  c.person = parse_person(j.at("person").get<std::string>());
  c.placement = parse_placement(j.at("placement").get<std::string>());
  c.include_definition = j.at("include_definition").get<bool>();
  c.language = j.at("language").get<std::string>();
  c.value = parse_value(j.at("value").get<std::string>());
  return c;
}

json to_json(const PvqRun& run) {
  json responses = json::array();
  for (const auto& r : run.responses) {
    responses.push_back({{"item", r.item_index},
                         {"raw", r.raw_text},
                         {"rating", r.rating ? json(*r.rating) : json(nullptr)}});
  }
  return {{"condition", to_json(run.condition)},
          {"iteration", run.iteration},
          {"order_seed", run.order_seed},
          {"responses", std::move(responses)}};
}

PvqRun pvq_run_from_json(const json& j) {
  PvqRun run;
  run.condition = condition_from_json(j.at("condition"));
  run.iteration = j.at("iteration").get<int>();
  run.order_seed = j.at("order_seed").get<std::uint64_t>();
  for (const auto& r : j.at("responses")) {
    InstrumentResponse resp;
    resp.item_index = r.at("item").get<int>();
    resp.raw_text = r.at("raw").get<std::string>();
    if (!r.at("rating").is_null()) resp.rating = r.at("rating").get<int>();
    run.responses.push_back(std::move(resp));
  }
  return run;
}

PvqRun administer_pvq(Provider& provider, const PromptBuilder& builder, const PromptCondition& cond, int iteration,
                      std::uint64_t order_seed, const PvqOptions& options) {
  PvqRun run;
  run.condition = cond;
  run.iteration = iteration;
  run.order_seed = order_seed;
  for (const auto& item : pvq_items(builder.instruments(), cond.language, order_seed)) {
    MessageSeq request = builder.build_pvq_request(cond, item);
    request.tag().seed = order_seed;
    InstrumentResponse resp;
    resp.item_index = item.index;
    resp.raw_text = provider.complete(request);
    resp.rating = parse_rating(resp.raw_text, item.scale, options.parse_mode);
    run.responses.push_back(std::move(resp));
  }
  return run;
}

std::size_t abort_threshold(std::size_t item_count, double abort_fraction) {
  // The small epsilon keeps 0.1 * 40 from rounding up to 5.
  return static_cast<std::size_t>(std::ceil(abort_fraction * static_cast<double>(item_count) - 1e-9));
}

bool should_abort(const PvqRun& first_run, double abort_fraction) {
  if (first_run.iteration != 1)
    throw ValidationError("abort rule applies to iteration 1, got iteration " + std::to_string(first_run.iteration));
  return first_run.invalid_count() >= abort_threshold(first_run.responses.size(), abort_fraction);
}

std::vector<int> target_items(const ValueRef& target, const CircumplexConfig& circumplex) {
  std::vector<int> out;
  const auto key = pvq40_key();
  for (std::size_t i = 0; i < key.size(); ++i) {
    const bool hit = std::holds_alternative<BasicValue>(target)
                         ? key[i] == std::get<BasicValue>(target)
                         : circumplex.dimension_of(key[i]) == std::get<Dimension>(target);
    if (hit) out.push_back(static_cast<int>(i) + 1);
  }
  return out;
}

double controllability_from_pools(std::span<const double> target_pool, std::span<const double> other_pool) {
  if (target_pool.empty()) throw UndefinedResultError("no valid responses on target items");
  if (other_pool.empty()) throw UndefinedResultError("no valid responses on non-target items");
  return mean(target_pool) - mean(other_pool);
}

ControllabilityScore controllability_score(std::span<const PvqRun> runs, const ValueRef& target,
                                           const CircumplexConfig& circumplex, Pooling pooling) {
  if (runs.empty()) throw UndefinedResultError("no runs to score for '" + std::string(to_string(target)) + "'");
  std::vector<bool> is_target(41, false);
  for (int idx : target_items(target, circumplex)) is_target[static_cast<std::size_t>(idx)] = true;

  ControllabilityScore result;
  result.value = target;
  if (pooling == Pooling::pooled) {
    Pools pools;
    for (const auto& run : runs) add_run(pools, run, is_target);
    result.n_valid_target = pools.target.size();
    result.n_valid_other = pools.other.size();
    const std::string name(to_string(target));
    if (pools.target.empty()) throw UndefinedResultError("'" + name + "': no valid responses on target items");
    if (pools.other.empty()) throw UndefinedResultError("'" + name + "': no valid responses on non-target items");
    result.score = pools.score();
    return result;
  }

  std::vector<double> per_run;
  for (const auto& run : runs) {
    Pools pools;
    add_run(pools, run, is_target);
    result.n_valid_target += pools.target.size();
    result.n_valid_other += pools.other.size();
    if (pools.target.empty() || pools.other.empty()) continue;
    per_run.push_back(pools.score());
  }
  if (per_run.empty())
    throw UndefinedResultError("'" + std::string(to_string(target)) + "': no iteration has both valid pools");
  result.score = mean(per_run);
  return result;
}

AggregateScore aggregate(std::span<const ControllabilityScore> scores, ValueKind kind) {
  AggregateScore out;
  double sum = 0.0;
  for (const auto& v : all_values(kind)) {
    auto it = std::find_if(scores.begin(), scores.end(), [&](const auto& s) { return s.value == v; });
    if (it == scores.end()) out.missing.push_back(v);
    else sum += it->score;
  }
  if (out.missing.empty()) out.value = sum / static_cast<double>(all_values(kind).size());
  return out;
}

}  // namespace valsim
