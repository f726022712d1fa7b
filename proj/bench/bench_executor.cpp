// Serial vs ordered-pool execution of dialogue repetitions against a scripted
// provider with simulated request latency.

#include <benchmark/benchmark.h>

#include "valsim/config.hpp"
#include "valsim/dialogue.hpp"
#include "valsim/executor.hpp"

namespace {

using namespace valsim;

Config bench_config() {
  Config c;
  const std::string data = VALSIM_DATA_DIR;
  c.data.values = data + "/values.jsonl";
  c.data.templates = data + "/templates.jsonl";
  c.data.instruments = data + "/instruments.sample.jsonl";
  c.languages = {"en"};
  return c;
}

const Workspace& workspace() {
  static const Config config = bench_config();
  static const Workspace ws(config);
  return ws;
}

void run(benchmark::State& state, bool pooled) {
  ScriptedSettings settings;
  settings.latency = std::chrono::microseconds(state.range(0));
  ScriptedProvider provider("bench", settings);
  const auto pairs = enumerate_pairs(ValueKind::higher_order);
  const PromptCondition factors{Person::second, Placement::system, true, "en", BasicValue::power};
  const auto produce = [&](std::size_t i) {
    return run_repetition(provider, workspace().builder(), factors, pairs[i % pairs.size()], Task::hobbies,
                          static_cast<int>(i / pairs.size()) + 1);
  };
  std::size_t committed = 0;
  const auto commit = [&](std::size_t, RepetitionResult r) { committed += r.evaluations.size(); };
  const std::size_t n = 40;
  for (auto _ : state) {
    if (pooled)
      run_ordered(n, static_cast<unsigned>(state.range(1)), produce, commit);
    else
      run_serial(n, produce, commit);
  }
  benchmark::DoNotOptimize(committed);
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}

void BM_Serial(benchmark::State& state) { run(state, false); }
void BM_Ordered(benchmark::State& state) { run(state, true); }

}  // namespace

BENCHMARK(BM_Serial)->Args({0, 1})->Args({200, 1})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Ordered)
    ->Args({0, 4})
    ->Args({200, 4})
    ->Args({200, 16})
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();

BENCHMARK_MAIN();
