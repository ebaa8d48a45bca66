#include <benchmark/benchmark.h>

#include "haptutor/reference.hpp"
#include "haptutor/service.hpp"
#include "haptutor/simlab.hpp"
#include "haptutor/wire.hpp"

using namespace haptutor;

namespace {

const Score& song() {
  static const Score s = service::ScoreLibrary::builtin(default_chart()).get("song_a");
  return s;
}

void BM_AdaptiveRun(benchmark::State& state) {
  const auto c = reference::random_case(1, default_chart(), 200);
  for (auto _ : state) {
    TutorSession t(c.score, default_chart(), Mode::Adaptive);
    run_to_completion(t, c.trace, state.range(0));
    benchmark::DoNotOptimize(t.mistake_count());
  }
}
BENCHMARK(BM_AdaptiveRun)->Arg(0)->Arg(1)->Arg(10);

void BM_Debounce(benchmark::State& state) {
  const auto frames = reference::random_frames(2, default_chart(), 10000, 30);
  for (auto _ : state) {
    benchmark::DoNotOptimize(events_from_frames(frames, default_chart(), {0.5, 30}));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(frames.size()));
}
BENCHMARK(BM_Debounce);

void BM_WireRoundTrip(benchmark::State& state) {
  wire::Encoder enc;
  wire::Decoder dec;
  std::vector<std::uint8_t> payload(static_cast<std::size_t>(state.range(0)), 0x7E);
  for (auto _ : state) {
    const auto bytes = enc.encode(wire::Kind::Telemetry, payload);
    benchmark::DoNotOptimize(dec.feed(bytes));
  }
  state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_WireRoundTrip)->Arg(10)->Arg(64);

void BM_SimulatePass(benchmark::State& state) {
  auto learner = LearnerModel::fresh(song().size(), {});
  std::fill(learner.mastery.begin(), learner.mastery.end(), 0.6);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        simulate_pass(learner, song(), default_chart(), Phase::Adaptive, {}, ++seed));
  }
}
BENCHMARK(BM_SimulatePass);

void BM_Experiment(benchmark::State& state) {
  const auto lib = service::ScoreLibrary::builtin(default_chart());
  ExperimentPlan plan;
  plan.long_term_days = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        run_protocol(plan, {}, lib.get("song_a"), lib.get("song_b"), default_chart()));
  }
}
BENCHMARK(BM_Experiment)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
