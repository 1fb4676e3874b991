#include <benchmark/benchmark.h>

#include "qrng/certify.hpp"
#include "qrng/diagnostics/autocorr.hpp"
#include "qrng/diagnostics/battery.hpp"
#include "qrng/diagnostics/psd.hpp"
#include "qrng/parallel_extractor.hpp"
#include "qrng/pipeline.hpp"
#include "qrng/source.hpp"
#include "qrng/toeplitz.hpp"

using namespace qrng;

namespace {

BitStream input_bits(std::size_t frames, const extractor::ToeplitzConfig& cfg) {
  return extractor::make_seed(frames * cfg.k_in, 0xb0b);
}

void BM_HminPerRound(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(certify::hmin_per_round(0.0300, 0.0319));
}
BENCHMARK(BM_HminPerRound);

void BM_ToeplitzReference(benchmark::State& st) {
  const extractor::ToeplitzConfig cfg;
  const auto seed = extractor::make_seed(cfg.seed_bits(), 1);
  const auto in = input_bits(1, cfg);
  for (auto _ : st) benchmark::DoNotOptimize(extractor::toeplitz_reference(in, cfg, seed));
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(cfg.k_in));
}
BENCHMARK(BM_ToeplitzReference);

// Input bits per second of the table-driven engine; arg = worker threads.
void BM_ParallelExtractor(benchmark::State& st) {
  const extractor::ToeplitzConfig cfg;
  const auto seed = extractor::make_seed(cfg.seed_bits(), 1);
  const auto in = input_bits(2000, cfg);
  const extractor::ParallelExtractor ex(cfg, seed, static_cast<unsigned>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(ex.extract(in));
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(in.size()));
}
BENCHMARK(BM_ParallelExtractor)->Arg(1)->Arg(4)->UseRealTime()->Unit(benchmark::kMillisecond);

void BM_PipelineEmulation(benchmark::State& st) {
  const extractor::ToeplitzConfig cfg;
  const auto seed = extractor::make_seed(cfg.seed_bits(), 1);
  const auto in = input_bits(cfg.n_b, cfg);
  for (auto _ : st) benchmark::DoNotOptimize(extractor::pipeline_run(in, cfg, seed));
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(in.size()));
}
BENCHMARK(BM_PipelineEmulation)->Unit(benchmark::kMillisecond);

void BM_Simulate(benchmark::State& st) {
  const source::SourceModel m;
  for (auto _ : st) benchmark::DoNotOptimize(source::simulate(m, 1U << 20, 1));
  st.SetItemsProcessed(st.iterations() * (1 << 20));
}
BENCHMARK(BM_Simulate)->Unit(benchmark::kMillisecond);

void BM_Psd(benchmark::State& st) {
  const source::SourceModel m;
  const auto blk = source::simulate(m, 1U << 22, 2);
  const auto v = source::to_volts(blk.codes_x, m.code_step_x());
  for (auto _ : st) benchmark::DoNotOptimize(diagnostics::psd(v, m.f_s, 1U << 18, 16));
}
BENCHMARK(BM_Psd)->Unit(benchmark::kMillisecond);

void BM_AutocorrTau(benchmark::State& st) {
  const source::SourceModel m;
  const auto blk = source::simulate(m, 1U << 20, 3);
  const auto v = source::to_volts(blk.codes_x, m.code_step_x());
  diagnostics::AutocorrOptions o;
  o.bootstrap.block_len = 10000;
  o.bootstrap.resamples = 200;
  for (auto _ : st) benchmark::DoNotOptimize(diagnostics::autocorr_tau(v, o));
}
BENCHMARK(BM_AutocorrTau)->Unit(benchmark::kMillisecond);

void BM_Battery(benchmark::State& st) {
  const auto bits = extractor::make_seed(diagnostics::kBatterySequenceBits, 4);
  for (auto _ : st) benchmark::DoNotOptimize(diagnostics::test_battery(bits));
}
BENCHMARK(BM_Battery)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
