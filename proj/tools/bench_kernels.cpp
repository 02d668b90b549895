// Serial reference against the OpenMP version of each exhaustive kernel.

#include <benchmark/benchmark.h>

#include "cutstack/kernels.hpp"

using namespace cutstack::kernels;

static void lln_serial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(lln_violations_serial(static_cast<unsigned>(st.range(0)), 1, 2));
}
static void lln_parallel(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(lln_violations_parallel(static_cast<unsigned>(st.range(0)), 1, 2));
}
BENCHMARK(lln_serial)->Arg(20)->Arg(24);
BENCHMARK(lln_parallel)->Arg(20)->Arg(24);

static void max_serial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(max_inequality_serial(static_cast<unsigned>(st.range(0)), 4));
}
static void max_parallel(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(max_inequality_parallel(static_cast<unsigned>(st.range(0)), 4));
}
BENCHMARK(max_serial)->Arg(18)->Arg(22);
BENCHMARK(max_parallel)->Arg(18)->Arg(22);

static void lil_serial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(lil_cover_count_serial(8, 16, 3.3L));
}
static void lil_parallel(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(lil_cover_count_parallel(8, 16, 3.3L));
}
BENCHMARK(lil_serial);
BENCHMARK(lil_parallel);

static void lz78_serial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(lz78_roundtrip_failures_serial(12));
}
static void lz78_parallel(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(lz78_roundtrip_failures_parallel(12));
}
BENCHMARK(lz78_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(lz78_parallel)->Unit(benchmark::kMillisecond);

static void lz78_bits_serial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(lz78_total_bits_serial(12));
}
static void lz78_bits_parallel(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(lz78_total_bits_parallel(12));
}
BENCHMARK(lz78_bits_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(lz78_bits_parallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
