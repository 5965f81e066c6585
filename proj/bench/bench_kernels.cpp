// Serial reference vs OpenMP kernels. Arg 0 selects serial, 1 parallel.
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "polyshare/kernels.hpp"

using namespace polyshare;
using kernels::Exec;

namespace {

constexpr std::size_t kBatch = std::size_t{1} << 15;

Exec exec_of(const benchmark::State& st) { return st.range(0) == 0 ? Exec::serial : Exec::parallel; }

std::vector<u64> random_ring(std::size_t n, u64 seed) {
  std::mt19937_64 rng(seed);
  std::vector<u64> v(n);
  for (auto& x : v) x = rng();
  return v;
}

std::vector<TripleShare> random_triples(std::size_t n, u64 seed) {
  std::mt19937_64 rng(seed);
  std::vector<TripleShare> t(n);
  for (auto& x : t) x = {rng(), rng(), rng()};
  return t;
}

void label(benchmark::State& st, std::size_t elements) {
  st.SetLabel(st.range(0) == 0 ? "serial" : "omp");
  st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * elements));
}

void BM_beaver(benchmark::State& st) {
  const auto x = random_ring(kBatch, 1);
  const auto y = random_ring(kBatch, 2);
  const auto t = random_triples(kBatch, 3);
  std::vector<u64> masks(2 * kBatch);
  std::vector<u64> z(kBatch);
  const std::span<const u64> m(masks);
  for (auto _ : st) {
    kernels::beaver_masks(exec_of(st), x, y, t, masks);
    kernels::beaver_combine(exec_of(st), y, t, m.first(kBatch), m.last(kBatch), z);
    benchmark::DoNotOptimize(z.data());
  }
  label(st, kBatch);
}

void BM_truncate(benchmark::State& st) {
  const auto x = random_ring(kBatch, 4);
  std::vector<u64> out(kBatch);
  for (auto _ : st) {
    kernels::truncate(exec_of(st), Role::B, x, 16, out);
    benchmark::DoNotOptimize(out.data());
  }
  label(st, kBatch);
}

void BM_espn_operands(benchmark::State& st) {
  const int k = 4;
  const auto x = random_ring(kBatch, 5);
  std::vector<u64> u(kBatch * (k + 1));
  std::vector<u64> v(kBatch * (k + 1));
  for (auto _ : st) {
    kernels::espn_operands(exec_of(st), Role::B, x, k, u, v);
    benchmark::DoNotOptimize(v.data());
  }
  label(st, kBatch);
}

void BM_hb_powers(benchmark::State& st) {
  const int n = 4;
  const auto opened = random_ring(kBatch, 6);
  PowerTupleBatch tuples{n, 0, random_ring(kBatch * n, 7)};
  std::vector<u64> out(kBatch * n);
  for (auto _ : st) {
    kernels::hb_powers(exec_of(st), Role::A, opened, tuples, n, out);
    benchmark::DoNotOptimize(out.data());
  }
  label(st, kBatch);
}

void BM_im2col(benchmark::State& st) {
  const kernels::ConvGeometry g{16, 32, 32, 3, 1, 1};
  const auto image = random_ring(static_cast<std::size_t>(g.channels) * g.height * g.width, 8);
  std::vector<u64> cols(g.patch() * g.pixels());
  for (auto _ : st) {
    kernels::im2col(exec_of(st), image, g, cols);
    benchmark::DoNotOptimize(cols.data());
  }
  label(st, cols.size());
}

void BM_truncation_wraps(benchmark::State& st) {
  const std::uint64_t trials = 1 << 20;
  for (auto _ : st) benchmark::DoNotOptimize(kernels::truncation_wraps(exec_of(st), u64{1} << 54, 16, trials, 9));
  label(st, trials);
}

}  // namespace

BENCHMARK(BM_beaver)->Arg(0)->Arg(1);
BENCHMARK(BM_truncate)->Arg(0)->Arg(1);
BENCHMARK(BM_espn_operands)->Arg(0)->Arg(1);
BENCHMARK(BM_hb_powers)->Arg(0)->Arg(1);
BENCHMARK(BM_im2col)->Arg(0)->Arg(1);
BENCHMARK(BM_truncation_wraps)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
