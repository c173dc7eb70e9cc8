// Serial reference vs OpenMP kernels, plus the two assignment solvers.
#include <benchmark/benchmark.h>

#include <omp.h>

#include <random>

#include "odp/assignment.hpp"
#include "odp/kernels.hpp"

using namespace odp;
namespace k = odp::kernels;

namespace {

TensorF32 random_logits(std::size_t n, std::size_t c, std::uint64_t seed = 7) {
  std::mt19937_64 g(seed);
  std::normal_distribution<float> nd(0.f, 2.f);
  TensorF32 t(Shape{n, c});
  for (auto& v : t.data()) v = nd(g);
  return t;
}

template <bool Parallel>
void BM_Softmax(benchmark::State& state) {
  const auto logits = random_logits(static_cast<std::size_t>(state.range(0)), 100);
  for (auto _ : state) {
    auto p = Parallel ? k::omp::softmax(k::LogitView::of(logits)) : k::serial::softmax(k::LogitView::of(logits));
    benchmark::DoNotOptimize(p.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_LogSumExp(benchmark::State& state) {
  const auto logits = random_logits(static_cast<std::size_t>(state.range(0)), 100);
  for (auto _ : state) {
    auto v = Parallel ? k::omp::log_sum_exp(k::LogitView::of(logits)) : k::serial::log_sum_exp(k::LogitView::of(logits));
    benchmark::DoNotOptimize(v.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_HalfL1(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto probs = k::serial::softmax(k::LogitView::of(random_logits(m, 10)));
  std::vector<std::size_t> targets(m);
  for (std::size_t j = 0; j < m; ++j) targets[j] = j % 10;
  for (auto _ : state) {
    auto c = Parallel ? k::omp::half_l1_to_onehot(probs, targets) : k::serial::half_l1_to_onehot(probs, targets);
    benchmark::DoNotOptimize(c.data());
  }
}

void BM_Hungarian(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto probs = k::softmax(random_logits(m, 10));
  std::vector<std::size_t> targets(m);
  for (std::size_t j = 0; j < m; ++j) targets[j] = j % 10;
  const auto cost = k::half_l1_to_onehot(probs, targets);
  for (auto _ : state) benchmark::DoNotOptimize(solve_assignment(cost).total_cost);
}

void BM_ClassTransport(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto probs = k::softmax(random_logits(m, 10));
  const std::vector<std::size_t> classes = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  const auto cost = k::half_l1_to_onehot(probs, classes);
  std::vector<std::size_t> capacity(10, m / 10);
  for (auto _ : state) benchmark::DoNotOptimize(solve_class_transport(cost, capacity).total_cost);
}

}  // namespace

BENCHMARK(BM_Softmax<false>)->Arg(10000)->Arg(50000);
BENCHMARK(BM_Softmax<true>)->Arg(10000)->Arg(50000);
BENCHMARK(BM_LogSumExp<false>)->Arg(50000);
BENCHMARK(BM_LogSumExp<true>)->Arg(50000);
BENCHMARK(BM_HalfL1<false>)->Arg(500)->Arg(2000);
BENCHMARK(BM_HalfL1<true>)->Arg(500)->Arg(2000);
BENCHMARK(BM_Hungarian)->Arg(200)->Arg(500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ClassTransport)->Arg(200)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
