// Serial reference kernels vs. the OpenMP kernels on a 192 x 128 snippet.
// Arg = thread count for the parallel variants.

#include <benchmark/benchmark.h>

#include "viewsyn/gradcheck.hpp"
#include "viewsyn/parallel.hpp"
#include "viewsyn/reference.hpp"
#include "viewsyn/synth.hpp"

using namespace viewsyn;

namespace {

const SnippetState& instance() {
  static const SnippetState st = [] {
    GradCheckOptions o;
    o.height = 128;
    o.width = 192;
    o.levels = 4;
    o.seed = 3;
    o.avoid_kinks = false;
    return random_instance(o);
  }();
  return st;
}

void BM_WarpReference(benchmark::State& s) {
  const SnippetState& st = instance();
  const Image depth = st.depth();
  const RigidTransform T = pose_to_transform(st.pose(0));
  for (auto _ : s) benchmark::DoNotOptimize(reference::inverse_warp(st.source(0), depth, T, st.intrinsics));
}

void BM_WarpParallel(benchmark::State& s) {
  set_num_threads(static_cast<int>(s.range(0)));
  const SnippetState& st = instance();
  const Image depth = st.depth();
  const RigidTransform T = pose_to_transform(st.pose(0));
  for (auto _ : s) benchmark::DoNotOptimize(inverse_warp(st.source(0), depth, T, st.intrinsics));
  set_num_threads(0);
}

void BM_LossReference(benchmark::State& s) {
  const SnippetState& st = instance();
  std::vector<double> grad(st.params.size());
  for (auto _ : s) benchmark::DoNotOptimize(reference::total_loss(st, LossConfig{}, grad).total);
}

void BM_LossParallel(benchmark::State& s) {
  set_num_threads(static_cast<int>(s.range(0)));
  const SnippetState& st = instance();
  const Objective obj(st, LossConfig{});
  std::vector<double> grad(st.params.size());
  for (auto _ : s) benchmark::DoNotOptimize(obj.evaluate(st.params, grad).total);
  set_num_threads(0);
}

}  // namespace

BENCHMARK(BM_WarpReference)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_WarpParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_LossReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LossParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
