#include <benchmark/benchmark.h>

#include "cisnet/eval.hpp"
#include "cisnet/laplace.hpp"
#include "cisnet/model.hpp"
#include "cisnet/ops.hpp"
#include "cisnet/rng.hpp"
#include "cisnet/stego.hpp"
#include "cisnet/suppression.hpp"
#include "cisnet/train.hpp"

using namespace cisnet;

namespace {

Tensor random_input(Shape shape, uint64_t seed) {
  Rng rng(seed);
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t.data()[i] = rng.normal();
  return t;
}

void BM_Conv2dForward(benchmark::State& state) {
  autodiff::NoGradGuard no_grad;
  Tensor input = random_input({1, 32, 64, 64}, 1);
  Tensor weight = random_input({32, 32, 3, 3}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(input, weight, Tensor(), 1, 1, 1));
}
BENCHMARK(BM_Conv2dForward)->Unit(benchmark::kMillisecond);

void BM_SplForward(benchmark::State& state) {
  autodiff::NoGradGuard no_grad;
  Tensor input = random_input({1, 64, 16, 16}, 3);
  SublinearConfig cfg{0.9, 0.9, 2};
  for (auto _ : state) benchmark::DoNotOptimize(spl(input, cfg));
}
BENCHMARK(BM_SplForward)->Unit(benchmark::kMicrosecond);

void BM_StlForward(benchmark::State& state) {
  autodiff::NoGradGuard no_grad;
  Tensor input = random_input({1, 20, 64, 64}, 4);
  for (auto _ : state) benchmark::DoNotOptimize(stl(input, 5.0));
}
BENCHMARK(BM_StlForward)->Unit(benchmark::kMicrosecond);

void BM_TrainStep(benchmark::State& state) {
  NetworkConfig cfg;
  cfg.input_h = cfg.input_w = 64;
  cfg.hpf_count = 8;
  cfg.fusion_channels = 8;
  cfg.type1_channels = {8, 16};
  cfg.type2_channels = {16, 32};
  CisNet net = CisNet::build(cfg);
  net.init_weights(5);
  std::vector<CoverStegoPair> data;
  for (uint64_t i = 0; i < 8; ++i)
    data.push_back(embed_adaptive(synthetic_cover(64, 64, i), 0.4, i));
  const auto batches = make_paired_batches(data, 8, 1, 0);
  TrainConfig tc;
  TrainState st;
  for (auto _ : state)
    benchmark::DoNotOptimize(train_step(net, batches[0].images, batches[0].labels, tc, st));
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

void BM_LaplaceNormalization(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(normalization(0.5, 1.0));
}
BENCHMARK(BM_LaplaceNormalization)->Unit(benchmark::kMicrosecond);

void BM_LaplaceSampler(benchmark::State& state) {
  const GenLaplaceParams params = GenLaplaceParams::make(1.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(sample(params, 100000, 7));
  state.SetItemsProcessed(state.iterations() * 100000);
}
BENCHMARK(BM_LaplaceSampler)->Unit(benchmark::kMillisecond);

void BM_DetectionError(benchmark::State& state) {
  Rng rng(8);
  std::vector<double> scores;
  std::vector<int> labels;
  for (int i = 0; i < 10000; ++i) {
    const int lab = rng.next_u64() & 1 ? 1 : 0;
    scores.push_back(rng.normal() + (lab ? 0.5 : 0.0));
    labels.push_back(lab);
  }
  for (auto _ : state) benchmark::DoNotOptimize(detection_error(scores, labels));
}
BENCHMARK(BM_DetectionError)->Unit(benchmark::kMillisecond);

void BM_EmbedAdaptive(benchmark::State& state) {
  Tensor cover = synthetic_cover(64, 64, 9);
  uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(embed_adaptive(cover, 0.4, seed++));
}
BENCHMARK(BM_EmbedAdaptive)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
