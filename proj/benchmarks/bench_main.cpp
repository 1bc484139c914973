#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "driftlab/adapt.hpp"
#include "driftlab/dataset.hpp"
#include "driftlab/embed.hpp"
#include "driftlab/porter.hpp"
#include "driftlab/svm.hpp"
#include "driftlab/tags.hpp"

using namespace driftlab;

namespace {

SynthConfig bench_synth(int per_class) {
  SynthConfig cfg;
  cfg.n_classes = 5;
  cfg.d_f = 12;
  cfg.d_w = 24;
  cfg.aux_count = {per_class};
  cfg.target_train_count = {per_class * 2};
  cfg.target_test_count = {10};
  cfg.true_positive_fraction = {0.4};
  cfg.seed = 7;
  return cfg;
}

}  // namespace

static void BM_PorterStem(benchmark::State& state) {
  const std::vector<std::string> words = {"generalization", "oscillators", "troubled",
                                          "hopefulness",    "kayaking",    "conditional"};
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(porter_stem(words[i++ % words.size()]));
  }
}
BENCHMARK(BM_PorterStem);

static void BM_TagScore(benchmark::State& state) {
  const std::size_t nd = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  TagDictionary dict;
  dict.n_d = nd;
  dict.n_bar_t = 15.0;
  TagVector cand(nd);
  std::vector<TagVector> positives(64, TagVector(nd));
  for (std::size_t i = 0; i < nd; ++i) {
    if (rng() % 2) cand.set(i);
    for (auto& p : positives)
      if (rng() % 8 == 0) p.set(i);
  }
  for (auto _ : state) benchmark::DoNotOptimize(tag_score(cand, positives, dict));
}
BENCHMARK(BM_TagScore)->Arg(256)->Arg(1024)->Arg(4096);

static void BM_EmbedForward(benchmark::State& state) {
  const int h = static_cast<int>(state.range(0));
  auto net = init_net(12, h, 24, 0.01, 1);
  std::vector<double> x(12, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(embed(net, std::span<const double>(x)));
}
BENCHMARK(BM_EmbedForward)->Arg(64)->Arg(400);

static void BM_LossAndGrad(benchmark::State& state) {
  const auto data = generate_synthetic(bench_synth(static_cast<int>(state.range(0))));
  auto net = init_net(12, 64, 24, 0.01, 1);
  std::vector<LabeledFeature> labeled;
  for (const auto& s : data.aux.samples)
    labeled.push_back({std::span<const double>(s.feature), *s.true_label});
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_grad(net, labeled, data.anchors).loss);
}
BENCHMARK(BM_LossAndGrad)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_TrainSvm(benchmark::State& state) {
  std::mt19937_64 rng(5);
  auto u = [&] { return static_cast<double>(rng() % 2000) / 500.0 - 2.0; };
  const int n = static_cast<int>(state.range(0));
  std::vector<std::vector<double>> pos, neg;
  for (int i = 0; i < n; ++i) {
    pos.push_back({u() + 2.0, u(), u()});
    neg.push_back({u() - 2.0, u(), u()});
  }
  for (auto _ : state) benchmark::DoNotOptimize(train_svm(pos, neg, 1.0, 7.0, 1).w[0]);
}
BENCHMARK(BM_TrainSvm)->Arg(20)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_FullAdaptation(benchmark::State& state) {
  const auto data = generate_synthetic(bench_synth(40));
  AdaptConfig cfg;
  cfg.embed.hidden = 16;
  cfg.embed.max_epochs = 150;
  cfg.seed = 11;
  for (auto _ : state) {
    auto result = run_adaptation(data.aux, data.target_train, data.anchors, cfg);
    benchmark::DoNotOptimize(result.iterations_run);
  }
}
BENCHMARK(BM_FullAdaptation)->Unit(benchmark::kMillisecond)->Iterations(3);

BENCHMARK_MAIN();
