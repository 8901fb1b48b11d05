// Microbenchmarks for the hot numeric kernels.
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "dve/correlation.hpp"
#include "dve/encoders.hpp"
#include "dve/losses.hpp"
#include "dve/metrics.hpp"

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed, int distinct = 0) {
    std::mt19937_64 rng(seed);
    std::vector<double> out(n);
    if (distinct > 0) {
        std::uniform_int_distribution<int> pick(0, distinct - 1);
        for (auto& v : out) v = pick(rng);
    } else {
        std::uniform_real_distribution<double> value(-3.0, 3.0);
        for (auto& v : out) v = value(rng);
    }
    return out;
}

void BM_PairwiseContrastiveLoss(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    const auto s_u = random_values(n, 1);
    const auto s_c = random_values(n, 2);
    std::vector<int> signs(n);
    std::mt19937_64 rng(3);
    for (auto& s : signs) s = (rng() & 1) ? 1 : -1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(dve::pairwise_contrastive_loss(s_u, s_c, signs));
    }
    state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_PairwiseContrastiveLoss)->Arg(1024)->Arg(16384);

void BM_BatchLossWithGradients(benchmark::State& state) {
    const std::size_t dim = 256;
    const std::size_t batch = static_cast<std::size_t>(state.range(0));
    dve::StrengthHead strength = dve::make_strength_head(dim);
    dve::ClassificationHead classifier = dve::make_classification_head(dim);
    std::vector<dve::TrainExample> examples(batch);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> value(-1.0, 1.0);
    for (auto& ex : examples) {
        ex.update_feature.visual_dim = dim / 2;
        ex.caption_feature.visual_dim = dim / 2;
        for (std::size_t i = 0; i < dim; ++i) {
            ex.update_feature.values.push_back(value(rng));
            ex.caption_feature.values.push_back(value(rng));
        }
        ex.label = (rng() & 1) ? dve::UpdateLabel::strengthener : dve::UpdateLabel::weakener;
    }
    dve::HeadGradients grads;
    for (auto _ : state) {
        benchmark::DoNotOptimize(dve::batch_loss(strength, classifier, examples, 0.9,
                                                 dve::ClassifierLoss::softmax_ce, &grads));
    }
}
BENCHMARK(BM_BatchLossWithGradients)->Arg(32)->Arg(256);

void BM_KendallTau(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    const auto x = random_values(n, 5, 16);
    const auto y = random_values(n, 6, 16);
    for (auto _ : state) {
        benchmark::DoNotOptimize(dve::kendall_tau(x, y));
    }
}
BENCHMARK(BM_KendallTau)->Arg(256)->Arg(4096);

void BM_RougeL(benchmark::State& state) {
    const std::string candidate =
        "a brown dog sprints over the wet grass chasing a bright yellow ball";
    const std::vector<std::string> references{
        "the brown dog runs across the field after a yellow ball",
        "a dog chases a ball over the grass"};
    for (auto _ : state) {
        benchmark::DoNotOptimize(dve::rouge_l(candidate, references));
    }
}
BENCHMARK(BM_RougeL);

void BM_Bleu4(benchmark::State& state) {
    const std::string candidate =
        "a brown dog sprints over the wet grass chasing a bright yellow ball";
    const std::vector<std::string> references{
        "the brown dog runs across the field after a yellow ball",
        "a dog chases a ball over the grass"};
    for (auto _ : state) {
        benchmark::DoNotOptimize(dve::bleu4(candidate, references));
    }
}
BENCHMARK(BM_Bleu4);

void BM_DeterministicEncode(benchmark::State& state) {
    const std::size_t dim = static_cast<std::size_t>(state.range(0));
    const std::string payload = "hypothesis text\x1fupdate text";
    for (auto _ : state) {
        benchmark::DoNotOptimize(dve::deterministic_features(payload, dim, 42));
    }
}
BENCHMARK(BM_DeterministicEncode)->Arg(128)->Arg(2048);

}  // namespace

BENCHMARK_MAIN();
