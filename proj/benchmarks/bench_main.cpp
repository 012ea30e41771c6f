// Copyright 2026 The shrinkcast Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <sstream>

#include "shrinkcast/checkpoint.hpp"
#include "shrinkcast/cleaner.hpp"
#include "shrinkcast/corpus.hpp"
#include "shrinkcast/distill.hpp"
#include "shrinkcast/lm.hpp"
#include "shrinkcast/planner.hpp"
#include "shrinkcast/rng.hpp"
#include "shrinkcast/train.hpp"

namespace sc = shrinkcast;

namespace {

sc::ModelConfig toy(std::uint32_t layers) {
    sc::ModelConfig c;
    c.n_layers = layers;
    c.vocab_size = sc::kGrammarVocab;
    return c;
}

sc::TokenBatch batch(int b, int seq) {
    const auto stream = sc::generate_grammar_corpus(static_cast<std::size_t>(b * seq), 1);
    return sc::TokenBatch{b, seq, std::vector<int>(stream.begin(), stream.end())};
}

void BM_Forward(benchmark::State& state) {
    const sc::TinyLm model(sc::init_parameters(toy(static_cast<std::uint32_t>(state.range(0))), 1));
    const auto tokens = batch(8, 64);
    for (auto _ : state) benchmark::DoNotOptimize(model.forward(tokens).logits.data());
    state.SetItemsProcessed(state.iterations() * 8 * 64);
}
BENCHMARK(BM_Forward)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_ForwardBackward(benchmark::State& state) {
    const sc::TinyLm model(sc::init_parameters(toy(static_cast<std::uint32_t>(state.range(0))), 1));
    const auto tokens = batch(8, 65);
    sc::TokenBatch in{8, 64, {}};
    std::vector<int> targets;
    for (int b = 0; b < 8; ++b) {
        for (int t = 0; t < 64; ++t) {
            in.ids.push_back(tokens.ids[static_cast<std::size_t>(b * 65 + t)]);
            targets.push_back(tokens.ids[static_cast<std::size_t>(b * 65 + t + 1)]);
        }
    }
    for (auto _ : state) {
        const auto trace = model.forward(in);
        benchmark::DoNotOptimize(sc::lm_loss(model, trace, targets).loss);
    }
    state.SetItemsProcessed(state.iterations() * 8 * 64);
}
BENCHMARK(BM_ForwardBackward)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_VanillaKdLoss(benchmark::State& state) {
    sc::Rng rng(3);
    sc::Matrix zs(512, sc::kGrammarVocab), zt(512, sc::kGrammarVocab);
    for (Eigen::Index i = 0; i < zs.size(); ++i) {
        zs.data()[i] = rng.normal();
        zt.data()[i] = rng.normal();
    }
    std::vector<int> y(512);
    for (auto& v : y) v = static_cast<int>(rng.uniform_below(sc::kGrammarVocab));
    const sc::DistillConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(sc::vanilla_kd_loss(zs, zt, y, cfg).loss);
}
BENCHMARK(BM_VanillaKdLoss)->Unit(benchmark::kMicrosecond);

void BM_CheckpointSerialize(benchmark::State& state) {
    const auto ckpt = sc::init_checkpoint(toy(4), 1);
    std::size_t bytes = 0;
    for (auto _ : state) {
        const auto b = sc::serialize_checkpoint(ckpt);
        bytes = b.size();
        benchmark::DoNotOptimize(sc::deserialize_checkpoint(b).tensors.size());
    }
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * static_cast<std::int64_t>(bytes));
}
BENCHMARK(BM_CheckpointSerialize)->Unit(benchmark::kMicrosecond);

void BM_Planner(benchmark::State& state) {
    for (auto _ : state) {
        for (int n = 4; n <= 48; n += 4) benchmark::DoNotOptimize(sc::pseudo_uniform(n, 2).selection.data());
    }
}
BENCHMARK(BM_Planner);

void BM_Cleaner(benchmark::State& state) {
    sc::Rng rng(5);
    const char* words[] = {"alpha", "beta", "<b>", "model", "!", "token", "été", "the", "of", "2024"};
    std::string input;
    for (int i = 0; i < 20000; ++i) {
        const auto len = rng.uniform_below(15);
        for (std::uint64_t j = 0; j < len; ++j) input += std::string(words[rng.uniform_below(10)]) + " ";
        input += "\n";
    }
    sc::CleanOptions opts;
    opts.jobs = static_cast<int>(state.range(0));
    for (auto _ : state) {
        std::istringstream in(input);
        std::ostringstream out;
        benchmark::DoNotOptimize(sc::clean_stream(in, out, opts).kept_records);
    }
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * static_cast<std::int64_t>(input.size()));
}
BENCHMARK(BM_Cleaner)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
