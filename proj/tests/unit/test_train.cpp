// Copyright 2026 The shrinkcast Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <limits>
#include <map>

#include "shrinkcast/corpus.hpp"
#include "shrinkcast/lm.hpp"
#include "shrinkcast/train.hpp"
#include "support/fixtures.hpp"

using namespace shrinkcast;
using namespace shrinkcast::testing;

namespace {

double unigram_perplexity(const TokenStream& train, const TokenStream& eval, int vocab) {
    std::vector<double> counts(static_cast<std::size_t>(vocab), 1.0);  // add-one
    for (auto t : train) counts[t] += 1.0;
    double total = 0.0;
    for (double c : counts) total += c;
    double nll = 0.0;
    for (std::size_t i = 1; i < eval.size(); ++i) nll -= std::log(counts[eval[i]] / total);
    return std::exp(nll / static_cast<double>(eval.size() - 1));
}

struct NanObjective final : Objective {
    int fail_at;
    explicit NanObjective(int f) : fail_at(f) {}
    StepLoss compute(const TinyLm& student, const TokenBatch& inputs, std::span<const int> targets,
                     const StepContext& ctx, Parameters& grads) override {
        CrossEntropyObjective ce;
        StepLoss l = ce.compute(student, inputs, targets, ctx, grads);
        if (ctx.step == fail_at) l.loss = std::numeric_limits<double>::quiet_NaN();
        return l;
    }
};

ModelConfig grammar_config(std::uint32_t layers) {
    ModelConfig c = small_config(layers);
    c.vocab_size = kGrammarVocab;
    return c;
}

TrainConfig quick(int steps, std::uint64_t seed = 1) {
    TrainConfig cfg;
    cfg.steps = steps;
    cfg.batch_size = 4;
    cfg.seed = seed;
    cfg.learning_rate = 3e-3;
    return cfg;
}

}  // namespace

TEST_CASE("SGD and Adam steps match hand computation") {
    std::vector<double> x = {1.0, -2.0};
    const std::vector<double> g1 = {0.5, -0.25};
    const std::vector<double> g2 = {-0.1, 0.4};

    TrainConfig sgd;
    sgd.optimizer = OptimizerKind::Sgd;
    sgd.learning_rate = 0.1;
    sgd.grad_clip = 0.0;
    Optimizer opt_sgd(sgd);
    auto y = x;
    opt_sgd.step({std::span<double>(y)}, {std::span<const double>(g1)});
    CHECK(y[0] == doctest::Approx(0.95).epsilon(1e-15));
    CHECK(y[1] == doctest::Approx(-1.975).epsilon(1e-15));

    TrainConfig adam;
    adam.learning_rate = 0.01;
    adam.grad_clip = 0.0;
    Optimizer opt_adam(adam);
    auto z = x;
    opt_adam.step({std::span<double>(z)}, {std::span<const double>(g1)});
    opt_adam.step({std::span<double>(z)}, {std::span<const double>(g2)});
    for (int i = 0; i < 2; ++i) {
        double m = 0, v = 0, p = x[static_cast<std::size_t>(i)];
        for (int t = 1; t <= 2; ++t) {
            const double g = (t == 1 ? g1 : g2)[static_cast<std::size_t>(i)];
            m = 0.9 * m + 0.1 * g;
            v = 0.999 * v + 0.001 * g * g;
            p -= 0.01 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
        }
        CHECK(z[static_cast<std::size_t>(i)] == doctest::Approx(p).epsilon(1e-14));
    }
}

TEST_CASE("gradient clipping rescales by the global norm") {
    TrainConfig cfg;
    cfg.optimizer = OptimizerKind::Sgd;
    cfg.learning_rate = 1.0;
    cfg.grad_clip = 1.0;
    Optimizer opt(cfg);
    std::vector<double> a = {0.0}, b = {0.0};
    const std::vector<double> ga = {3.0}, gb = {4.0};
    opt.step({std::span<double>(a), std::span<double>(b)}, {std::span<const double>(ga), std::span<const double>(gb)});
    CHECK(a[0] == doctest::Approx(-0.6).epsilon(1e-15));
    CHECK(b[0] == doctest::Approx(-0.8).epsilon(1e-15));
}

TEST_CASE("sampled windows are next-token pairs from the corpus") {
    TokenStream corpus;
    for (int i = 0; i < 100; ++i) corpus.push_back(static_cast<std::uint16_t>(i));
    WindowSampler sampler(corpus, 3, 7, 5);
    for (int round = 0; round < 20; ++round) {
        auto [inputs, targets] = sampler.next();
        for (int b = 0; b < 3; ++b) {
            for (int t = 0; t < 7; ++t) {
                const int i = inputs.at(b, t);
                CHECK(targets[static_cast<std::size_t>(b * 7 + t)] == i + 1);
                if (t > 0) CHECK(i == inputs.at(b, t - 1) + 1);
            }
        }
    }
    CHECK(error_code_of([&] { WindowSampler(std::span(corpus).first(7), 1, 7, 0); }) == Errc::empty_input);
}

TEST_CASE("training is a pure function of (init, corpus, config)") {
    const Checkpoint init = init_checkpoint(grammar_config(2), 1);
    const TokenStream corpus = generate_grammar_corpus(5000, 3);
    CrossEntropyObjective ce;
    const auto a = train(init, std::span(corpus).first(corpus.size()), quick(15), ce);
    const auto b = train(init, corpus, quick(15), ce);
    CHECK(bitwise_equal(a.checkpoint, b.checkpoint));
    CHECK(format_loss_log(a) == format_loss_log(b));
    const auto other = train(init, corpus, quick(15, 2), ce);
    CHECK_FALSE(bitwise_equal(a.checkpoint, other.checkpoint));
}

TEST_CASE("zero learning rate and zero steps leave the checkpoint untouched") {
    const Checkpoint init = init_checkpoint(grammar_config(2), 4);
    const TokenStream corpus = generate_grammar_corpus(3000, 1);
    CrossEntropyObjective ce;
    auto cfg = quick(5);
    cfg.learning_rate = 0.0;
    CHECK(bitwise_equal(train(init, corpus, cfg, ce).checkpoint, init));
    cfg = quick(0);
    const auto r = train(init, corpus, cfg, ce);
    CHECK(bitwise_equal(r.checkpoint, init));
    CHECK(r.log.empty());
}

TEST_CASE("non-finite loss raises a divergence error") {
    const Checkpoint init = init_checkpoint(grammar_config(1), 4);
    const TokenStream corpus = generate_grammar_corpus(3000, 1);
    NanObjective nan(3);
    CHECK(error_code_of([&] { train(init, corpus, quick(10), nan); }) == Errc::divergence);
}

TEST_CASE("a small model learns the grammar corpus beyond unigram statistics") {
    ModelConfig c = small_config(2);
    c.vocab_size = kGrammarVocab;
    c.d_model = 32;
    c.max_seq_len = 32;
    const TokenStream train_corpus = generate_grammar_corpus(40000, 10);
    const TokenStream eval_corpus = generate_grammar_corpus(4000, 11);
    CrossEntropyObjective ce;
    TrainConfig cfg = quick(150);
    cfg.batch_size = 8;
    const auto result = train(init_checkpoint(c, 2), train_corpus, cfg, ce);
    const double ppl = perplexity(result.checkpoint, eval_corpus);
    const double unigram = unigram_perplexity(train_corpus, eval_corpus, static_cast<int>(c.vocab_size));
    INFO("ppl " << ppl << " unigram " << unigram);
    CHECK(ppl < unigram);
    CHECK(result.log.back().loss < result.log.front().loss);
}

TEST_CASE("loss log layout") {
    TrainResult r;
    r.component_names = {"ce", "kl"};
    r.log = {{0, 1.5, {1.0, 0.5}}, {1, 0.25, {0.125, 0.125}}};
    CHECK(format_loss_log(r) == "step,loss,ce,kl\n0,1.5,1,0.5\n1,0.25,0.125,0.125\n");
}
