// Copyright 2026 The shrinkcast Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "shrinkcast/model.hpp"
#include "shrinkcast/rng.hpp"

namespace shrinkcast {

enum class OptimizerKind { Sgd, Adam };

struct TrainConfig {
    double learning_rate = 1e-3;
    int steps = 200;
    int batch_size = 8;
    int seq_len = 0;  // 0 -> model max_seq_len
    std::uint64_t seed = 0;
    OptimizerKind optimizer = OptimizerKind::Adam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double grad_clip = 1.0;   // global L2 norm; 0 disables
    int steps_per_epoch = 0;  // 0 -> one pass over the corpus

    /// Empty when valid. Zero steps and zero learning rate are allowed.
    std::string check() const;
};

/// SGD or Adam over a fixed list of parameter buffers. Buffer sizes are
/// bound on the first step and must not change afterwards.
class Optimizer {
public:
    explicit Optimizer(const TrainConfig& cfg) : cfg_(cfg) {}

    void step(const std::vector<std::span<double>>& params, const std::vector<std::span<const double>>& grads);

    /// Convenience overload for model parameters.
    void step(Parameters& params, Parameters& grads);

private:
    TrainConfig cfg_;
    std::vector<std::vector<double>> m_, v_;
    long long t_ = 0;
};

struct StepContext {
    int step = 0;
    int epoch = 1;  // 1-based
    std::uint64_t seed = 0;
};

struct StepLoss {
    double loss = 0.0;
    std::vector<double> components;
};

/// A training signal. `compute` returns the scalar objective for one batch
/// and writes d(objective)/d(student params) into `grads` (zeroed by the
/// caller). Objectives that own auxiliary trainable state (projection
/// heads, adversarial generators) update it themselves inside `compute`.
class Objective {
public:
    virtual ~Objective() = default;
    virtual std::vector<std::string> component_names() const { return {}; }
    virtual StepLoss compute(const TinyLm& student, const TokenBatch& inputs, std::span<const int> targets,
                             const StepContext& ctx, Parameters& grads) = 0;
};

/// Plain next-token cross-entropy.
class CrossEntropyObjective final : public Objective {
public:
    StepLoss compute(const TinyLm& student, const TokenBatch& inputs, std::span<const int> targets,
                     const StepContext& ctx, Parameters& grads) override;
};

struct LossLogRow {
    int step = 0;
    double loss = 0.0;
    std::vector<double> components;
};

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<LossLogRow> log;
    std::vector<std::string> component_names;
};

/// Random contiguous windows of seq+1 tokens: inputs are the first seq,
/// targets the last seq.
struct WindowSampler {
    WindowSampler(std::span<const std::uint16_t> corpus, int batch, int seq, std::uint64_t seed);
    std::pair<TokenBatch, std::vector<int>> next();

    std::span<const std::uint16_t> corpus;
    int batch;
    int seq;
    Rng rng;
};

/// Runs cfg.steps optimizer steps of `objective` starting from `init`.
/// Deterministic given (init, corpus, cfg). Throws Errc::divergence if a
/// step produces a non-finite loss.
TrainResult train(const Checkpoint& init, std::span<const std::uint16_t> corpus, const TrainConfig& cfg,
                  Objective& objective);

/// CSV: "step,loss[,component...]".
void write_loss_log(const TrainResult& result, const std::filesystem::path& path);
std::string format_loss_log(const TrainResult& result);

}  // namespace shrinkcast
