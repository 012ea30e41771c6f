// Copyright 2026 The shrinkcast Authors
// SPDX-License-Identifier: Apache-2.0

#include "shrinkcast/train.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "shrinkcast/error.hpp"
#include "shrinkcast/lm.hpp"
#include "shrinkcast/report.hpp"

namespace shrinkcast {

std::string TrainConfig::check() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) return "learning_rate must be finite and >= 0";
    if (steps < 0) return "steps must be >= 0";
    if (batch_size < 1) return "batch_size must be >= 1";
    if (seq_len < 0) return "seq_len must be >= 0";
    if (!(beta1 > 0.0 && beta1 < 1.0)) return "beta1 must be in (0,1)";
    if (!(beta2 > 0.0 && beta2 < 1.0)) return "beta2 must be in (0,1)";
    if (!(epsilon > 0.0)) return "epsilon must be > 0";
    if (!(grad_clip >= 0.0)) return "grad_clip must be >= 0";
    if (steps_per_epoch < 0) return "steps_per_epoch must be >= 0";
    return {};
}

void Optimizer::step(const std::vector<std::span<double>>& params, const std::vector<std::span<const double>>& grads) {
    if (params.size() != grads.size()) throw Error(Errc::invalid_argument, "optimizer: param/grad count mismatch");
    if (m_.empty()) {
        for (const auto& p : params) {
            m_.emplace_back(p.size(), 0.0);
            v_.emplace_back(p.size(), 0.0);
        }
    } else if (m_.size() != params.size()) {
        throw Error(Errc::invalid_argument, "optimizer: parameter layout changed");
    }

    double scale = 1.0;
    if (cfg_.grad_clip > 0.0) {
        double sq = 0.0;
        for (const auto& g : grads) {
            for (double v : g) sq += v * v;
        }
        const double norm = std::sqrt(sq);
        if (norm > cfg_.grad_clip) scale = cfg_.grad_clip / norm;
    }

    ++t_;
    const double lr = cfg_.learning_rate;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto p = params[i];
        auto g = grads[i];
        if (p.size() != g.size() || p.size() != m_[i].size()) {
            throw Error(Errc::invalid_argument, "optimizer: buffer size mismatch");
        }
        if (cfg_.optimizer == OptimizerKind::Sgd) {
            for (std::size_t j = 0; j < p.size(); ++j) p[j] -= lr * scale * g[j];
            continue;
        }
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double gj = scale * g[j];
            m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * gj;
            v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * gj * gj;
            p[j] -= lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + cfg_.epsilon);
        }
    }
}

void Optimizer::step(Parameters& params, Parameters& grads) {
    std::vector<std::span<double>> p;
    std::vector<std::span<const double>> g;
    for (auto& v : params.views()) p.push_back(v.values);
    for (auto& v : grads.views()) g.emplace_back(v.values);
    step(p, g);
}

StepLoss CrossEntropyObjective::compute(const TinyLm& student, const TokenBatch& inputs, std::span<const int> targets,
                                        const StepContext&, Parameters& grads) {
    const auto trace = student.forward(inputs);
    auto loss = lm_loss(student, trace, targets);
    grads = std::move(loss.grads);
    return {loss.loss, {}};
}

WindowSampler::WindowSampler(std::span<const std::uint16_t> corpus_, int batch_, int seq_, std::uint64_t seed)
    : corpus(corpus_), batch(batch_), seq(seq_), rng(seed) {
    if (corpus.size() < static_cast<std::size_t>(seq) + 1) {
        throw Error(Errc::empty_input, "corpus of " + std::to_string(corpus.size()) + " tokens is shorter than one " +
                                           std::to_string(seq + 1) + "-token window");
    }
}

std::pair<TokenBatch, std::vector<int>> WindowSampler::next() {
    TokenBatch inputs{batch, seq, {}};
    std::vector<int> targets;
    inputs.ids.reserve(static_cast<std::size_t>(batch * seq));
    targets.reserve(static_cast<std::size_t>(batch * seq));
    const std::uint64_t starts = corpus.size() - static_cast<std::size_t>(seq);
    for (int b = 0; b < batch; ++b) {
        const auto s = static_cast<std::size_t>(rng.uniform_below(starts));
        for (int t = 0; t < seq; ++t) {
            inputs.ids.push_back(corpus[s + static_cast<std::size_t>(t)]);
            targets.push_back(corpus[s + static_cast<std::size_t>(t) + 1]);
        }
    }
    return {std::move(inputs), std::move(targets)};
}

TrainResult train(const Checkpoint& init, std::span<const std::uint16_t> corpus, const TrainConfig& cfg,
                  Objective& objective) {
    if (auto problem = cfg.check(); !problem.empty()) throw Error(Errc::invalid_argument, "train config: " + problem);
    TinyLm model = TinyLm::from_checkpoint(init);
    TrainResult result;
    result.component_names = objective.component_names();
    if (cfg.steps == 0) {
        result.checkpoint = init;
        return result;
    }

    const int seq = cfg.seq_len > 0 ? cfg.seq_len : static_cast<int>(model.config().max_seq_len);
    if (static_cast<std::uint32_t>(seq) > model.config().max_seq_len) {
        throw Error(Errc::sequence_too_long, "training seq_len exceeds max_seq_len");
    }
    WindowSampler sampler(corpus, cfg.batch_size, seq, derive_seed(cfg.seed, 0x5a4d));
    const int per_epoch =
        cfg.steps_per_epoch > 0
            ? cfg.steps_per_epoch
            : std::max(1, static_cast<int>((corpus.size() - 1) / static_cast<std::size_t>(cfg.batch_size * seq)));

    Optimizer optimizer(cfg);
    Parameters grads = Parameters::zeros(model.config());
    for (int step = 0; step < cfg.steps; ++step) {
        auto [inputs, targets] = sampler.next();
        grads.set_zero();
        const StepContext ctx{step, 1 + step / per_epoch, derive_seed(cfg.seed, 0x1000 + static_cast<std::uint64_t>(step))};
        StepLoss loss = objective.compute(model, inputs, targets, ctx, grads);
        if (!std::isfinite(loss.loss)) {
            throw Error(Errc::divergence, "non-finite loss at step " + std::to_string(step));
        }
        result.log.push_back({step, loss.loss, std::move(loss.components)});
        optimizer.step(model.parameters(), grads);
    }
    result.checkpoint = model.parameters().to_checkpoint();
    return result;
}

std::string format_loss_log(const TrainResult& result) {
    std::ostringstream out;
    out << "step,loss";
    for (const auto& name : result.component_names) out << ',' << name;
    out << '\n';
    for (const auto& row : result.log) {
        out << row.step << ',' << format_double(row.loss);
        for (double c : row.components) out << ',' << format_double(c);
        out << '\n';
    }
    return out.str();
}

void write_loss_log(const TrainResult& result, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot open '" + path.string() + "' for writing");
    out << format_loss_log(result);
    if (!out) throw Error(Errc::io, "failed writing '" + path.string() + "'");
}

}  // namespace shrinkcast
