// Copyright 2026 The shrinkcast Authors
// SPDX-License-Identifier: Apache-2.0

#include "shrinkcast/lm.hpp"

#include <algorithm>
#include <cmath>

#include "shrinkcast/error.hpp"

namespace shrinkcast {

namespace {

void check_targets(const Matrix& logits, std::span<const int> targets) {
    if (static_cast<Eigen::Index>(targets.size()) != logits.rows()) {
        throw Error(Errc::shape_mismatch, "expected " + std::to_string(logits.rows()) + " targets, got " +
                                              std::to_string(targets.size()));
    }
    for (int t : targets) {
        if (t < 0 || t >= logits.cols()) throw Error(Errc::token_out_of_range, "target id " + std::to_string(t));
    }
}

}  // namespace

Matrix log_softmax_rows(const Matrix& logits, double temperature) {
    Matrix out = logits / temperature;
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
        const double m = out.row(r).maxCoeff();
        const double lse = m + std::log((out.row(r).array() - m).exp().sum());
        out.row(r).array() -= lse;
    }
    return out;
}

Matrix softmax_rows(const Matrix& logits, double temperature) {
    Matrix out = logits / temperature;
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
        const double m = out.row(r).maxCoeff();
        out.row(r) = (out.row(r).array() - m).exp();
        out.row(r) /= out.row(r).sum();
    }
    return out;
}

LogitLoss cross_entropy(const Matrix& logits, std::span<const int> targets) {
    check_targets(logits, targets);
    LogitLoss out;
    const Matrix logp = log_softmax_rows(logits);
    out.d_logits = logp.array().exp();
    const double inv_rows = 1.0 / static_cast<double>(logits.rows());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const int t = targets[static_cast<std::size_t>(r)];
        out.loss -= logp(r, t);
        out.d_logits(r, t) -= 1.0;
    }
    out.loss *= inv_rows;
    out.d_logits *= inv_rows;
    return out;
}

LogitLoss soft_cross_entropy(const Matrix& logits, const Matrix& target_probs) {
    if (logits.rows() != target_probs.rows() || logits.cols() != target_probs.cols()) {
        throw Error(Errc::shape_mismatch, "soft targets shape differs from logits");
    }
    const double inv_rows = 1.0 / static_cast<double>(logits.rows());
    const Matrix logp = log_softmax_rows(logits);
    LogitLoss out;
    out.loss = -(target_probs.cwiseProduct(logp)).sum() * inv_rows;
    // Rows of target_probs sum to one, so d/dz = softmax - target.
    Matrix p = logp.array().exp();
    for (Eigen::Index r = 0; r < p.rows(); ++r) p.row(r) *= target_probs.row(r).sum();
    out.d_logits = (p - target_probs) * inv_rows;
    return out;
}

ModelLoss lm_loss(const TinyLm& model, const ForwardTrace& trace, std::span<const int> targets) {
    auto ce = cross_entropy(trace.logits, targets);
    BackwardSeeds seeds;
    seeds.d_logits = &ce.d_logits;
    return {ce.loss, model.backward(trace, seeds).params};
}

double perplexity(const TinyLm& model, std::span<const std::uint16_t> corpus) {
    if (corpus.size() < 2) throw Error(Errc::empty_input, "perplexity needs at least two tokens");
    const auto window = static_cast<std::size_t>(model.config().max_seq_len);
    const std::size_t predictions = corpus.size() - 1;
    constexpr std::size_t kWindowsPerBatch = 16;

    double nll = 0.0;
    std::size_t start = 0;
    while (start < predictions) {
        const std::size_t full = (predictions - start) / window;
        const std::size_t len = full > 0 ? window : predictions - start;
        const std::size_t count = full > 0 ? std::min(full, kWindowsPerBatch) : 1;

        TokenBatch batch{static_cast<int>(count), static_cast<int>(len), {}};
        std::vector<int> targets;
        batch.ids.reserve(count * len);
        targets.reserve(count * len);
        for (std::size_t w = 0; w < count; ++w) {
            const std::size_t s = start + w * len;
            for (std::size_t t = 0; t < len; ++t) {
                batch.ids.push_back(corpus[s + t]);
                targets.push_back(corpus[s + t + 1]);
            }
        }
        const auto trace = model.forward(batch);
        check_targets(trace.logits, targets);
        const Matrix logp = log_softmax_rows(trace.logits);
        for (Eigen::Index r = 0; r < logp.rows(); ++r) nll -= logp(r, targets[static_cast<std::size_t>(r)]);
        start += count * len;
    }
    return std::exp(nll / static_cast<double>(predictions));
}

double perplexity(const Checkpoint& ckpt, std::span<const std::uint16_t> corpus) {
    return perplexity(TinyLm::from_checkpoint(ckpt), corpus);
}

ClassifierHead ClassifierHead::zeros(int d_model, int num_classes) {
    if (d_model < 1 || num_classes < 1) throw Error(Errc::invalid_argument, "classifier head dimensions must be >= 1");
    return {Matrix::Zero(d_model, num_classes), RowVector::Zero(num_classes)};
}

namespace {

Matrix last_positions(const ForwardTrace& trace) {
    Matrix h(trace.batch, trace.final_hidden.cols());
    for (int b = 0; b < trace.batch; ++b) h.row(b) = trace.final_hidden.row(b * trace.seq + trace.seq - 1);
    return h;
}

void check_head(const TinyLm& model, const ClassifierHead& head) {
    if (head.weight.rows() != static_cast<Eigen::Index>(model.config().d_model) ||
        head.bias.size() != head.weight.cols()) {
        throw Error(Errc::shape_mismatch, "classifier head does not match model width");
    }
}

}  // namespace

Matrix classify_forward(const TinyLm& model, const ClassifierHead& head, const TokenBatch& tokens) {
    check_head(model, head);
    const auto trace = model.forward(tokens);
    Matrix logits = last_positions(trace) * head.weight;
    logits.rowwise() += head.bias;
    return logits;
}

ClassifierLoss classification_loss(const TinyLm& model, const ClassifierHead& head, const TokenBatch& tokens,
                                   std::span<const int> labels) {
    check_head(model, head);
    const auto trace = model.forward(tokens);
    const Matrix h = last_positions(trace);
    Matrix logits = h * head.weight;
    logits.rowwise() += head.bias;
    auto ce = cross_entropy(logits, labels);

    ClassifierLoss out;
    out.loss = ce.loss;
    out.head_grads.weight = h.transpose() * ce.d_logits;
    out.head_grads.bias = ce.d_logits.colwise().sum();
    Matrix d_final = Matrix::Zero(trace.final_hidden.rows(), trace.final_hidden.cols());
    const Matrix dh = ce.d_logits * head.weight.transpose();
    for (int b = 0; b < trace.batch; ++b) d_final.row(b * trace.seq + trace.seq - 1) = dh.row(b);
    BackwardSeeds seeds;
    seeds.d_final_hidden = &d_final;
    out.body_grads = model.backward(trace, seeds).params;
    return out;
}

}  // namespace shrinkcast
