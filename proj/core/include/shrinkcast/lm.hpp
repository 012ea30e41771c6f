// Copyright 2026 The shrinkcast Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "shrinkcast/model.hpp"

namespace shrinkcast {

/// Row-wise softmax of logits / temperature (max-subtracted).
Matrix softmax_rows(const Matrix& logits, double temperature = 1.0);
Matrix log_softmax_rows(const Matrix& logits, double temperature = 1.0);

/// Scalar loss and its gradient with respect to the logits it was computed on.
struct LogitLoss {
    double loss = 0.0;
    Matrix d_logits;
};

/// Mean token-level cross-entropy against hard targets (one per row).
LogitLoss cross_entropy(const Matrix& logits, std::span<const int> targets);

/// Mean cross-entropy against per-row target distributions.
LogitLoss soft_cross_entropy(const Matrix& logits, const Matrix& target_probs);

struct ModelLoss {
    double loss = 0.0;
    Parameters grads;
};

/// Next-token cross-entropy of `trace` against `targets` plus the gradient for
/// every parameter of `model` (the model that produced `trace`).
ModelLoss lm_loss(const TinyLm& model, const ForwardTrace& trace, std::span<const int> targets);

/// exp(mean NLL) over a token stream, scored in consecutive non-overlapping
/// windows of up to max_seq_len predictions; every token after the first is
/// predicted exactly once. Requires at least two tokens.
double perplexity(const TinyLm& model, std::span<const std::uint16_t> corpus);
double perplexity(const Checkpoint& ckpt, std::span<const std::uint16_t> corpus);

/// Linear classification head d_model -> K on the last position's
/// final-norm hidden state.
struct ClassifierHead {
    Matrix weight;  // [d_model, K]
    RowVector bias;  // [K]

    static ClassifierHead zeros(int d_model, int num_classes);
};

/// [batch, K] class logits.
Matrix classify_forward(const TinyLm& model, const ClassifierHead& head, const TokenBatch& tokens);

struct ClassifierLoss {
    double loss = 0.0;
    Parameters body_grads;
    ClassifierHead head_grads;
};

/// Mean cross-entropy of the class logits against `labels` (one per sequence).
ClassifierLoss classification_loss(const TinyLm& model, const ClassifierHead& head, const TokenBatch& tokens,
                                   std::span<const int> labels);

}  // namespace shrinkcast
