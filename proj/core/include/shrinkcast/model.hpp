// Copyright 2026 The shrinkcast Authors
// SPDX-License-Identifier: Apache-2.0
//
// Pre-norm decoder-only transformer (GPT-2 layout: learned positions,
// tanh-GELU MLP, untied LM head) with a hand-derived backward pass.
// Checkpoints hold float32; all arithmetic here runs in double.

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "shrinkcast/checkpoint.hpp"

namespace shrinkcast {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::RowVectorXd;

struct BlockParams {
    RowVector ln1_w, ln1_b;
    Matrix qkv_w;  // [d, 3d], columns = q | k | v
    RowVector qkv_b;
    Matrix attn_proj_w;  // [d, d]
    RowVector attn_proj_b;
    RowVector ln2_w, ln2_b;
    Matrix fc_w;  // [d, 4d]
    RowVector fc_b;
    Matrix mlp_proj_w;  // [4d, d]
    RowVector mlp_proj_b;
};

struct ParamView {
    std::string name;
    std::vector<std::uint32_t> shape;
    std::span<double> values;
};

struct Parameters {
    ModelConfig config;
    Matrix tok_emb;  // [vocab, d]
    Matrix pos_emb;  // [max_seq_len, d]
    std::vector<BlockParams> blocks;
    RowVector lnf_w, lnf_b;
    Matrix lm_head;  // [d, vocab]

    static Parameters zeros(const ModelConfig& config);
    /// Throws Errc::invalid_checkpoint if `ckpt` fails validate_against_config.
    static Parameters from_checkpoint(const Checkpoint& ckpt);
    Checkpoint to_checkpoint() const;

    /// Every parameter tensor, named as in the checkpoint, in a fixed order.
    std::vector<ParamView> views();
    std::size_t size() const;

    void set_zero();
    /// this += scale * other (same config required).
    void add_scaled(const Parameters& other, double scale);
};

/// GPT-2 style initialisation: N(0, 0.02) weights, residual projections
/// scaled by 1/sqrt(2 * n_layers), zero biases, unit norm gains.
Parameters init_parameters(const ModelConfig& config, std::uint64_t seed);
Checkpoint init_checkpoint(const ModelConfig& config, std::uint64_t seed);

/// Row-major [batch, seq] token ids.
struct TokenBatch {
    int batch = 0;
    int seq = 0;
    std::vector<int> ids;

    int at(int b, int t) const { return ids[static_cast<std::size_t>(b * seq + t)]; }
};

namespace detail {
struct ForwardCache;
}

/// Rows of every matrix are (batch, position) pairs: row = b * seq + t.
struct ForwardTrace {
    int batch = 0;
    int seq = 0;
    Matrix logits;                     // [batch*seq, vocab]
    std::vector<Matrix> hidden_states;  // n_layers + 1 entries of [batch*seq, d]
    Matrix final_hidden;               // final-norm output, [batch*seq, d]
    std::shared_ptr<const detail::ForwardCache> cache;
};

/// Upstream gradients for a backward pass. Any member may be null.
struct BackwardSeeds {
    const Matrix* d_logits = nullptr;
    const std::vector<Matrix>* d_hidden = nullptr;  // indexed like hidden_states
    const Matrix* d_final_hidden = nullptr;
};

struct Gradients {
    Parameters params;
    Matrix d_input_probs;  // [batch*seq, vocab]; only for soft-input traces
};

class TinyLm {
public:
    explicit TinyLm(Parameters params);
    static TinyLm from_checkpoint(const Checkpoint& ckpt);

    const ModelConfig& config() const { return params_.config; }
    const Parameters& parameters() const { return params_; }
    Parameters& parameters() { return params_; }

    ForwardTrace forward(const TokenBatch& tokens) const;

    /// Input rows are distributions over the vocabulary; the embedding of a
    /// row is probs.row(r) * tok_emb. One-hot rows reproduce forward().
    ForwardTrace forward_soft(int batch, int seq, const Matrix& probs) const;

    Gradients backward(const ForwardTrace& trace, const BackwardSeeds& seeds) const;

private:
    ForwardTrace run_blocks(int batch, int seq, Matrix x0, std::shared_ptr<detail::ForwardCache> cache) const;

    Parameters params_;
};

ForwardTrace forward(const Checkpoint& ckpt, const TokenBatch& tokens);

}  // namespace shrinkcast
