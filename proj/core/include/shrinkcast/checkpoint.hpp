// Copyright 2026 The shrinkcast Authors
// SPDX-License-Identifier: Apache-2.0
//
// TCKP container: model architecture plus named float32 tensors.
//
// Layout (little-endian throughout):
//   "TCKP" | u8 version (0x01)
//   u32 n_layers | u32 n_heads | u32 d_model | u32 vocab_size | u32 max_seq_len
//   u32 tensor_count
//   per tensor, sorted by name:
//     u16 name_len | name bytes | u8 rank | rank x u32 dims | u64 data offset
//   u64 data_section_bytes
//   raw float32 data, tensors back to back in header order

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace shrinkcast {

struct ModelConfig {
    std::uint32_t n_layers = 4;
    std::uint32_t n_heads = 4;
    std::uint32_t d_model = 64;
    std::uint32_t vocab_size = 256;
    std::uint32_t max_seq_len = 64;

    std::uint32_t head_dim() const { return d_model / n_heads; }
    std::uint32_t d_ff() const { return 4 * d_model; }

    /// Empty string when valid; otherwise a description of the first problem.
    std::string check() const;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct Tensor {
    std::string name;
    std::vector<std::uint32_t> shape;
    std::vector<float> data;

    std::size_t numel() const;

    friend bool operator==(const Tensor&, const Tensor&) = default;
};

/// A checkpoint is a config plus tensors keyed (and therefore ordered) by name.
struct Checkpoint {
    ModelConfig config;
    std::map<std::string, Tensor, std::less<>> tensors;

    /// Inserts `tensor`; throws Errc::duplicate_name if the name is taken and
    /// Errc::shape_mismatch if product(shape) != data.size().
    void add(Tensor tensor);

    const Tensor& at(std::string_view name) const;
    Tensor& at(std::string_view name);
    bool contains(std::string_view name) const { return tensors.find(name) != tensors.end(); }

    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

// Tensor naming. Per-layer tensors are "blocks.<i>.<suffix>".
namespace names {
inline constexpr std::string_view token_embedding = "tok_emb";
inline constexpr std::string_view position_embedding = "pos_emb";
inline constexpr std::string_view final_norm_weight = "ln_f.weight";
inline constexpr std::string_view final_norm_bias = "ln_f.bias";
inline constexpr std::string_view lm_head = "lm_head.weight";

/// Suffixes of every per-layer tensor, in canonical order.
std::span<const std::string_view> layer_suffixes();

std::string layer_tensor(std::uint32_t layer, std::string_view suffix);

struct LayerRef {
    std::uint32_t layer;
    std::string suffix;
};
/// Splits "blocks.<i>.<suffix>"; nullopt for non-layer names.
std::optional<LayerRef> parse_layer_tensor(std::string_view name);
}  // namespace names

/// Name -> shape of every tensor `config` requires.
std::map<std::string, std::vector<std::uint32_t>, std::less<>> expected_tensors(const ModelConfig& config);

/// Violations of the architecture invariants (missing, unexpected, or
/// misshapen tensors, bad config). Empty iff the checkpoint is complete.
std::vector<std::string> validate_against_config(const Checkpoint& ckpt);

/// Serialized bytes; a pure function of the checkpoint value.
std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes);

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace shrinkcast
