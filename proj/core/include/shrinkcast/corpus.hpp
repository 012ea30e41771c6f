// Copyright 2026 The shrinkcast Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace shrinkcast {

using TokenStream = std::vector<std::uint16_t>;

/// Flat little-endian u16 token file.
void write_tokens(std::span<const std::uint16_t> tokens, const std::filesystem::path& path);
TokenStream read_tokens(const std::filesystem::path& path);

/// Token ids below this value are used by the synthetic grammar.
inline constexpr std::uint16_t kGrammarVocab = 200;
/// Never emitted by the grammar; the adversarial generator uses it to mark
/// positions it is asked to rewrite.
inline constexpr std::uint16_t kMaskToken = 0;

/// Sentences from a small seeded probabilistic grammar with number
/// agreement, verb-specific object preferences and Zipf-skewed word choice.
/// `domain` reshuffles the lexical preferences so a second domain can act
/// as a fine-tuning corpus. Output is exactly `n_tokens` long.
TokenStream generate_grammar_corpus(std::size_t n_tokens, std::uint64_t seed, int domain = 0);

}  // namespace shrinkcast
