// Copyright 2026 The shrinkcast Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace shrinkcast {

/// SplitMix64 (Steele, Lea & Flood). Used to expand a single u64 seed into
/// generator state and to derive independent sub-seeds.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next() noexcept;

private:
    std::uint64_t state_;
};

/// Mixes a base seed with a salt so each phase/stream of an experiment gets
/// its own reproducible seed from the one user-facing seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) noexcept;

/// xoshiro256** seeded through SplitMix64.
///
/// All randomness in the library flows through this type. Every derived
/// quantity (bounded integers, uniform doubles, normals, Gumbel noise) is
/// computed with explicit integer/double arithmetic so results reproduce
/// bit-for-bit across standard libraries, unlike the <random> distributions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) noexcept;

    std::uint64_t next_u64() noexcept;

    /// Uniform integer in [0, bound). `bound` must be > 0. Lemire's
    /// multiply-shift with rejection, so the result is unbiased.
    std::uint64_t uniform_below(std::uint64_t bound) noexcept;

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() noexcept;

    /// Standard normal via Box-Muller (one draw per call, no caching).
    double normal() noexcept;

    /// Standard Gumbel(0, 1) sample.
    double gumbel() noexcept;

private:
    std::uint64_t s_[4];
};

}  // namespace shrinkcast
