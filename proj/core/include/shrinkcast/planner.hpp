// Copyright 2026 The shrinkcast Authors
// SPDX-License-Identifier: Apache-2.0
//
// Teacher-layer selection for depth truncation. Each strategy maps
// (teacher layers n, student layers k) to k ascending teacher indices.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace shrinkcast {

enum class Strategy { Uniform, UniformVariant2, PseudoUniform, BottomHalf, TopHalf, Random };

/// Canonical names: "uniform", "uniform-2", "pseudo-uniform", "bottom-half",
/// "top-half", "random".
std::string_view strategy_name(Strategy s);
Strategy parse_strategy(std::string_view name);

struct LayerPlan {
    int teacher_layers = 0;
    int student_layers = 0;
    std::vector<int> selection;
    Strategy strategy = Strategy::Uniform;
    std::optional<std::uint64_t> seed;  // set iff strategy == Random

    friend bool operator==(const LayerPlan&, const LayerPlan&) = default;
};

/// selection[i] = i * floor((n-1)/(k-1)).
LayerPlan uniform(int n, int k);

/// Evenly spaced with step ceil(n/(k-1)), last element pinned to n-2.
LayerPlan uniform_variant2(int n, int k);

/// Alternates first/last layers inward with step n/k; always keeps layers
/// 0 and n-1. Requires n > k, n % k == 0, n even, k even.
LayerPlan pseudo_uniform(int n, int k);

/// Floor-interpolates k points over the lower half window [0, floor(n/2)-1].
LayerPlan bottom_half(int n, int k);

/// Floor-interpolates k points over [floor(n/2), n-1].
LayerPlan top_half(int n, int k);

/// k distinct indices drawn without replacement (partial Fisher-Yates over
/// Rng(seed)), returned ascending.
LayerPlan random_k(int n, int k, std::uint64_t seed);

/// Dispatches on `strategy`; `seed` is only used by Random.
LayerPlan make_plan(Strategy strategy, int n, int k, std::uint64_t seed = 0);

std::vector<std::string> validate_plan(const LayerPlan& plan);

/// "strategy n k i0,i1,...,ik-1 [seed]"
std::string format_plan(const LayerPlan& plan);
LayerPlan parse_plan(std::string_view line);

}  // namespace shrinkcast
