// Copyright 2026 The shrinkcast Authors
// SPDX-License-Identifier: Apache-2.0

#include "shrinkcast/planner.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <sstream>

#include "shrinkcast/error.hpp"
#include "shrinkcast/rng.hpp"

namespace shrinkcast {

namespace {

[[noreturn]] void reject(Strategy s, int n, int k, const std::string& why) {
    throw Error(Errc::invalid_argument, std::string(strategy_name(s)) + "(n=" + std::to_string(n) +
                                            ", k=" + std::to_string(k) + "): " + why);
}

LayerPlan make(Strategy s, int n, int k, std::vector<int> selection) {
    return LayerPlan{n, k, std::move(selection), s, std::nullopt};
}

// k points floor-interpolated across [base, base + width - 1].
std::vector<int> interpolate(int base, int width, int k) {
    std::vector<int> out(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        out[static_cast<std::size_t>(i)] =
            base + static_cast<int>(static_cast<long long>(i) * (width - 1) / (k - 1));
    }
    return out;
}

template <typename T>
T parse_number(std::string_view token, const char* what) {
    T value{};
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
        throw Error(Errc::invalid_argument, std::string("bad ") + what + " '" + std::string(token) + "' in plan line");
    }
    return value;
}

}  // namespace

std::string_view strategy_name(Strategy s) {
    switch (s) {
        case Strategy::Uniform: return "uniform";
        case Strategy::UniformVariant2: return "uniform-2";
        case Strategy::PseudoUniform: return "pseudo-uniform";
        case Strategy::BottomHalf: return "bottom-half";
        case Strategy::TopHalf: return "top-half";
        case Strategy::Random: return "random";
    }
    return "?";
}

Strategy parse_strategy(std::string_view name) {
    for (auto s : {Strategy::Uniform, Strategy::UniformVariant2, Strategy::PseudoUniform, Strategy::BottomHalf,
                   Strategy::TopHalf, Strategy::Random}) {
        if (strategy_name(s) == name) return s;
    }
    throw Error(Errc::invalid_argument, "unknown strategy '" + std::string(name) + "'");
}

LayerPlan uniform(int n, int k) {
    if (k < 2 || k > n) reject(Strategy::Uniform, n, k, "requires 2 <= k <= n");
    const int step = (n - 1) / (k - 1);
    std::vector<int> sel(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) sel[static_cast<std::size_t>(i)] = i * step;
    return make(Strategy::Uniform, n, k, std::move(sel));
}

LayerPlan uniform_variant2(int n, int k) {
    if (k < 2 || k > n) reject(Strategy::UniformVariant2, n, k, "requires 2 <= k <= n");
    const int step = (n + k - 2) / (k - 1);  // ceil(n / (k-1))
    if (static_cast<long long>(k - 2) * step >= n - 2) {
        reject(Strategy::UniformVariant2, n, k, "evenly spaced prefix collides with final layer n-2");
    }
    std::vector<int> sel;
    sel.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i + 1 < k; ++i) sel.push_back(i * step);
    sel.push_back(n - 2);
    return make(Strategy::UniformVariant2, n, k, std::move(sel));
}

LayerPlan pseudo_uniform(int n, int k) {
    if (k < 1 || n <= k) reject(Strategy::PseudoUniform, n, k, "requires n > k >= 1");
    if (n % k != 0) reject(Strategy::PseudoUniform, n, k, "requires n mod k == 0");
    if (n % 2 != 0) reject(Strategy::PseudoUniform, n, k, "requires n even");
    // Each pass takes one layer from each end, so odd k would yield k+1 layers.
    if (k % 2 != 0) reject(Strategy::PseudoUniform, n, k, "requires k even");

    const int step = n / k;
    std::vector<int> sel;
    for (int start = 0, end = n - 1; start <= end; start += step, end -= step) {
        sel.push_back(start);
        sel.push_back(end);
    }
    std::sort(sel.begin(), sel.end());
    return make(Strategy::PseudoUniform, n, k, std::move(sel));
}

LayerPlan bottom_half(int n, int k) {
    const int window = n / 2;
    if (k < 2 || k > window) reject(Strategy::BottomHalf, n, k, "requires 2 <= k <= floor(n/2)");
    return make(Strategy::BottomHalf, n, k, interpolate(0, window, k));
}

LayerPlan top_half(int n, int k) {
    const int base = n / 2;
    if (k < 2 || k > n - base) reject(Strategy::TopHalf, n, k, "requires 2 <= k <= ceil(n/2)");
    return make(Strategy::TopHalf, n, k, interpolate(base, n - base, k));
}

LayerPlan random_k(int n, int k, std::uint64_t seed) {
    if (k < 1 || k > n) reject(Strategy::Random, n, k, "requires 1 <= k <= n");
    std::vector<int> pool(static_cast<std::size_t>(n));
    std::iota(pool.begin(), pool.end(), 0);
    Rng rng(seed);
    for (int i = 0; i < k; ++i) {
        const auto j = static_cast<std::size_t>(i) + rng.uniform_below(static_cast<std::uint64_t>(n - i));
        std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
    }
    pool.resize(static_cast<std::size_t>(k));
    std::sort(pool.begin(), pool.end());
    auto plan = make(Strategy::Random, n, k, std::move(pool));
    plan.seed = seed;
    return plan;
}

LayerPlan make_plan(Strategy strategy, int n, int k, std::uint64_t seed) {
    switch (strategy) {
        case Strategy::Uniform: return uniform(n, k);
        case Strategy::UniformVariant2: return uniform_variant2(n, k);
        case Strategy::PseudoUniform: return pseudo_uniform(n, k);
        case Strategy::BottomHalf: return bottom_half(n, k);
        case Strategy::TopHalf: return top_half(n, k);
        case Strategy::Random: return random_k(n, k, seed);
    }
    throw Error(Errc::invalid_argument, "unknown strategy");
}

std::vector<std::string> validate_plan(const LayerPlan& plan) {
    std::vector<std::string> violations;
    const int n = plan.teacher_layers;
    const int k = plan.student_layers;
    if (n < 1) violations.push_back("teacher_layers must be positive");
    if (k < 1) violations.push_back("student_layers must be positive");
    if (k > n) violations.push_back("student_layers exceeds teacher_layers");
    if (static_cast<int>(plan.selection.size()) != k) {
        violations.push_back("selection has " + std::to_string(plan.selection.size()) + " entries, expected " +
                             std::to_string(k));
    }
    for (std::size_t i = 0; i < plan.selection.size(); ++i) {
        const int idx = plan.selection[i];
        if (idx < 0 || idx >= n) {
            violations.push_back("index " + std::to_string(idx) + " at position " + std::to_string(i) +
                                 " out of range [0," + std::to_string(n - 1) + "]");
        }
        if (i > 0) {
            const int prev = plan.selection[i - 1];
            if (idx == prev) {
                violations.push_back("duplicate index " + std::to_string(idx) + " at position " + std::to_string(i));
            } else if (idx < prev) {
                violations.push_back("index " + std::to_string(idx) + " at position " + std::to_string(i) +
                                     " breaks ascending order");
            }
        }
    }
    if ((plan.strategy == Strategy::Random) != plan.seed.has_value()) {
        violations.push_back("seed must be present exactly for the random strategy");
    }
    return violations;
}

std::string format_plan(const LayerPlan& plan) {
    std::ostringstream out;
    out << strategy_name(plan.strategy) << ' ' << plan.teacher_layers << ' ' << plan.student_layers << ' ';
    for (std::size_t i = 0; i < plan.selection.size(); ++i) {
        if (i) out << ',';
        out << plan.selection[i];
    }
    if (plan.seed) out << ' ' << *plan.seed;
    return out.str();
}

LayerPlan parse_plan(std::string_view line) {
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.remove_suffix(1);
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (pos < line.size()) {
        const auto next = line.find(' ', pos);
        const auto field = line.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos);
        if (field.empty()) throw Error(Errc::invalid_argument, "plan line has consecutive spaces");
        fields.push_back(field);
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    if (fields.size() != 4 && fields.size() != 5) {
        throw Error(Errc::invalid_argument, "plan line must have 4 or 5 space-separated fields");
    }
    LayerPlan plan;
    plan.strategy = parse_strategy(fields[0]);
    plan.teacher_layers = parse_number<int>(fields[1], "teacher layer count");
    plan.student_layers = parse_number<int>(fields[2], "student layer count");
    std::string_view list = fields[3];
    while (true) {
        const auto comma = list.find(',');
        plan.selection.push_back(parse_number<int>(list.substr(0, comma), "layer index"));
        if (comma == std::string_view::npos) break;
        list.remove_prefix(comma + 1);
    }
    if (fields.size() == 5) plan.seed = parse_number<std::uint64_t>(fields[4], "seed");
    if (auto violations = validate_plan(plan); !violations.empty()) {
        throw Error(Errc::invalid_argument, "invalid plan: " + violations.front());
    }
    return plan;
}

}  // namespace shrinkcast
