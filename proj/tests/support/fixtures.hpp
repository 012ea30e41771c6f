// Copyright 2026 The shrinkcast Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "shrinkcast/checkpoint.hpp"
#include "shrinkcast/error.hpp"
#include "shrinkcast/rng.hpp"

namespace shrinkcast::testing {

std::filesystem::path fixture_path(const std::string& name);
std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& tag);

/// Container-level random checkpoint: 1..6 tensors with random names, ranks
/// 1..3, dims 1..5 and arbitrary float bit patterns (NaNs included).
Checkpoint random_container(Rng& rng);

/// Small model config used where speed matters more than the default size.
ModelConfig small_config(std::uint32_t layers = 2);

/// Runs `fn` and returns the Errc it threw; fails loudly when nothing or a
/// foreign exception is thrown.
template <typename F>
Errc error_code_of(F&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    throw std::runtime_error("expected shrinkcast::Error");
}

}  // namespace shrinkcast::testing

namespace shrinkcast::testing {

/// Same config, names, shapes and float bit patterns.
bool bitwise_equal(const Checkpoint& a, const Checkpoint& b);

}  // namespace shrinkcast::testing
