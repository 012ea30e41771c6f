// Copyright 2026 The shrinkcast Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace shrinkcast {

enum class Errc {
    io,
    bad_magic,
    unsupported_version,
    truncated,
    shape_mismatch,
    duplicate_name,
    malformed,
    invalid_checkpoint,
    invalid_argument,
    plan_mismatch,
    token_out_of_range,
    sequence_too_long,
    divergence,
    decode,
    spec,
    empty_input,
};

/// Stable lowercase identifier, used in CLI error lines.
std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace shrinkcast
