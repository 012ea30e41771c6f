// Copyright 2026 The shrinkcast Authors
// SPDX-License-Identifier: Apache-2.0

#include "shrinkcast/error.hpp"

namespace shrinkcast {

std::string_view errc_name(Errc code) noexcept {
    switch (code) {
        case Errc::io: return "io";
        case Errc::bad_magic: return "bad_magic";
        case Errc::unsupported_version: return "unsupported_version";
        case Errc::truncated: return "truncated";
        case Errc::shape_mismatch: return "shape_mismatch";
        case Errc::duplicate_name: return "duplicate_name";
        case Errc::malformed: return "malformed";
        case Errc::invalid_checkpoint: return "invalid_checkpoint";
        case Errc::invalid_argument: return "invalid_argument";
        case Errc::plan_mismatch: return "plan_mismatch";
        case Errc::token_out_of_range: return "token_out_of_range";
        case Errc::sequence_too_long: return "sequence_too_long";
        case Errc::divergence: return "divergence";
        case Errc::decode: return "decode";
        case Errc::spec: return "spec";
        case Errc::empty_input: return "empty_input";
    }
    return "unknown";
}

}  // namespace shrinkcast
