// Copyright 2026 The shrinkcast Authors
// SPDX-License-Identifier: Apache-2.0
//
// Line-level corpus cleaner. Each record passes, in order: HTML stripping,
// short-record filter, non-alphanumeric ratio filter, exact duplicate filter.
// Survivors keep their input order and are emitted with tags stripped.

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace shrinkcast {

struct CleanOptions {
    std::size_t short_threshold = 5;    // records with fewer tokens are dropped
    double ratio_threshold = 0.10;      // records with a larger ratio are dropped
    double html_strip_threshold = 0.30; // dropped when stripped tags exceed this share
    int jobs = 1;

    std::string check() const;
};

struct CleanStats {
    std::uint64_t input_records = 0;
    std::uint64_t kept_records = 0;
    std::uint64_t dropped_html = 0;
    std::uint64_t dropped_short = 0;
    std::uint64_t dropped_ratio = 0;
    std::uint64_t dropped_duplicate = 0;
    double retention = 0.0;  // kept / input, 1 for empty input

    friend bool operator==(const CleanStats&, const CleanStats&) = default;
};

/// Number of code points, or nullopt for invalid UTF-8.
std::optional<std::size_t> utf8_length(std::string_view text);

struct HtmlStrip {
    std::string text;
    bool dropped = false;
};

/// Removes '<' + 1..100 non-bracket code points + '>' spans, repeating until
/// none remain. `dropped` when removed code points exceed `threshold` of the
/// original count. Expects valid UTF-8.
HtmlStrip strip_html(std::string_view record, double threshold = 0.30);

/// True iff the record has fewer than `threshold` whitespace-separated tokens.
bool is_short(std::string_view record, std::size_t threshold = 5);

/// Share of non-whitespace code points that are neither letters nor decimal
/// digits. 0 when there are no non-whitespace code points.
double nonalnum_ratio(std::string_view record);

/// Trims and collapses whitespace runs to one ASCII space.
std::string normalize_whitespace(std::string_view record);

bool is_unicode_whitespace(char32_t cp);
bool is_unicode_alnum(char32_t cp);

struct CleanResult {
    std::vector<std::string> kept;
    CleanStats stats;
};

/// Cleans in-memory records. Throws Errc::decode naming the 1-based record
/// number of the first invalid record.
CleanResult clean_records(std::span<const std::string> records, const CleanOptions& options = {});

/// Streams LF-delimited records from `in` to `out` in bounded chunks.
CleanStats clean_stream(std::istream& in, std::ostream& out, const CleanOptions& options = {});

std::string format_stats_csv(const CleanStats& stats);

}  // namespace shrinkcast
