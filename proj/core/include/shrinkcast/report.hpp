// Copyright 2026 The shrinkcast Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace shrinkcast {

/// Shortest decimal form that round-trips to the same double; "nan", "inf",
/// "-inf" for non-finite values. Locale-independent.
std::string format_double(double value);

struct ResultRow {
    std::string name;
    std::string strategy;
    std::string method;
    std::string selection;  // comma-separated teacher layers
    std::uint64_t seed = 0;
    double teacher_ppl = 0.0;
    double zero_shot_ppl = 0.0;
    double finetuned_ppl = 0.0;
    double wall_time_s = 0.0;

    friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

/// CSV header plus one line per row, in the given order. Fields containing
/// commas or quotes are quoted.
std::string format_result_csv(const std::vector<ResultRow>& rows, bool include_wall_time = true);
std::vector<ResultRow> parse_result_csv(std::string_view text);

/// Rows sorted by (strategy, name), as CSV and as an aligned text table.
struct Report {
    std::string csv;
    std::string table;
};
Report render_report(std::vector<ResultRow> rows);

/// Writes report.csv and report.txt under `dir`. Throws Errc::empty_input
/// for an empty row set.
void emit_report(const std::vector<ResultRow>& rows, const std::filesystem::path& dir);

}  // namespace shrinkcast
