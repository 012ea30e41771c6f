// Copyright 2026 The shrinkcast Authors
// SPDX-License-Identifier: Apache-2.0

#include "shrinkcast/report.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "shrinkcast/error.hpp"

namespace shrinkcast {

namespace {

constexpr std::array<std::string_view, 9> kColumns = {
    "name", "strategy", "method", "selection", "seed", "teacher_ppl", "zero_shot_ppl", "finetuned_ppl", "wall_time_s",
};

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (quoted) throw Error(Errc::malformed, "unterminated quote in CSV line");
    fields.push_back(std::move(cur));
    return fields;
}

double parse_double(const std::string& s) {
    if (s == "nan") return std::nan("");
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw Error(Errc::malformed, "bad number '" + s + "'");
    return v;
}

std::string fixed(double v, int digits) {
    if (!std::isfinite(v)) return format_double(v);
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed, digits);
    return std::string(buf.data(), ptr);
}

}  // namespace

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), ptr);
}

std::string format_result_csv(const std::vector<ResultRow>& rows, bool include_wall_time) {
    std::ostringstream out;
    const std::size_t columns = include_wall_time ? kColumns.size() : kColumns.size() - 1;
    for (std::size_t i = 0; i < columns; ++i) out << (i ? "," : "") << kColumns[i];
    out << '\n';
    for (const auto& r : rows) {
        out << csv_field(r.name) << ',' << csv_field(r.strategy) << ',' << csv_field(r.method) << ','
            << csv_field(r.selection) << ',' << r.seed << ',' << format_double(r.teacher_ppl) << ','
            << format_double(r.zero_shot_ppl) << ',' << format_double(r.finetuned_ppl);
        if (include_wall_time) out << ',' << format_double(r.wall_time_s);
        out << '\n';
    }
    return out.str();
}

std::vector<ResultRow> parse_result_csv(std::string_view text) {
    std::vector<ResultRow> rows;
    bool header = true;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (header) {
            header = false;
            if (fields.size() < kColumns.size() - 1 || fields[0] != "name") {
                throw Error(Errc::malformed, "result CSV header not recognised");
            }
            continue;
        }
        if (fields.size() != kColumns.size() && fields.size() != kColumns.size() - 1) {
            throw Error(Errc::malformed, "result CSV row has " + std::to_string(fields.size()) + " fields");
        }
        ResultRow r;
        r.name = fields[0];
        r.strategy = fields[1];
        r.method = fields[2];
        r.selection = fields[3];
        auto [ptr, ec] = std::from_chars(fields[4].data(), fields[4].data() + fields[4].size(), r.seed);
        if (ec != std::errc{} || ptr != fields[4].data() + fields[4].size()) {
            throw Error(Errc::malformed, "bad seed '" + fields[4] + "'");
        }
        r.teacher_ppl = parse_double(fields[5]);
        r.zero_shot_ppl = parse_double(fields[6]);
        r.finetuned_ppl = parse_double(fields[7]);
        if (fields.size() == kColumns.size()) r.wall_time_s = parse_double(fields[8]);
        rows.push_back(std::move(r));
    }
    return rows;
}

Report render_report(std::vector<ResultRow> rows) {
    if (rows.empty()) throw Error(Errc::empty_input, "report needs at least one result row");
    std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
        return std::tie(a.strategy, a.name) < std::tie(b.strategy, b.name);
    });

    Report report;
    report.csv = format_result_csv(rows);

    std::vector<std::vector<std::string>> cells;
    cells.emplace_back(kColumns.begin(), kColumns.end());
    for (const auto& r : rows) {
        cells.push_back({r.name, r.strategy, r.method, r.selection, std::to_string(r.seed), fixed(r.teacher_ppl, 4),
                         fixed(r.zero_shot_ppl, 4), fixed(r.finetuned_ppl, 4), fixed(r.wall_time_s, 2)});
    }
    std::vector<std::size_t> width(kColumns.size(), 0);
    for (const auto& row : cells) {
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    }
    constexpr std::size_t kFirstNumeric = 4;
    std::ostringstream out;
    auto emit_row = [&](const std::vector<std::string>& row) {
        std::string line;
        for (std::size_t c = 0; c < row.size(); ++c) {
            const std::string pad(width[c] - row[c].size(), ' ');
            if (c) line += "  ";
            line += c >= kFirstNumeric ? pad + row[c] : row[c] + pad;
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out << line << '\n';
    };
    emit_row(cells[0]);
    std::string rule;
    for (std::size_t c = 0; c < width.size(); ++c) rule += (c ? "  " : "") + std::string(width[c], '-');
    out << rule << '\n';
    for (std::size_t i = 1; i < cells.size(); ++i) emit_row(cells[i]);
    report.table = out.str();
    return report;
}

void emit_report(const std::vector<ResultRow>& rows, const std::filesystem::path& dir) {
    const Report report = render_report(rows);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    for (const auto& [file, text] : {std::pair{"report.csv", &report.csv}, std::pair{"report.txt", &report.table}}) {
        std::ofstream out(dir / file, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(Errc::io, "cannot write '" + (dir / file).string() + "'");
        out << *text;
    }
}

}  // namespace shrinkcast
