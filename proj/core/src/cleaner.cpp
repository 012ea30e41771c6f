// Copyright 2026 The shrinkcast Authors
// SPDX-License-Identifier: Apache-2.0

#include "shrinkcast/cleaner.hpp"

#include <sodium.h>

#include <algorithm>
#include <array>
#include <cstring>
#include <istream>
#include <ostream>
#include <thread>
#include <unordered_set>

#include "shrinkcast/error.hpp"
#include "shrinkcast/report.hpp"

namespace shrinkcast {

namespace {

struct CodeRange {
    char32_t lo;
    char32_t hi;
};

constexpr CodeRange kAlnum[] = {
#include "unicode_alnum.inc"
};

constexpr std::size_t kMaxTagBody = 100;
constexpr std::size_t kChunkRecords = 1 << 16;

// Decodes one code point at `pos`; returns 0 length on malformed input.
std::pair<char32_t, std::size_t> decode(std::string_view s, std::size_t pos) {
    const auto b0 = static_cast<unsigned char>(s[pos]);
    if (b0 < 0x80) return {b0, 1};
    std::size_t len;
    char32_t cp;
    char32_t min;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2, cp = b0 & 0x1F, min = 0x80;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3, cp = b0 & 0x0F, min = 0x800;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4, cp = b0 & 0x07, min = 0x10000;
    } else {
        return {0, 0};
    }
    if (pos + len > s.size()) return {0, 0};
    for (std::size_t i = 1; i < len; ++i) {
        const auto b = static_cast<unsigned char>(s[pos + i]);
        if ((b & 0xC0) != 0x80) return {0, 0};
        cp = (cp << 6) | (b & 0x3F);
    }
    if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return {0, 0};
    return {cp, len};
}

template <typename F>
void for_each_code_point(std::string_view s, F&& fn) {
    for (std::size_t pos = 0; pos < s.size();) {
        auto [cp, len] = decode(s, pos);
        if (len == 0) len = 1, cp = 0xFFFD;
        fn(cp);
        pos += len;
    }
}

// One left-to-right pass. Returns the number of code points removed.
std::size_t strip_once(std::string_view in, std::string& out) {
    out.clear();
    std::size_t removed = 0;
    std::size_t pos = 0;
    while (pos < in.size()) {
        if (in[pos] == '<') {
            std::size_t scan = pos + 1;
            std::size_t body = 0;
            bool closed = false;
            while (scan < in.size() && body <= kMaxTagBody) {
                const char c = in[scan];
                if (c == '<') break;
                if (c == '>') {
                    closed = body >= 1;
                    break;
                }
                auto [cp, len] = decode(in, scan);
                scan += len == 0 ? 1 : len;
                ++body;
            }
            if (closed && body <= kMaxTagBody) {
                removed += body + 2;
                pos = scan + 1;
                continue;
            }
        }
        out.push_back(in[pos]);
        ++pos;
    }
    return removed;
}

using Digest = std::array<unsigned char, 16>;

struct DigestHash {
    std::size_t operator()(const Digest& d) const noexcept {
        std::size_t h;
        std::memcpy(&h, d.data(), sizeof h);
        return h;
    }
};

Digest digest_of(std::string_view text) {
    Digest d;
    crypto_generichash(d.data(), d.size(), reinterpret_cast<const unsigned char*>(text.data()), text.size(), nullptr,
                       0);
    return d;
}

enum class Verdict : std::uint8_t { Candidate, Html, Short, Ratio };

struct Screened {
    Verdict verdict = Verdict::Candidate;
    std::string text;
    Digest digest{};
    bool invalid = false;
};

Screened screen(std::string_view record, const CleanOptions& options) {
    Screened s;
    if (!utf8_length(record)) {
        s.invalid = true;
        return s;
    }
    HtmlStrip stripped = strip_html(record, options.html_strip_threshold);
    if (stripped.dropped) {
        s.verdict = Verdict::Html;
        return s;
    }
    if (is_short(stripped.text, options.short_threshold)) {
        s.verdict = Verdict::Short;
        return s;
    }
    if (nonalnum_ratio(stripped.text) > options.ratio_threshold) {
        s.verdict = Verdict::Ratio;
        return s;
    }
    s.digest = digest_of(normalize_whitespace(stripped.text));
    s.text = std::move(stripped.text);
    return s;
}

class Cleaner {
public:
    explicit Cleaner(const CleanOptions& options) : options_(options) {
        if (auto problem = options.check(); !problem.empty()) throw Error(Errc::invalid_argument, problem);
        if (sodium_init() < 0) throw Error(Errc::io, "libsodium initialisation failed");
    }

    // Processes one chunk whose first record has 1-based number `first_record`.
    template <typename Emit>
    void process(std::span<const std::string> records, std::uint64_t first_record, Emit&& emit) {
        std::vector<Screened> screened(records.size());
        const std::size_t workers =
            std::min<std::size_t>(static_cast<std::size_t>(options_.jobs), std::max<std::size_t>(records.size(), 1));
        if (workers <= 1) {
            for (std::size_t i = 0; i < records.size(); ++i) screened[i] = screen(records[i], options_);
        } else {
            std::vector<std::jthread> threads;
            const std::size_t per = (records.size() + workers - 1) / workers;
            for (std::size_t w = 0; w < workers; ++w) {
                const std::size_t lo = w * per;
                const std::size_t hi = std::min(records.size(), lo + per);
                threads.emplace_back([&, lo, hi] {
                    for (std::size_t i = lo; i < hi; ++i) screened[i] = screen(records[i], options_);
                });
            }
        }
        for (std::size_t i = 0; i < screened.size(); ++i) {
            if (screened[i].invalid) {
                throw Error(Errc::decode, "record " + std::to_string(first_record + i) + ": invalid UTF-8");
            }
        }
        for (auto& s : screened) {
            ++stats_.input_records;
            switch (s.verdict) {
                case Verdict::Html: ++stats_.dropped_html; continue;
                case Verdict::Short: ++stats_.dropped_short; continue;
                case Verdict::Ratio: ++stats_.dropped_ratio; continue;
                case Verdict::Candidate: break;
            }
            if (!seen_.insert(s.digest).second) {
                ++stats_.dropped_duplicate;
                continue;
            }
            ++stats_.kept_records;
            emit(std::move(s.text));
        }
    }

    CleanStats finish() {
        stats_.retention = stats_.input_records == 0 ? 1.0
                                                     : static_cast<double>(stats_.kept_records) /
                                                           static_cast<double>(stats_.input_records);
        return stats_;
    }

private:
    CleanOptions options_;
    CleanStats stats_;
    std::unordered_set<Digest, DigestHash> seen_;
};

}  // namespace

std::string CleanOptions::check() const {
    if (short_threshold == 0) return "short threshold must be >= 1";
    if (!(ratio_threshold >= 0.0 && ratio_threshold <= 1.0)) return "ratio threshold must lie in [0, 1]";
    if (!(html_strip_threshold >= 0.0 && html_strip_threshold <= 1.0)) return "html strip threshold must lie in [0, 1]";
    if (jobs < 1) return "jobs must be >= 1";
    return {};
}

std::optional<std::size_t> utf8_length(std::string_view text) {
    std::size_t n = 0;
    for (std::size_t pos = 0; pos < text.size(); ++n) {
        const auto [cp, len] = decode(text, pos);
        if (len == 0) return std::nullopt;
        pos += len;
    }
    return n;
}

bool is_unicode_whitespace(char32_t cp) {
    return (cp >= 0x09 && cp <= 0x0D) || cp == 0x20 || cp == 0x85 || cp == 0xA0 || cp == 0x1680 ||
           (cp >= 0x2000 && cp <= 0x200A) || cp == 0x2028 || cp == 0x2029 || cp == 0x202F || cp == 0x205F ||
           cp == 0x3000;
}

bool is_unicode_alnum(char32_t cp) {
    const auto it = std::upper_bound(std::begin(kAlnum), std::end(kAlnum), cp,
                                     [](char32_t v, const CodeRange& r) { return v < r.lo; });
    return it != std::begin(kAlnum) && cp <= std::prev(it)->hi;
}

HtmlStrip strip_html(std::string_view record, double threshold) {
    const std::size_t original = utf8_length(record).value_or(record.size());
    std::size_t removed = 0;
    std::string current(record);
    std::string next;
    while (true) {
        const std::size_t r = strip_once(current, next);
        if (r == 0) break;
        removed += r;
        current.swap(next);
    }
    HtmlStrip out;
    out.dropped = original > 0 && static_cast<double>(removed) > threshold * static_cast<double>(original);
    out.text = std::move(current);
    return out;
}

bool is_short(std::string_view record, std::size_t threshold) {
    std::size_t tokens = 0;
    bool in_token = false;
    for_each_code_point(record, [&](char32_t cp) {
        const bool ws = is_unicode_whitespace(cp);
        if (!ws && !in_token) ++tokens;
        in_token = !ws;
    });
    return tokens < threshold;
}

double nonalnum_ratio(std::string_view record) {
    std::size_t visible = 0;
    std::size_t other = 0;
    for_each_code_point(record, [&](char32_t cp) {
        if (is_unicode_whitespace(cp)) return;
        ++visible;
        if (!is_unicode_alnum(cp)) ++other;
    });
    return visible == 0 ? 0.0 : static_cast<double>(other) / static_cast<double>(visible);
}

std::string normalize_whitespace(std::string_view record) {
    std::string out;
    out.reserve(record.size());
    bool pending_space = false;
    for (std::size_t pos = 0; pos < record.size();) {
        auto [cp, len] = decode(record, pos);
        if (len == 0) len = 1, cp = 0xFFFD;
        if (is_unicode_whitespace(cp)) {
            pending_space = !out.empty();
        } else {
            if (pending_space) out.push_back(' ');
            pending_space = false;
            out.append(record.substr(pos, len));
        }
        pos += len;
    }
    return out;
}

CleanResult clean_records(std::span<const std::string> records, const CleanOptions& options) {
    Cleaner cleaner(options);
    CleanResult result;
    cleaner.process(records, 1, [&](std::string text) { result.kept.push_back(std::move(text)); });
    result.stats = cleaner.finish();
    return result;
}

CleanStats clean_stream(std::istream& in, std::ostream& out, const CleanOptions& options) {
    Cleaner cleaner(options);
    std::vector<std::string> chunk;
    std::uint64_t next_record = 1;
    std::string line;
    auto flush = [&] {
        cleaner.process(chunk, next_record, [&](std::string text) { out << text << '\n'; });
        next_record += chunk.size();
        chunk.clear();
    };
    while (std::getline(in, line)) {
        chunk.push_back(std::move(line));
        if (chunk.size() == kChunkRecords) flush();
    }
    if (in.bad()) throw Error(Errc::io, "read failure after record " + std::to_string(next_record + chunk.size() - 1));
    flush();
    if (!out) throw Error(Errc::io, "write failure");
    return cleaner.finish();
}

std::string format_stats_csv(const CleanStats& s) {
    std::string out =
        "input_records,kept_records,dropped_html,dropped_short,dropped_ratio,dropped_duplicate,retention\n";
    for (auto v : {s.input_records, s.kept_records, s.dropped_html, s.dropped_short, s.dropped_ratio,
                   s.dropped_duplicate}) {
        out += std::to_string(v) + ",";
    }
    out += format_double(s.retention) + "\n";
    return out;
}

}  // namespace shrinkcast
