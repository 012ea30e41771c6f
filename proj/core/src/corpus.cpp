// Copyright 2026 The shrinkcast Authors
// SPDX-License-Identifier: Apache-2.0

#include "shrinkcast/corpus.hpp"

#include <cmath>
#include <fstream>

#include "shrinkcast/error.hpp"
#include "shrinkcast/rng.hpp"

namespace shrinkcast {

void write_tokens(std::span<const std::uint16_t> tokens, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot open '" + path.string() + "' for writing");
    std::vector<char> bytes(tokens.size() * 2);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        bytes[2 * i] = static_cast<char>(tokens[i] & 0xff);
        bytes[2 * i + 1] = static_cast<char>(tokens[i] >> 8);
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(Errc::io, "failed writing '" + path.string() + "'");
}

TokenStream read_tokens(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io, "cannot open '" + path.string() + "'");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() % 2 != 0) throw Error(Errc::malformed, "token file '" + path.string() + "' has odd byte length");
    TokenStream tokens(bytes.size() / 2);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        tokens[i] = static_cast<std::uint16_t>(bytes[2 * i] | (bytes[2 * i + 1] << 8));
    }
    return tokens;
}

namespace {

// Lexicon layout (ids).
constexpr int kPeriod = 1;
constexpr int kComma = 2;
constexpr int kAnd = 3;
constexpr int kDetSingular = 4;   // 4..7
constexpr int kDetPlural = 8;     // 8..11
constexpr int kNounSingular = 12;  // 12..51
constexpr int kNounPlural = 52;   // 52..91, plural of noun i is i + 40
constexpr int kNouns = 40;
constexpr int kVerbSingular = 92;  // 92..121
constexpr int kVerbPlural = 122;  // 122..151
constexpr int kVerbs = 30;
constexpr int kAdjective = 152;  // 152..181
constexpr int kAdjectives = 30;
constexpr int kAdverb = 182;  // 182..191
constexpr int kAdverbs = 10;
constexpr int kPreposition = 192;  // 192..199
constexpr int kPrepositions = 8;
static_assert(kPreposition + kPrepositions == kGrammarVocab);

class Sentences {
public:
    Sentences(std::uint64_t seed, int domain) : rng_(derive_seed(seed, 0x6772616d)), domain_(domain) {}

    void emit(TokenStream& out) {
        const bool plural = coin(0.35);
        noun_phrase(out, plural, -1);
        const int verb = zipf(kVerbs);
        out.push_back(static_cast<std::uint16_t>((plural ? kVerbPlural : kVerbSingular) + verb));
        if (coin(0.8)) {
            noun_phrase(out, coin(0.4), verb);
        } else {
            out.push_back(static_cast<std::uint16_t>(kAdverb + zipf(kAdverbs)));
        }
        if (coin(0.3)) {
            out.push_back(static_cast<std::uint16_t>(kPreposition + (verb + domain_) % kPrepositions));
            noun_phrase(out, coin(0.3), -1);
        }
        if (coin(0.15)) {
            out.push_back(kComma);
            out.push_back(kAnd);
            const bool p2 = coin(0.35);
            noun_phrase(out, p2, -1);
            out.push_back(static_cast<std::uint16_t>((p2 ? kVerbPlural : kVerbSingular) + zipf(kVerbs)));
        }
        out.push_back(kPeriod);
    }

private:
    bool coin(double p) { return rng_.uniform01() < p; }

    // Zipf(1) rank over n items, rotated by the domain.
    int zipf(int n) {
        double total = 0.0;
        for (int i = 1; i <= n; ++i) total += 1.0 / i;
        double u = rng_.uniform01() * total;
        for (int i = 1; i <= n; ++i) {
            u -= 1.0 / i;
            if (u < 0.0) return (i - 1 + 7 * domain_) % n;
        }
        return (n - 1 + 7 * domain_) % n;
    }

    // Objects of a verb come from a five-noun neighbourhood it prefers.
    void noun_phrase(TokenStream& out, bool plural, int verb) {
        out.push_back(static_cast<std::uint16_t>((plural ? kDetPlural : kDetSingular) + rng_.uniform_below(4)));
        const int adjectives = coin(0.4) ? (coin(0.3) ? 2 : 1) : 0;
        int noun = verb >= 0 ? (verb * 11 + 3 * domain_ + static_cast<int>(rng_.uniform_below(5))) % kNouns
                             : zipf(kNouns);
        for (int a = 0; a < adjectives; ++a) {
            // Adjectives weakly agree with the noun.
            const int adj = coin(0.6) ? (noun * 3 + a) % kAdjectives : zipf(kAdjectives);
            out.push_back(static_cast<std::uint16_t>(kAdjective + adj));
        }
        out.push_back(static_cast<std::uint16_t>((plural ? kNounPlural : kNounSingular) + noun));
    }

    Rng rng_;
    int domain_;
};

}  // namespace

TokenStream generate_grammar_corpus(std::size_t n_tokens, std::uint64_t seed, int domain) {
    TokenStream out;
    out.reserve(n_tokens + 32);
    Sentences sentences(seed, domain);
    while (out.size() < n_tokens) sentences.emit(out);
    out.resize(n_tokens);
    return out;
}

}  // namespace shrinkcast
