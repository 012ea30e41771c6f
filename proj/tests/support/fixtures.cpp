// Copyright 2026 The shrinkcast Authors
// SPDX-License-Identifier: Apache-2.0

#include "support/fixtures.hpp"

#include <bit>
#include <fstream>
#include <iterator>
#include <set>

namespace shrinkcast::testing {

std::filesystem::path fixture_path(const std::string& name) { return std::filesystem::path(SHRINKCAST_FIXTURE_DIR) / name; }

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::filesystem::path scratch_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() / ("shrinkcast_test_" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

Checkpoint random_container(Rng& rng) {
    Checkpoint c;
    c.config.n_layers = 1 + static_cast<std::uint32_t>(rng.uniform_below(8));
    c.config.n_heads = 1 + static_cast<std::uint32_t>(rng.uniform_below(4));
    c.config.d_model = c.config.n_heads * (1 + static_cast<std::uint32_t>(rng.uniform_below(8)));
    c.config.vocab_size = 2 + static_cast<std::uint32_t>(rng.uniform_below(300));
    c.config.max_seq_len = 1 + static_cast<std::uint32_t>(rng.uniform_below(128));
    const int count = 1 + static_cast<int>(rng.uniform_below(6));
    std::set<std::string> names;
    while (static_cast<int>(names.size()) < count) {
        std::string name;
        const int len = 1 + static_cast<int>(rng.uniform_below(20));
        for (int i = 0; i < len; ++i) name.push_back(static_cast<char>('.' + rng.uniform_below(77)));
        names.insert(name);
    }
    for (const auto& name : names) {
        Tensor t;
        t.name = name;
        const int rank = 1 + static_cast<int>(rng.uniform_below(3));
        for (int r = 0; r < rank; ++r) t.shape.push_back(1 + static_cast<std::uint32_t>(rng.uniform_below(5)));
        t.data.resize(t.numel());
        for (auto& v : t.data) v = std::bit_cast<float>(static_cast<std::uint32_t>(rng.next_u64()));
        c.add(std::move(t));
    }
    return c;
}

ModelConfig small_config(std::uint32_t layers) {
    ModelConfig c;
    c.n_layers = layers;
    c.n_heads = 2;
    c.d_model = 16;
    c.vocab_size = 23;
    c.max_seq_len = 12;
    return c;
}

}  // namespace shrinkcast::testing

namespace shrinkcast::testing {

bool bitwise_equal(const Checkpoint& a, const Checkpoint& b) {
    if (!(a.config == b.config) || a.tensors.size() != b.tensors.size()) return false;
    for (auto ia = a.tensors.begin(), ib = b.tensors.begin(); ia != a.tensors.end(); ++ia, ++ib) {
        const Tensor& x = ia->second;
        const Tensor& y = ib->second;
        if (x.name != y.name || x.shape != y.shape || x.data.size() != y.data.size()) return false;
        for (std::size_t i = 0; i < x.data.size(); ++i) {
            if (std::bit_cast<std::uint32_t>(x.data[i]) != std::bit_cast<std::uint32_t>(y.data[i])) return false;
        }
    }
    return true;
}

}  // namespace shrinkcast::testing
