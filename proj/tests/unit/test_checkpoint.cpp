// Copyright 2026 The shrinkcast Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <bit>
#include <cstring>

#include "shrinkcast/checkpoint.hpp"
#include "shrinkcast/model.hpp"
#include "support/fixtures.hpp"

using namespace shrinkcast;
using namespace shrinkcast::testing;

namespace {

void put_u32(std::vector<std::uint8_t>& b, std::size_t at, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
}

void put_u64(std::vector<std::uint8_t>& b, std::size_t at, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) b[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
}

// Header offsets of the one-tensor fixture: magic(4) version(1) config(20)
// count(4) name_len(2) "w"(1) rank(1) dims(8) offset(8) data_len(8).
constexpr std::size_t kFirstDim = 4 + 1 + 20 + 4 + 2 + 1 + 1;
constexpr std::size_t kDataLen = kFirstDim + 8 + 8;

}  // namespace

TEST_CASE("golden one-tensor fixture decodes to the scripted values") {
    const Checkpoint c = read_checkpoint(fixture_path("one_tensor.tckp"));
    CHECK(c.config.n_layers == 1);
    CHECK(c.config.n_heads == 1);
    CHECK(c.config.d_model == 2);
    CHECK(c.config.vocab_size == 3);
    CHECK(c.config.max_seq_len == 4);
    REQUIRE(c.tensors.size() == 1);
    const Tensor& w = c.at("w");
    CHECK(w.shape == std::vector<std::uint32_t>{2, 3});
    const std::vector<float> expected = {1.0f, -2.5f, 0.125f, 3.0e-3f, 65504.0f, -0.0f};
    REQUIRE(w.data.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
        CHECK(std::bit_cast<std::uint32_t>(w.data[i]) == std::bit_cast<std::uint32_t>(expected[i]));
    }
}

TEST_CASE("serializer reproduces the independently written fixtures byte for byte") {
    for (const char* name : {"one_tensor.tckp", "tiny_model.tckp"}) {
        const auto bytes = read_bytes(fixture_path(name));
        CHECK(serialize_checkpoint(deserialize_checkpoint(bytes)) == bytes);
    }
}

TEST_CASE("tiny fixture is a complete model") {
    const Checkpoint c = read_checkpoint(fixture_path("tiny_model.tckp"));
    CHECK(validate_against_config(c).empty());
    CHECK(c.config.n_layers == 2);
}

TEST_CASE("randomized containers round-trip bitwise") {
    Rng rng(2024);
    const auto dir = scratch_dir("ckpt_roundtrip");
    for (int i = 0; i < 100; ++i) {
        const Checkpoint c = random_container(rng);
        const auto bytes = serialize_checkpoint(c);
        CHECK(bitwise_equal(deserialize_checkpoint(bytes), c));
        CHECK(serialize_checkpoint(c) == bytes);
        const auto path = dir / "c.tckp";
        write_checkpoint(c, path);
        CHECK(bitwise_equal(read_checkpoint(path), c));
    }
}

TEST_CASE("corrupted headers produce the designated errors") {
    const auto good = read_bytes(fixture_path("one_tensor.tckp"));

    SUBCASE("magic") {
        for (std::size_t i = 0; i < 4; ++i) {
            auto b = good;
            b[i] ^= 0x20;
            CHECK(error_code_of([&] { deserialize_checkpoint(b); }) == Errc::bad_magic);
        }
        CHECK(error_code_of([&] { deserialize_checkpoint(std::vector<std::uint8_t>{'T', 'C'}); }) ==
              Errc::bad_magic);
    }
    SUBCASE("version") {
        auto b = good;
        b[4] = 2;
        CHECK(error_code_of([&] { deserialize_checkpoint(b); }) == Errc::unsupported_version);
    }
    SUBCASE("every proper prefix is truncated") {
        for (std::size_t len = 5; len < good.size(); ++len) {
            std::vector<std::uint8_t> b(good.begin(), good.begin() + static_cast<std::ptrdiff_t>(len));
            CHECK(error_code_of([&] { deserialize_checkpoint(b); }) == Errc::truncated);
        }
    }
    SUBCASE("declared data length beyond the file") {
        auto b = good;
        put_u64(b, kDataLen, 28);
        CHECK(error_code_of([&] { deserialize_checkpoint(b); }) == Errc::truncated);
    }
    SUBCASE("shape disagrees with data span") {
        auto b = good;
        put_u32(b, kFirstDim, 3);
        CHECK(error_code_of([&] { deserialize_checkpoint(b); }) == Errc::shape_mismatch);
    }
    SUBCASE("duplicate name") {
        Checkpoint c;
        c.config = {1, 1, 2, 3, 4};
        c.add(Tensor{"a", {1}, {1.0f}});
        c.add(Tensor{"b", {1}, {2.0f}});
        auto b = serialize_checkpoint(c);
        // Second entry starts after the first: len(2) "a"(1) rank(1) dim(4) offset(8).
        const std::size_t second_name = 4 + 1 + 20 + 4 + 2 + 1 + 1 + 4 + 8 + 2;
        REQUIRE(b[second_name] == 'b');
        b[second_name] = 'a';
        CHECK(error_code_of([&] { deserialize_checkpoint(b); }) == Errc::duplicate_name);
    }
    SUBCASE("trailing bytes") {
        auto b = good;
        b.push_back(0);
        CHECK(error_code_of([&] { deserialize_checkpoint(b); }) == Errc::malformed);
    }
}

TEST_CASE("adding a duplicate or misshapen tensor fails") {
    Checkpoint c;
    c.add(Tensor{"x", {2}, {1.0f, 2.0f}});
    CHECK(error_code_of([&] { c.add(Tensor{"x", {1}, {1.0f}}); }) == Errc::duplicate_name);
    CHECK(error_code_of([&] { c.add(Tensor{"y", {3}, {1.0f}}); }) == Errc::shape_mismatch);
}

TEST_CASE("validate_against_config names each violation") {
    const Checkpoint full = init_checkpoint(small_config(2), 3);
    CHECK(validate_against_config(full).empty());

    SUBCASE("missing final norm") {
        Checkpoint c = full;
        c.tensors.erase(std::string(names::final_norm_weight));
        const auto v = validate_against_config(c);
        REQUIRE(v.size() == 1);
        CHECK(v[0].find("ln_f.weight") != std::string::npos);
    }
    SUBCASE("layer beyond n_layers") {
        Checkpoint c = full;
        c.add(Tensor{names::layer_tensor(5, "ln1.bias"), {16}, std::vector<float>(16, 0.0f)});
        const auto v = validate_against_config(c);
        REQUIRE(v.size() == 1);
        CHECK(v[0].find("blocks.5.ln1.bias") != std::string::npos);
    }
    SUBCASE("wrong shape") {
        Checkpoint c = full;
        c.tensors.erase("lm_head.weight");
        c.add(Tensor{"lm_head.weight", {23, 16}, std::vector<float>(23 * 16, 0.0f)});
        const auto v = validate_against_config(c);
        REQUIRE(v.size() == 1);
        CHECK(v[0].find("lm_head.weight") != std::string::npos);
    }
}

TEST_CASE("layer tensor names parse back") {
    const auto ref = names::parse_layer_tensor("blocks.12.mlp.fc.bias");
    REQUIRE(ref.has_value());
    CHECK(ref->layer == 12);
    CHECK(ref->suffix == "mlp.fc.bias");
    CHECK_FALSE(names::parse_layer_tensor("tok_emb").has_value());
    CHECK_FALSE(names::parse_layer_tensor("blocks.x.ln1.bias").has_value());
}
