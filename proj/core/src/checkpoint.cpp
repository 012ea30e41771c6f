// Copyright 2026 The shrinkcast Authors
// SPDX-License-Identifier: Apache-2.0

#include "shrinkcast/checkpoint.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>

#include "shrinkcast/error.hpp"

namespace shrinkcast {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic = {'T', 'C', 'K', 'P'};
constexpr std::uint8_t kVersion = 0x01;

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

class ByteWriter {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) { put(v, 2); }
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void bytes(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    void put(std::uint64_t v, int width) {
        for (int i = 0; i < width; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    std::vector<std::uint8_t> out_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(get(1, "u8")); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(get(2, "u16")); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4, "u32")); }
    std::uint64_t u64() { return get(8, "u64"); }

    std::string str(std::size_t n) {
        need(n, "tensor name");
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }

    std::span<const std::uint8_t> raw(std::size_t n) {
        need(n, "data section");
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(std::size_t n, const char* what) const {
        if (remaining() < n) {
            throw Error(Errc::truncated, "checkpoint truncated while reading " + std::string(what) + " at byte " +
                                             std::to_string(pos_));
        }
    }
    std::uint64_t get(int width, const char* what) {
        need(static_cast<std::size_t>(width), what);
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += static_cast<std::size_t>(width);
        return v;
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

std::size_t shape_product(std::span<const std::uint32_t> shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

// Container-level invariants: a valid config and well-formed tensors.
// Completeness against the config is validate_against_config's job.
void check_container(const Checkpoint& ckpt) {
    if (auto problem = ckpt.config.check(); !problem.empty()) {
        throw Error(Errc::invalid_checkpoint, "invalid model config: " + problem);
    }
    for (const auto& [key, t] : ckpt.tensors) {
        if (key != t.name) throw Error(Errc::invalid_checkpoint, "tensor key '" + key + "' != name '" + t.name + "'");
        if (t.name.empty() || t.name.size() > std::numeric_limits<std::uint16_t>::max()) {
            throw Error(Errc::invalid_checkpoint, "tensor name length out of range");
        }
        if (t.shape.empty() || t.shape.size() > std::numeric_limits<std::uint8_t>::max()) {
            throw Error(Errc::invalid_checkpoint, "tensor '" + t.name + "' has unsupported rank");
        }
        for (auto d : t.shape) {
            if (d == 0) throw Error(Errc::invalid_checkpoint, "tensor '" + t.name + "' has a zero dimension");
        }
        if (shape_product(t.shape) != t.data.size()) {
            throw Error(Errc::shape_mismatch, "tensor '" + t.name + "' shape does not match data length");
        }
    }
}

std::string shape_string(std::span<const std::uint32_t> shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

}  // namespace

std::string ModelConfig::check() const {
    if (n_layers < 1) return "n_layers must be >= 1";
    if (n_heads < 1) return "n_heads must be >= 1";
    if (d_model < 1) return "d_model must be >= 1";
    if (vocab_size < 1) return "vocab_size must be >= 1";
    if (max_seq_len < 1) return "max_seq_len must be >= 1";
    if (d_model % n_heads != 0) return "d_model must be divisible by n_heads";
    return {};
}

std::size_t Tensor::numel() const { return shape_product(shape); }

void Checkpoint::add(Tensor tensor) {
    if (shape_product(tensor.shape) != tensor.data.size()) {
        throw Error(Errc::shape_mismatch, "tensor '" + tensor.name + "' shape does not match data length");
    }
    auto name = tensor.name;
    auto [it, inserted] = tensors.emplace(std::move(name), std::move(tensor));
    if (!inserted) throw Error(Errc::duplicate_name, "duplicate tensor name '" + it->first + "'");
}

const Tensor& Checkpoint::at(std::string_view name) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw Error(Errc::invalid_checkpoint, "missing tensor '" + std::string(name) + "'");
    return it->second;
}

Tensor& Checkpoint::at(std::string_view name) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw Error(Errc::invalid_checkpoint, "missing tensor '" + std::string(name) + "'");
    return it->second;
}

namespace names {

std::span<const std::string_view> layer_suffixes() {
    static constexpr std::array<std::string_view, 12> kSuffixes = {
        "ln1.weight",      "ln1.bias",        "attn.qkv.weight", "attn.qkv.bias",
        "attn.proj.weight", "attn.proj.bias", "ln2.weight",      "ln2.bias",
        "mlp.fc.weight",   "mlp.fc.bias",     "mlp.proj.weight", "mlp.proj.bias",
    };
    return kSuffixes;
}

std::string layer_tensor(std::uint32_t layer, std::string_view suffix) {
    return "blocks." + std::to_string(layer) + "." + std::string(suffix);
}

std::optional<LayerRef> parse_layer_tensor(std::string_view name) {
    constexpr std::string_view prefix = "blocks.";
    if (!name.starts_with(prefix)) return std::nullopt;
    name.remove_prefix(prefix.size());
    const auto dot = name.find('.');
    if (dot == std::string_view::npos || dot == 0) return std::nullopt;
    const auto digits = name.substr(0, dot);
    // Decimal, no sign, no leading zeros (except "0" itself).
    if (digits.size() > 1 && digits.front() == '0') return std::nullopt;
    std::uint32_t layer = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), layer);
    if (ec != std::errc{} || ptr != digits.data() + digits.size()) return std::nullopt;
    auto suffix = name.substr(dot + 1);
    if (suffix.empty()) return std::nullopt;
    return LayerRef{layer, std::string(suffix)};
}

}  // namespace names

std::map<std::string, std::vector<std::uint32_t>, std::less<>> expected_tensors(const ModelConfig& c) {
    const std::uint32_t d = c.d_model;
    std::map<std::string, std::vector<std::uint32_t>, std::less<>> out;
    out[std::string(names::token_embedding)] = {c.vocab_size, d};
    out[std::string(names::position_embedding)] = {c.max_seq_len, d};
    out[std::string(names::final_norm_weight)] = {d};
    out[std::string(names::final_norm_bias)] = {d};
    out[std::string(names::lm_head)] = {d, c.vocab_size};
    for (std::uint32_t l = 0; l < c.n_layers; ++l) {
        out[names::layer_tensor(l, "ln1.weight")] = {d};
        out[names::layer_tensor(l, "ln1.bias")] = {d};
        out[names::layer_tensor(l, "attn.qkv.weight")] = {d, 3 * d};
        out[names::layer_tensor(l, "attn.qkv.bias")] = {3 * d};
        out[names::layer_tensor(l, "attn.proj.weight")] = {d, d};
        out[names::layer_tensor(l, "attn.proj.bias")] = {d};
        out[names::layer_tensor(l, "ln2.weight")] = {d};
        out[names::layer_tensor(l, "ln2.bias")] = {d};
        out[names::layer_tensor(l, "mlp.fc.weight")] = {d, c.d_ff()};
        out[names::layer_tensor(l, "mlp.fc.bias")] = {c.d_ff()};
        out[names::layer_tensor(l, "mlp.proj.weight")] = {c.d_ff(), d};
        out[names::layer_tensor(l, "mlp.proj.bias")] = {d};
    }
    return out;
}

std::vector<std::string> validate_against_config(const Checkpoint& ckpt) {
    std::vector<std::string> violations;
    if (auto problem = ckpt.config.check(); !problem.empty()) {
        violations.push_back("config: " + problem);
        return violations;
    }
    const auto expected = expected_tensors(ckpt.config);
    for (const auto& [name, shape] : expected) {
        auto it = ckpt.tensors.find(name);
        if (it == ckpt.tensors.end()) {
            violations.push_back("missing tensor '" + name + "'");
            continue;
        }
        const Tensor& t = it->second;
        if (t.shape != shape) {
            violations.push_back("tensor '" + name + "' has shape " + shape_string(t.shape) + ", expected " +
                                 shape_string(shape));
        } else if (t.data.size() != t.numel()) {
            violations.push_back("tensor '" + name + "' data length does not match its shape");
        }
    }
    for (const auto& [name, t] : ckpt.tensors) {
        if (expected.contains(name)) continue;
        if (auto ref = names::parse_layer_tensor(name); ref && ref->layer >= ckpt.config.n_layers) {
            violations.push_back("tensor '" + name + "' refers to layer " + std::to_string(ref->layer) +
                                 " but n_layers is " + std::to_string(ckpt.config.n_layers));
        } else {
            violations.push_back("unexpected tensor '" + name + "'");
        }
    }
    return violations;
}

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
    check_container(ckpt);
    ByteWriter w;
    for (auto b : kMagic) w.u8(b);
    w.u8(kVersion);
    const auto& c = ckpt.config;
    for (auto v : {c.n_layers, c.n_heads, c.d_model, c.vocab_size, c.max_seq_len}) w.u32(v);
    w.u32(static_cast<std::uint32_t>(ckpt.tensors.size()));

    std::uint64_t offset = 0;
    for (const auto& [name, t] : ckpt.tensors) {
        w.u16(static_cast<std::uint16_t>(name.size()));
        w.bytes(name);
        w.u8(static_cast<std::uint8_t>(t.shape.size()));
        for (auto d : t.shape) w.u32(d);
        w.u64(offset);
        offset += t.data.size() * sizeof(float);
    }
    w.u64(offset);
    for (const auto& [name, t] : ckpt.tensors) {
        for (float v : t.data) w.f32(v);
    }
    return w.take();
}

Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    if (bytes.size() < kMagic.size() || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
        throw Error(Errc::bad_magic, "not a TCKP checkpoint (bad magic bytes)");
    }
    r.raw(kMagic.size());
    if (auto version = r.u8(); version != kVersion) {
        throw Error(Errc::unsupported_version, "unsupported checkpoint version " + std::to_string(version));
    }

    Checkpoint ckpt;
    ckpt.config.n_layers = r.u32();
    ckpt.config.n_heads = r.u32();
    ckpt.config.d_model = r.u32();
    ckpt.config.vocab_size = r.u32();
    ckpt.config.max_seq_len = r.u32();
    if (auto problem = ckpt.config.check(); !problem.empty()) {
        throw Error(Errc::malformed, "invalid model config in checkpoint: " + problem);
    }

    struct Entry {
        std::string name;
        std::vector<std::uint32_t> shape;
        std::uint64_t offset;
    };
    const std::uint32_t count = r.u32();
    std::vector<Entry> entries;
    std::set<std::string, std::less<>> seen;
    for (std::uint32_t i = 0; i < count; ++i) {
        Entry e;
        const auto name_len = r.u16();
        e.name = r.str(name_len);
        if (e.name.empty()) throw Error(Errc::malformed, "empty tensor name");
        if (!seen.insert(e.name).second) throw Error(Errc::duplicate_name, "duplicate tensor name '" + e.name + "'");
        const auto rank = r.u8();
        if (rank == 0) throw Error(Errc::malformed, "tensor '" + e.name + "' has rank 0");
        e.shape.resize(rank);
        for (auto& d : e.shape) {
            d = r.u32();
            if (d == 0) throw Error(Errc::malformed, "tensor '" + e.name + "' has a zero dimension");
        }
        e.offset = r.u64();
        entries.push_back(std::move(e));
    }
    const std::uint64_t data_bytes = r.u64();
    if (data_bytes > r.remaining()) {
        throw Error(Errc::truncated, "data section declares " + std::to_string(data_bytes) + " bytes but only " +
                                         std::to_string(r.remaining()) + " remain");
    }
    if (data_bytes < r.remaining()) throw Error(Errc::malformed, "trailing bytes after data section");
    if (data_bytes % sizeof(float) != 0) throw Error(Errc::malformed, "data section is not a whole number of floats");
    const auto data = r.raw(static_cast<std::size_t>(data_bytes));

    for (std::size_t i = 0; i < entries.size(); ++i) {
        const Entry& e = entries[i];
        const std::uint64_t end = i + 1 < entries.size() ? entries[i + 1].offset : data_bytes;
        const std::uint64_t expected_start = i == 0 ? 0 : entries[i - 1].offset;
        if (e.offset < expected_start || e.offset > end || (i == 0 && e.offset != 0)) {
            throw Error(Errc::malformed, "tensor offsets are not ascending and contiguous at '" + e.name + "'");
        }
        const std::uint64_t numel = shape_product(e.shape);
        if ((end - e.offset) != numel * sizeof(float)) {
            throw Error(Errc::shape_mismatch, "tensor '" + e.name + "' shape " + shape_string(e.shape) +
                                                  " does not match its " + std::to_string(end - e.offset) +
                                                  "-byte data span");
        }
        Tensor t{e.name, e.shape, std::vector<float>(static_cast<std::size_t>(numel))};
        const auto* src = data.data() + e.offset;
        for (std::size_t j = 0; j < t.data.size(); ++j) {
            std::uint32_t bits = 0;
            for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(src[4 * j + b]) << (8 * b);
            t.data[j] = std::bit_cast<float>(bits);
        }
        ckpt.add(std::move(t));
    }
    return ckpt;
}

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    const auto bytes = serialize_checkpoint(ckpt);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(Errc::io, "failed writing '" + path.string() + "'");
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io, "cannot open '" + path.string() + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_checkpoint(bytes);
}

}  // namespace shrinkcast
