#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "redpanda/tensor.hpp"

// Checkpoint container: magic header, version byte, provenance (config hash +
// seed), then (name, shape, little-endian float32) records.

namespace redpanda::numerics {

struct CheckpointRecord {
    std::string name;
    Shape shape;
    std::vector<float> data;
};

struct Checkpoint {
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::vector<CheckpointRecord> records;

    const CheckpointRecord& find(const std::string& name) const {
        for (const auto& r : records)
            if (r.name == name) return r;
        throw std::runtime_error("checkpoint: missing parameter '" + name + "'");
    }
};

namespace detail_ckpt {

constexpr char kMagic[4] = {'R', 'P', 'C', 'P'};
constexpr std::uint8_t kVersion = 1;

inline void put_u8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }
inline void put_u16(std::string& out, std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_f32(std::string& out, float f) {
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    put_u32(out, u);
}

struct Reader {
    const unsigned char* p;
    std::size_t n;
    std::size_t pos = 0;
    void need(std::size_t k) const {
        if (pos + k > n) throw std::runtime_error("checkpoint: truncated file");
    }
    std::uint8_t u8() {
        need(1);
        return p[pos++];
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = 0;
        for (int i = 0; i < 2; ++i) v |= static_cast<std::uint16_t>(p[pos++]) << (8 * i);
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[pos++]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[pos++]) << (8 * i);
        return v;
    }
    float f32() {
        std::uint32_t u = u32();
        float f;
        std::memcpy(&f, &u, 4);
        return f;
    }
};

}  // namespace detail_ckpt

inline std::string serialize_checkpoint(const Checkpoint& ckpt) {
    using namespace detail_ckpt;
    std::string out;
    out.append(kMagic, 4);
    put_u8(out, kVersion);
    put_u64(out, ckpt.config_hash);
    put_u64(out, ckpt.seed);
    put_u32(out, static_cast<std::uint32_t>(ckpt.records.size()));
    for (const auto& r : ckpt.records) {
        if (r.name.size() > 0xFFFF) throw std::invalid_argument("checkpoint: parameter name too long");
        put_u16(out, static_cast<std::uint16_t>(r.name.size()));
        out.append(r.name);
        put_u8(out, static_cast<std::uint8_t>(r.shape.size()));
        std::size_t numel = 1;
        for (std::size_t d : r.shape) {
            put_u32(out, static_cast<std::uint32_t>(d));
            numel *= d;
        }
        if (numel != r.data.size()) throw std::invalid_argument("checkpoint: record '" + r.name + "' shape/data mismatch");
        for (float f : r.data) put_f32(out, f);
    }
    return out;
}

inline Checkpoint parse_checkpoint(const std::string& bytes) {
    using namespace detail_ckpt;
    Reader rd{reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size()};
    rd.need(5);
    if (std::memcmp(rd.p, kMagic, 4) != 0) throw std::runtime_error("checkpoint: bad magic, not a checkpoint file");
    rd.pos = 4;
    const std::uint8_t version = rd.u8();
    if (version != kVersion)
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    Checkpoint ckpt;
    ckpt.config_hash = rd.u64();
    ckpt.seed = rd.u64();
    const std::uint32_t count = rd.u32();
    ckpt.records.resize(count);
    for (auto& r : ckpt.records) {
        const std::uint16_t name_len = rd.u16();
        rd.need(name_len);
        r.name.assign(reinterpret_cast<const char*>(rd.p + rd.pos), name_len);
        rd.pos += name_len;
        const std::uint8_t ndim = rd.u8();
        std::size_t numel = 1;
        r.shape.resize(ndim);
        for (auto& d : r.shape) {
            d = rd.u32();
            numel *= d;
        }
        r.data.resize(numel);
        for (auto& f : r.data) f = rd.f32();
    }
    return ckpt;
}

inline void write_checkpoint_file(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
    const std::string bytes = serialize_checkpoint(ckpt);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw std::runtime_error("checkpoint: write to '" + path + "' failed");
}

inline Checkpoint read_checkpoint_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
    std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return parse_checkpoint(bytes);
}

// Converts a named parameter list to records (training runs in float or
// double; the file format is always float32).
template <typename T>
CheckpointRecord to_record(const std::string& name, const Tensor<T>& t) {
    CheckpointRecord r;
    r.name = name;
    r.shape = t.shape();
    r.data.resize(t.numel());
    for (std::size_t i = 0; i < r.data.size(); ++i) r.data[i] = static_cast<float>(t.data()[i]);
    return r;
}

template <typename T>
void load_record(const CheckpointRecord& r, Tensor<T>& t) {
    if (r.shape != t.shape())
        throw std::runtime_error("checkpoint: parameter '" + r.name + "' has shape " + shape_str(r.shape) +
                                 ", expected " + shape_str(t.shape()));
    for (std::size_t i = 0; i < r.data.size(); ++i) t.data()[i] = static_cast<T>(r.data[i]);
}

}  // namespace redpanda::numerics
