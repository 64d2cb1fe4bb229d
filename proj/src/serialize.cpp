#include "fedprov/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "fedprov/error.hpp"

namespace fedprov {

namespace binio {

namespace {
template <typename T>
void put_le(std::ostream& out, T v) {
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
    unsigned char buf[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(buf), sizeof(T)))
        throw Error(ErrorKind::parse, "unexpected end of binary stream");
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(buf[i]) << (8 * i));
    return v;
}
}  // namespace

void put_u8(std::ostream& out, std::uint8_t v) { put_le(out, v); }
void put_u16(std::ostream& out, std::uint16_t v) { put_le(out, v); }
void put_u32(std::ostream& out, std::uint32_t v) { put_le(out, v); }
void put_i32(std::ostream& out, std::int32_t v) { put_le(out, static_cast<std::uint32_t>(v)); }
void put_f64(std::ostream& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }
std::uint8_t get_u8(std::istream& in) { return get_le<std::uint8_t>(in); }
std::uint16_t get_u16(std::istream& in) { return get_le<std::uint16_t>(in); }
std::uint32_t get_u32(std::istream& in) { return get_le<std::uint32_t>(in); }
std::int32_t get_i32(std::istream& in) { return static_cast<std::int32_t>(get_le<std::uint32_t>(in)); }
double get_f64(std::istream& in) { return std::bit_cast<double>(get_le<std::uint64_t>(in)); }

}  // namespace binio

void write_params(std::ostream& out, const LayeredParams& p) {
    out.write("FPRM", 4);
    binio::put_u16(out, kParamsFormatVersion);
    binio::put_u32(out, static_cast<std::uint32_t>(p.layer_count()));
    for (const auto& s : p.specs()) {
        binio::put_u8(out, static_cast<std::uint8_t>(s.kind));
        binio::put_u8(out, static_cast<std::uint8_t>(s.shape.size()));
        for (auto d : s.shape) binio::put_u32(out, static_cast<std::uint32_t>(d));
    }
    for (double v : p.values()) binio::put_f64(out, v);
}

LayeredParams read_params(std::istream& in) {
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "FPRM", 4) != 0)
        throw Error(ErrorKind::parse, "bad magic: not a FPRM parameter file");
    const auto version = binio::get_u16(in);
    if (version != kParamsFormatVersion)
        throw Error(ErrorKind::parse, "unsupported FPRM version " + std::to_string(version));
    const auto layers = binio::get_u32(in);
    std::vector<LayerSpec> specs;
    specs.reserve(layers);
    for (std::uint32_t i = 0; i < layers; ++i) {
        LayerSpec s;
        s.index = i;
        const auto kind = binio::get_u8(in);
        if (kind > static_cast<std::uint8_t>(LayerKind::classifier_bias))
            throw Error(ErrorKind::parse, "unknown layer kind " + std::to_string(kind));
        s.kind = static_cast<LayerKind>(kind);
        const auto rank = binio::get_u8(in);
        for (std::uint8_t r = 0; r < rank; ++r) s.shape.push_back(binio::get_u32(in));
        specs.push_back(std::move(s));
    }
    LayeredParams p;
    try {
        p = LayeredParams(std::move(specs));
    } catch (const Error& e) {
        throw Error(ErrorKind::parse, std::string("invalid layer table: ") + e.what());
    }
    for (auto& v : p.values()) v = binio::get_f64(in);
    return p;
}

void save_params(const std::string& path, const LayeredParams& p) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot open " + path + " for writing");
    write_params(out, p);
    if (!out) throw Error(ErrorKind::io, "failed writing " + path);
}

LayeredParams load_params(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open " + path);
    try {
        return read_params(in);
    } catch (const Error& e) {
        throw Error(e.kind(), path + ": " + e.what());
    }
}

}  // namespace fedprov
