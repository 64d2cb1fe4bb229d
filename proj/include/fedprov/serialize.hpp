#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "fedprov/params.hpp"

namespace fedprov {

// Binary layout, all integers and floats little-endian:
//   "FPRM" | version u16 | layer count u32
//   per layer: kind u8 | rank u8 | rank x dim u32
//   total_len x f64 in flattening order
inline constexpr std::uint16_t kParamsFormatVersion = 1;

void write_params(std::ostream& out, const LayeredParams& p);
LayeredParams read_params(std::istream& in);

void save_params(const std::string& path, const LayeredParams& p);
LayeredParams load_params(const std::string& path);

namespace binio {
void put_u8(std::ostream& out, std::uint8_t v);
void put_u16(std::ostream& out, std::uint16_t v);
void put_u32(std::ostream& out, std::uint32_t v);
void put_i32(std::ostream& out, std::int32_t v);
void put_f64(std::ostream& out, double v);
std::uint8_t get_u8(std::istream& in);
std::uint16_t get_u16(std::istream& in);
std::uint32_t get_u32(std::istream& in);
std::int32_t get_i32(std::istream& in);
double get_f64(std::istream& in);
}  // namespace binio

}  // namespace fedprov
