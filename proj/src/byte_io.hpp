#pragma once

// Little-endian encode/decode helpers for the binary file formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

namespace motif::detail {

template <typename U>
void put_le(std::vector<char>& buf, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) buf.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

inline void put_f32(std::vector<char>& buf, float v) { put_le(buf, std::bit_cast<std::uint32_t>(v)); }
inline void put_f64(std::vector<char>& buf, double v) { put_le(buf, std::bit_cast<std::uint64_t>(v)); }

template <typename U>
U get_le(const char* p) {
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i)
    value |= static_cast<U>(static_cast<unsigned char>(p[i])) << (8 * i);
  return value;
}

inline float get_f32(const char* p) { return std::bit_cast<float>(get_le<std::uint32_t>(p)); }
inline double get_f64(const char* p) { return std::bit_cast<double>(get_le<std::uint64_t>(p)); }

}  // namespace motif::detail
