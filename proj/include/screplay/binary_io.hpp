#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "screplay/error.hpp"

namespace screplay::binio {

// Little-endian encoding helpers shared by the CLDS1 and CLMS1 containers.

template <typename U>
U to_little(U v) {
  if constexpr (std::endian::native == std::endian::big) {
    U out{};
    auto* src = reinterpret_cast<const unsigned char*>(&v);
    auto* dst = reinterpret_cast<unsigned char*>(&out);
    for (std::size_t i = 0; i < sizeof(U); ++i) dst[i] = src[sizeof(U) - 1 - i];
    return out;
  } else {
    return v;
  }
}

template <typename U>
void write_raw(std::ostream& os, U v) {
  v = to_little(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof(U));
}

inline void write_u32(std::ostream& os, std::uint32_t v) { write_raw(os, v); }
inline void write_u64(std::ostream& os, std::uint64_t v) { write_raw(os, v); }
inline void write_i32(std::ostream& os, std::int32_t v) { write_raw(os, static_cast<std::uint32_t>(v)); }
inline void write_f32(std::ostream& os, float v) { write_raw(os, std::bit_cast<std::uint32_t>(v)); }

template <typename U>
U read_raw(std::istream& is) {
  U v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(U));
  if (!is) throw FormatError("unexpected end of file");
  return to_little(v);
}

inline std::uint32_t read_u32(std::istream& is) { return read_raw<std::uint32_t>(is); }
inline std::uint64_t read_u64(std::istream& is) { return read_raw<std::uint64_t>(is); }
inline std::int32_t read_i32(std::istream& is) { return static_cast<std::int32_t>(read_raw<std::uint32_t>(is)); }
inline float read_f32(std::istream& is) { return std::bit_cast<float>(read_raw<std::uint32_t>(is)); }

inline void expect_magic(std::istream& is, const std::string& magic) {
  std::string got(magic.size(), '\0');
  is.read(got.data(), static_cast<std::streamsize>(got.size()));
  if (!is || got != magic) throw FormatError("bad magic, expected " + magic);
}

} // namespace screplay::binio
