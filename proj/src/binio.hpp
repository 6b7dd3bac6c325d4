#pragma once

// Little-endian primitives for the binary formats (grid cache, checkpoints, PFM).

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "dualcube/error.hpp"

namespace dualcube::binio {

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  }
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

/// Tracks the byte offset so format errors can report where they happened.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  template <typename T>
  T get(const char* what) {
    unsigned char bytes[sizeof(T)];
    in_.read(reinterpret_cast<char*>(bytes), sizeof(T));
    if (in_.gcount() != std::streamsize(sizeof(T))) {
      throw FormatError(std::string("truncated input reading ") + what, offset_ + in_.gcount());
    }
    if constexpr (std::endian::native == std::endian::big) {
      for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    }
    offset_ += sizeof(T);
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
  }

  std::string bytes(std::size_t count, const char* what) {
    std::string s(count, '\0');
    in_.read(s.data(), std::streamsize(count));
    if (in_.gcount() != std::streamsize(count)) {
      throw FormatError(std::string("truncated input reading ") + what, offset_ + in_.gcount());
    }
    offset_ += count;
    return s;
  }

  std::size_t offset() const { return offset_; }

 private:
  std::istream& in_;
  std::size_t offset_ = 0;
};

}  // namespace dualcube::binio
