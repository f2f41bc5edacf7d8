#pragma once

// RMTF binary tensor container.
//
//   magic      "RMTF" (4 bytes)
//   version    u16
//   count      u16
//   entries    count x { name_len u16, name bytes (UTF-8), rank u8,
//                        dims u32 x rank, payload f32 x prod(dims) }
//
// All integers and floats are little-endian; payloads are row-major.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "meshmap/error.hpp"

namespace meshmap {

inline constexpr std::array<char, 4> kRmtfMagic = {'R', 'M', 'T', 'F'};
inline constexpr std::uint16_t kRmtfVersion = 1;

struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  Tensor() = default;
  Tensor(std::vector<std::uint32_t> d, std::vector<float> values)
      : dims(std::move(d)), data(std::move(values)) {
    if (data.size() != element_count(dims))
      fail(ErrorCode::Shape, "tensor payload does not match its dims");
  }

  static std::size_t element_count(std::span<const std::uint32_t> d) {
    return std::accumulate(d.begin(), d.end(), std::size_t{1},
                           [](std::size_t a, std::uint32_t b) { return a * b; });
  }

  std::size_t rank() const { return dims.size(); }
  std::size_t size() const { return data.size(); }
};

/// Ordered collection of named tensors; insertion order is preserved on disk.
class TensorFile {
 public:
  void add(std::string name, Tensor t) {
    for (auto& [n, existing] : entries_) {
      if (n == name) {
        existing = std::move(t);
        return;
      }
    }
    entries_.emplace_back(std::move(name), std::move(t));
  }

  bool contains(const std::string& name) const {
    for (const auto& e : entries_)
      if (e.first == name) return true;
    return false;
  }

  const Tensor& at(const std::string& name) const {
    for (const auto& e : entries_)
      if (e.first == name) return e.second;
    fail(ErrorCode::Load, "missing tensor '" + name + "'");
  }

  const std::vector<std::pair<std::string, Tensor>>& entries() const {
    return entries_;
  }

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

namespace detail {

inline void put_u8(std::ostream& os, std::uint8_t v) {
  os.put(static_cast<char>(v));
}

inline void put_u16(std::ostream& os, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
  os.write(b, 2);
}

inline void put_u32(std::ostream& os, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff),
                     static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff),
                     static_cast<char>((v >> 24) & 0xff)};
  os.write(b, 4);
}

inline void read_exact(std::istream& is, char* dst, std::size_t n) {
  is.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n)
    fail(ErrorCode::Parse, "truncated RMTF stream");
}

inline std::uint8_t get_u8(std::istream& is) {
  char b;
  read_exact(is, &b, 1);
  return static_cast<std::uint8_t>(b);
}

inline std::uint16_t get_u16(std::istream& is) {
  unsigned char b[2];
  read_exact(is, reinterpret_cast<char*>(b), 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  read_exact(is, reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace detail

inline void write_rmtf(std::ostream& os, const TensorFile& file) {
  const auto& entries = file.entries();
  if (entries.size() > 0xffff)
    fail(ErrorCode::InvalidArgument, "too many tensors for RMTF");
  os.write(kRmtfMagic.data(), 4);
  detail::put_u16(os, kRmtfVersion);
  detail::put_u16(os, static_cast<std::uint16_t>(entries.size()));
  for (const auto& [name, t] : entries) {
    if (name.size() > 0xffff || t.rank() > 0xff)
      fail(ErrorCode::InvalidArgument, "tensor '" + name + "' exceeds RMTF limits");
    detail::put_u16(os, static_cast<std::uint16_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::put_u8(os, static_cast<std::uint8_t>(t.rank()));
    for (auto d : t.dims) detail::put_u32(os, d);
    for (float f : t.data) detail::put_u32(os, std::bit_cast<std::uint32_t>(f));
  }
  if (!os) fail(ErrorCode::Load, "failed writing RMTF stream");
}

inline TensorFile read_rmtf(std::istream& is) {
  std::array<char, 4> magic{};
  detail::read_exact(is, magic.data(), 4);
  if (magic != kRmtfMagic) fail(ErrorCode::Parse, "bad RMTF magic");
  const auto version = detail::get_u16(is);
  if (version != kRmtfVersion)
    fail(ErrorCode::Parse, "unsupported RMTF version " + std::to_string(version));
  const auto count = detail::get_u16(is);

  TensorFile file;
  for (std::uint16_t i = 0; i < count; ++i) {
    const auto name_len = detail::get_u16(is);
    std::string name(name_len, '\0');
    detail::read_exact(is, name.data(), name_len);
    const auto rank = detail::get_u8(is);
    std::vector<std::uint32_t> dims(rank);
    for (auto& d : dims) d = detail::get_u32(is);

    std::size_t n = 1;
    for (auto d : dims) {
      if (d != 0 && n > (std::size_t{1} << 32) / d)
        fail(ErrorCode::Parse, "tensor '" + name + "' is implausibly large");
      n *= d;
    }
    std::vector<float> data;
    data.reserve(std::min<std::size_t>(n, 1 << 20));
    for (std::size_t k = 0; k < n; ++k)
      data.push_back(std::bit_cast<float>(detail::get_u32(is)));
    file.add(std::move(name), Tensor(std::move(dims), std::move(data)));
  }
  return file;
}

inline void save_rmtf(const std::string& path, const TensorFile& file) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorCode::Load, "cannot open '" + path + "' for writing");
  write_rmtf(os, file);
}

inline TensorFile load_rmtf(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCode::Load, "cannot open '" + path + "'");
  return read_rmtf(is);
}

}  // namespace meshmap
