#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "chainloc/identity.hpp"

namespace chainloc::encoding {

using identity::Bytes;
using identity::ByteView;

// Raised for values that have no canonical encoding and for truncated or
// malformed input on decode.
class EncodingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Largest coordinate magnitude representable in signed 64-bit millimeters.
inline constexpr double kMaxMillimeters = 9.2e15;

// Meters to signed millimeters, rounding half away from zero.
std::int64_t to_millimeters(double meters);
inline double from_millimeters(std::int64_t mm) { return static_cast<double>(mm) / 1000.0; }

// Big-endian append-only writer.
class ByteWriter {
 public:
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  // Fixed-size field, written without a length prefix.
  void raw(ByteView bytes) { out_.insert(out_.end(), bytes.begin(), bytes.end()); }
  // Variable-length field, prefixed by its 4-byte length.
  void var(ByteView bytes);

  const Bytes& bytes() const& { return out_; }
  Bytes take() && { return std::move(out_); }

 private:
  Bytes out_;
};

class ByteReader {
 public:
  explicit ByteReader(ByteView in) : in_(in) {}

  std::uint32_t u32();
  std::uint64_t u64();
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  ByteView raw(std::size_t n);
  Bytes var();

  bool done() const { return pos_ == in_.size(); }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  ByteView in_;
  std::size_t pos_ = 0;
};

}  // namespace chainloc::encoding
