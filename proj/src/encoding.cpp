#include "chainloc/encoding.hpp"

#include <cmath>
#include <limits>

namespace chainloc::encoding {

std::int64_t to_millimeters(double meters) {
  const double mm = meters * 1000.0;
  if (!std::isfinite(mm) || std::abs(mm) > kMaxMillimeters) {
    throw EncodingError("coordinate outside the fixed-point range: " + std::to_string(meters));
  }
  return std::llround(mm);
}

void ByteWriter::u32(std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
}

void ByteWriter::u64(std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
}

void ByteWriter::var(ByteView bytes) {
  if (bytes.size() > std::numeric_limits<std::uint32_t>::max()) throw EncodingError("field too long");
  u32(static_cast<std::uint32_t>(bytes.size()));
  raw(bytes);
}

ByteView ByteReader::raw(std::size_t n) {
  if (n > remaining()) throw EncodingError("truncated input");
  const ByteView out = in_.subspan(pos_, n);
  pos_ += n;
  return out;
}

std::uint32_t ByteReader::u32() {
  std::uint32_t v = 0;
  for (const auto b : raw(4)) v = (v << 8) | b;
  return v;
}

std::uint64_t ByteReader::u64() {
  std::uint64_t v = 0;
  for (const auto b : raw(8)) v = (v << 8) | b;
  return v;
}

Bytes ByteReader::var() {
  const auto n = u32();
  const auto view = raw(n);
  return Bytes(view.begin(), view.end());
}

}  // namespace chainloc::encoding
