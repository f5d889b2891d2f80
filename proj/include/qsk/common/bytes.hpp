#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qsk {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

// Raised by every wire decoder. field() names the offending field so callers
// and tests can tell a truncated header from a bad flag.
class DecodeError : public std::runtime_error {
public:
  DecodeError(std::string field, const std::string& reason)
      : std::runtime_error(field + ": " + reason), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

class EncodeError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Big-endian append-only writer.
class ByteWriter {
public:
  ByteWriter() = default;
  explicit ByteWriter(std::size_t reserve) { buf_.reserve(reserve); }

  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) {
    buf_.push_back(static_cast<std::uint8_t>(v >> 8));
    buf_.push_back(static_cast<std::uint8_t>(v));
  }
  void u32(std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8)
      buf_.push_back(static_cast<std::uint8_t>(v >> shift));
  }
  void u64(std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8)
      buf_.push_back(static_cast<std::uint8_t>(v >> shift));
  }
  void bytes(ByteView v) { buf_.insert(buf_.end(), v.begin(), v.end()); }
  void text(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }

  std::size_t size() const noexcept { return buf_.size(); }
  const Bytes& view() const noexcept { return buf_; }
  Bytes take() && { return std::move(buf_); }

private:
  Bytes buf_;
};

// Bounds-checked big-endian reader. Every accessor names the field it reads
// so a DecodeError points at the exact spot the input ran out.
class ByteReader {
public:
  explicit ByteReader(ByteView data) : data_(data) {}

  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  std::size_t position() const noexcept { return pos_; }
  bool empty() const noexcept { return remaining() == 0; }

  std::uint8_t u8(std::string_view field) {
    need(1, field);
    return data_[pos_++];
  }
  std::uint16_t u16(std::string_view field) {
    need(2, field);
    std::uint16_t v = static_cast<std::uint16_t>((data_[pos_] << 8) | data_[pos_ + 1]);
    pos_ += 2;
    return v;
  }
  std::uint32_t u32(std::string_view field) {
    need(4, field);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | data_[pos_++];
    return v;
  }
  std::uint64_t u64(std::string_view field) {
    need(8, field);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | data_[pos_++];
    return v;
  }
  ByteView take(std::size_t n, std::string_view field) {
    need(n, field);
    ByteView out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  ByteView rest() {
    ByteView out = data_.subspan(pos_);
    pos_ = data_.size();
    return out;
  }

private:
  void need(std::size_t n, std::string_view field) const {
    if (remaining() < n) throw DecodeError(std::string(field), "truncated");
  }

  ByteView data_;
  std::size_t pos_ = 0;
};

std::string to_hex(ByteView data);
Bytes from_hex(std::string_view hex);  // whitespace tolerant

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

}  // namespace qsk
