#pragma once

// Little-endian byte packing helpers shared by the wire codec, payload
// schemas, and the flight log.

#include <bit>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sky::io {

class Writer {
 public:
  explicit Writer(std::vector<uint8_t>& out) : out_(out) {}

  void u8(uint8_t v) { out_.push_back(v); }
  void u16(uint16_t v) { append(&v, 2); }
  void u32(uint32_t v) { append(&v, 4); }
  void u64(uint64_t v) { append(&v, 8); }
  void i64(int64_t v) { u64(static_cast<uint64_t>(v)); }
  void f64(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  void bytes(const uint8_t* p, size_t n) { out_.insert(out_.end(), p, p + n); }
  void str8(std::string_view s) {
    if (s.size() > 255) throw std::length_error("str8 too long");
    u8(static_cast<uint8_t>(s.size()));
    bytes(reinterpret_cast<const uint8_t*>(s.data()), s.size());
  }
  void str16(std::string_view s) {
    if (s.size() > 65535) throw std::length_error("str16 too long");
    u16(static_cast<uint16_t>(s.size()));
    bytes(reinterpret_cast<const uint8_t*>(s.data()), s.size());
  }

  size_t size() const { return out_.size(); }

 private:
  void append(const void* p, size_t n) {
    static_assert(std::endian::native == std::endian::little,
                  "big-endian hosts need byte swaps here");
    const auto* b = static_cast<const uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }

  std::vector<uint8_t>& out_;
};

class Reader {
 public:
  Reader(const uint8_t* data, size_t size) : data_(data), size_(size) {}
  explicit Reader(const std::vector<uint8_t>& v) : Reader(v.data(), v.size()) {}

  uint8_t u8() { return take(1)[0]; }
  uint16_t u16() { uint16_t v; std::memcpy(&v, take(2), 2); return v; }
  uint32_t u32() { uint32_t v; std::memcpy(&v, take(4), 4); return v; }
  uint64_t u64() { uint64_t v; std::memcpy(&v, take(8), 8); return v; }
  int64_t i64() { return static_cast<int64_t>(u64()); }
  double f64() {
    const uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string str8() {
    const size_t n = u8();
    return std::string(reinterpret_cast<const char*>(take(n)), n);
  }
  std::string str16() {
    const size_t n = u16();
    return std::string(reinterpret_cast<const char*>(take(n)), n);
  }
  void skip(size_t n) { take(n); }

  size_t remaining() const { return size_ - pos_; }
  size_t pos() const { return pos_; }
  bool eof() const { return pos_ >= size_; }

 private:
  const uint8_t* take(size_t n) {
    if (pos_ + n > size_) throw std::out_of_range("reader underrun");
    const uint8_t* p = data_ + pos_;
    pos_ += n;
    return p;
  }

  const uint8_t* data_;
  size_t size_;
  size_t pos_{0};
};

}  // namespace sky::io
