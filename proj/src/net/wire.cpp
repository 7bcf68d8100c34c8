#include "sky/net/wire.hpp"

#include <zlib.h>

#include <cstring>
#include <stdexcept>

#include "sky/io.hpp"

namespace sky::net {

uint32_t crc32_ieee(const uint8_t* data, size_t size) {
  return static_cast<uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(size)));
}

size_t wire_size(const Envelope& env) {
  return 4 + 1 + 1 + 4 + 8 + 2 + 2 + 2 + 1 + env.topic.size() + 4 +
         env.payload.size() + 4;
}

std::vector<uint8_t> encode(const Envelope& env) {
  if (env.payload.size() > kMaxPayload)
    throw std::length_error("envelope payload exceeds 64 KiB");
  if (env.topic.size() > 255) throw std::length_error("topic exceeds 255 bytes");

  std::vector<uint8_t> out;
  out.reserve(wire_size(env));
  io::Writer w(out);
  w.bytes(kWireMagic, 4);
  w.u8(kWireVersion);
  w.u8(env.flags);
  w.u32(env.seq);
  w.u64(static_cast<uint64_t>(env.send_sim_time_ns));
  w.u16(env.src);
  w.u16(env.dst);
  w.u16(env.domain);
  w.str8(env.topic);
  w.u32(static_cast<uint32_t>(env.payload.size()));
  w.bytes(env.payload.data(), env.payload.size());
  w.u32(crc32_ieee(out.data(), out.size()));
  return out;
}

std::optional<Envelope> decode(const uint8_t* data, size_t size) {
  // Header through topic_len is 27 bytes; trailer CRC is 4.
  if (size < 27 + 4) return std::nullopt;
  if (std::memcmp(data, kWireMagic, 4) != 0) return std::nullopt;

  const uint32_t stated_crc = crc32_ieee(data, size - 4);
  uint32_t trailer;
  std::memcpy(&trailer, data + size - 4, 4);
  if (trailer != stated_crc) return std::nullopt;

  try {
    io::Reader r(data, size - 4);
    r.skip(4);
    const uint8_t version = r.u8();
    if (version != kWireVersion) return std::nullopt;
    Envelope env;
    env.flags = r.u8();
    env.seq = r.u32();
    env.send_sim_time_ns = static_cast<int64_t>(r.u64());
    env.src = r.u16();
    env.dst = r.u16();
    env.domain = r.u16();
    env.topic = r.str8();
    const uint32_t payload_len = r.u32();
    if (payload_len > kMaxPayload || payload_len != r.remaining()) return std::nullopt;
    env.payload.assign(data + r.pos(), data + r.pos() + payload_len);
    return env;
  } catch (const std::out_of_range&) {
    return std::nullopt;
  }
}

std::optional<Envelope> decode(const std::vector<uint8_t>& buf) {
  return decode(buf.data(), buf.size());
}

}  // namespace sky::net
