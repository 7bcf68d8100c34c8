#pragma once

// Envelope: the one packet type everything in the stack travels in, plus its
// binary wire codec. The on-wire layout is frozen; the distributed-mode UDP
// transport and the in-process transport share it.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sky::net {

using NodeId = uint16_t;
using DomainId = uint16_t;

inline constexpr NodeId kBroadcast = 0xFFFF;
inline constexpr size_t kMaxPayload = 64 * 1024;

struct Envelope {
  uint32_t seq{0};               // strictly increasing per (src, topic)
  int64_t send_sim_time_ns{0};
  NodeId src{0};
  NodeId dst{kBroadcast};
  DomainId domain{0};
  std::string topic;
  std::vector<uint8_t> payload;
  uint8_t flags{0};
};

// Wire layout, little-endian:
//   magic "AAS1" | version u8=1 | flags u8 | seq u32 | send_sim_time_ns u64 |
//   src u16 | dst u16 | domain u16 | topic_len u8 + topic | payload_len u32 +
//   payload | crc32(IEEE) of all preceding bytes
inline constexpr uint8_t kWireMagic[4] = {0x41, 0x41, 0x53, 0x31};
inline constexpr uint8_t kWireVersion = 1;

std::vector<uint8_t> encode(const Envelope& env);

// Returns nullopt on malformed input or CRC mismatch.
std::optional<Envelope> decode(const uint8_t* data, size_t size);
std::optional<Envelope> decode(const std::vector<uint8_t>& buf);

// Encoded size for bandwidth accounting.
size_t wire_size(const Envelope& env);

uint32_t crc32_ieee(const uint8_t* data, size_t size);

}  // namespace sky::net
