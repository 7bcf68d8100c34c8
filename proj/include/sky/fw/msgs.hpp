#pragma once

// Message schemas exchanged between the firmware, the action layer and the
// ground segment, with their binary payload codecs. All payloads are
// little-endian and versionless; the Envelope carries framing.

#include <cstdint>
#include <string>
#include <vector>

#include "sky/io.hpp"
#include "sky/math.hpp"

namespace sky::fw {

// Topics of the firmware's external interface.
inline constexpr const char* kTopicStatus = "status";                 // flavor A stream
inline constexpr const char* kTopicLocalPosition = "local_position";  // flavor A stream
inline constexpr const char* kTopicSetpointIn = "setpoint_in";        // flavor A stream
inline constexpr const char* kTopicHeartbeat = "heartbeat";           // flavor B, 1 Hz
inline constexpr const char* kTopicCommand = "command";               // request
inline constexpr const char* kTopicCommandAck = "command_ack";        // flavor B reply
inline constexpr const char* kTopicSetTarget = "set_target";          // flavor B request
inline constexpr const char* kTopicSetTargetAck = "set_target_ack";   // flavor B reply

enum class FlightMode : uint8_t {
  Disarmed = 0,
  ArmedIdle,
  TakingOff,
  Loiter,
  OrbitNav,
  OffboardActive,
  RepositionNav,
  TransitionFW,
  TransitionMC,
  FixedWingCruise,
  LandingDescent,
  Landed,
};

const char* to_string(FlightMode m);

enum class SetpointMode : uint8_t {
  Trajectory = 0,  // flavor A
  Velocity,        // flavor B
  Acceleration,    // flavor B
  Attitude,        // flavor A
  Rates,           // flavor A
};

const char* to_string(SetpointMode m);
bool setpoint_mode_native_to_flavor_a(SetpointMode m);

// Tagged union of the five offboard control modes; `mode` selects which
// fields are meaningful.
struct Setpoint {
  SetpointMode mode{SetpointMode::Trajectory};
  Vec3 position;          // Trajectory
  Vec3 velocity;          // Trajectory, Velocity
  Vec3 acceleration;      // Acceleration
  Quat attitude;          // Attitude
  Vec3 body_rates;        // Rates
  double yaw{0.0};        // Trajectory
  double yaw_rate{0.0};   // Velocity
  double thrust_norm{0.0};  // Attitude, Rates; in [0, 1]

  bool finite() const;
  void encode(io::Writer& w) const;
  static Setpoint decode(io::Reader& r);
};

struct StatusMsg {
  int64_t stamp{0};
  uint16_t vehicle{0};
  FlightMode mode{FlightMode::Disarmed};
  bool offboard_starved{false};
  uint32_t last_cmd_seq{0};
  bool last_cmd_accepted{false};
  std::string last_cmd_reason;

  std::vector<uint8_t> encode() const;
  static StatusMsg decode(io::Reader& r);
};

struct LocalPositionMsg {
  int64_t stamp{0};
  Vec3 position;
  Vec3 velocity;
  double yaw{0.0};

  std::vector<uint8_t> encode() const;
  static LocalPositionMsg decode(io::Reader& r);
};

struct HeartbeatMsg {
  int64_t stamp{0};
  uint16_t vehicle{0};
  FlightMode mode{FlightMode::Disarmed};
  Vec3 position;
  Vec3 velocity;
  double yaw{0.0};

  std::vector<uint8_t> encode() const;
  static HeartbeatMsg decode(io::Reader& r);
};

enum class CommandKind : uint8_t {
  Arm = 0,
  Disarm,
  SetMode,
  RepositionTo,
  StartMission,
};

enum class ModeRequest : uint8_t {
  Takeoff = 0,
  Orbit,
  Land,
  Loiter,
  TransitionFW,
  TransitionMC,
  OffboardStart,
  OffboardStop,
};

struct CommandMsg {
  uint32_t cmd_seq{0};
  CommandKind kind{CommandKind::Arm};
  ModeRequest mode{ModeRequest::Loiter};  // for SetMode
  double takeoff_alt_m{0.0};
  Vec3 orbit_center;     // x, y in m; z carries the orbit altitude (positive up)
  double orbit_radius_m{0.0};
  double orbit_speed_mps{0.0};
  bool has_heading{false};
  double heading_rad{0.0};
  Vec3 reposition_target;                 // NED
  SetpointMode offboard_mode{SetpointMode::Trajectory};

  std::vector<uint8_t> encode() const;
  static CommandMsg decode(io::Reader& r);
};

struct Ack {
  uint32_t cmd_seq{0};
  bool accepted{false};
  std::string reason;

  std::vector<uint8_t> encode() const;
  static Ack decode(io::Reader& r);
};

// State-sharing payload (the /state_drone_i topic and telemetry rail).
struct VehicleStateMsg {
  int64_t stamp{0};
  uint16_t vehicle{0};
  FlightMode mode{FlightMode::Disarmed};
  Vec3 position;
  Vec3 velocity;
  Quat attitude;

  std::vector<uint8_t> encode() const;
  static VehicleStateMsg decode(io::Reader& r);
};

}  // namespace sky::fw
