#include "sky/fw/msgs.hpp"

#include <cmath>

namespace sky::fw {

const char* to_string(FlightMode m) {
  switch (m) {
    case FlightMode::Disarmed: return "Disarmed";
    case FlightMode::ArmedIdle: return "ArmedIdle";
    case FlightMode::TakingOff: return "TakingOff";
    case FlightMode::Loiter: return "Loiter";
    case FlightMode::OrbitNav: return "OrbitNav";
    case FlightMode::OffboardActive: return "OffboardActive";
    case FlightMode::RepositionNav: return "RepositionNav";
    case FlightMode::TransitionFW: return "TransitionFW";
    case FlightMode::TransitionMC: return "TransitionMC";
    case FlightMode::FixedWingCruise: return "FixedWingCruise";
    case FlightMode::LandingDescent: return "LandingDescent";
    case FlightMode::Landed: return "Landed";
  }
  return "?";
}

const char* to_string(SetpointMode m) {
  switch (m) {
    case SetpointMode::Trajectory: return "trajectory";
    case SetpointMode::Velocity: return "velocity";
    case SetpointMode::Acceleration: return "acceleration";
    case SetpointMode::Attitude: return "attitude";
    case SetpointMode::Rates: return "rates";
  }
  return "?";
}

bool setpoint_mode_native_to_flavor_a(SetpointMode m) {
  return m == SetpointMode::Trajectory || m == SetpointMode::Attitude ||
         m == SetpointMode::Rates;
}

bool Setpoint::finite() const {
  return position.finite() && velocity.finite() && acceleration.finite() &&
         attitude.finite() && body_rates.finite() && std::isfinite(yaw) &&
         std::isfinite(yaw_rate) && std::isfinite(thrust_norm);
}

namespace {

void put_vec3(io::Writer& w, const Vec3& v) {
  w.f64(v.x);
  w.f64(v.y);
  w.f64(v.z);
}
Vec3 get_vec3(io::Reader& r) {
  Vec3 v;
  v.x = r.f64();
  v.y = r.f64();
  v.z = r.f64();
  return v;
}
void put_quat(io::Writer& w, const Quat& q) {
  w.f64(q.w);
  w.f64(q.x);
  w.f64(q.y);
  w.f64(q.z);
}
Quat get_quat(io::Reader& r) {
  Quat q;
  q.w = r.f64();
  q.x = r.f64();
  q.y = r.f64();
  q.z = r.f64();
  return q;
}

}  // namespace

void Setpoint::encode(io::Writer& w) const {
  w.u8(static_cast<uint8_t>(mode));
  switch (mode) {
    case SetpointMode::Trajectory:
      put_vec3(w, position);
      put_vec3(w, velocity);
      w.f64(yaw);
      break;
    case SetpointMode::Velocity:
      put_vec3(w, velocity);
      w.f64(yaw_rate);
      break;
    case SetpointMode::Acceleration:
      put_vec3(w, acceleration);
      break;
    case SetpointMode::Attitude:
      put_quat(w, attitude);
      w.f64(thrust_norm);
      break;
    case SetpointMode::Rates:
      put_vec3(w, body_rates);
      w.f64(thrust_norm);
      break;
  }
}

Setpoint Setpoint::decode(io::Reader& r) {
  Setpoint sp;
  sp.mode = static_cast<SetpointMode>(r.u8());
  switch (sp.mode) {
    case SetpointMode::Trajectory:
      sp.position = get_vec3(r);
      sp.velocity = get_vec3(r);
      sp.yaw = r.f64();
      break;
    case SetpointMode::Velocity:
      sp.velocity = get_vec3(r);
      sp.yaw_rate = r.f64();
      break;
    case SetpointMode::Acceleration:
      sp.acceleration = get_vec3(r);
      break;
    case SetpointMode::Attitude:
      sp.attitude = get_quat(r);
      sp.thrust_norm = r.f64();
      break;
    case SetpointMode::Rates:
      sp.body_rates = get_vec3(r);
      sp.thrust_norm = r.f64();
      break;
  }
  return sp;
}

std::vector<uint8_t> StatusMsg::encode() const {
  std::vector<uint8_t> out;
  io::Writer w(out);
  w.i64(stamp);
  w.u16(vehicle);
  w.u8(static_cast<uint8_t>(mode));
  w.u8(offboard_starved ? 1 : 0);
  w.u32(last_cmd_seq);
  w.u8(last_cmd_accepted ? 1 : 0);
  w.str8(last_cmd_reason);
  return out;
}

StatusMsg StatusMsg::decode(io::Reader& r) {
  StatusMsg m;
  m.stamp = r.i64();
  m.vehicle = r.u16();
  m.mode = static_cast<FlightMode>(r.u8());
  m.offboard_starved = r.u8() != 0;
  m.last_cmd_seq = r.u32();
  m.last_cmd_accepted = r.u8() != 0;
  m.last_cmd_reason = r.str8();
  return m;
}

std::vector<uint8_t> LocalPositionMsg::encode() const {
  std::vector<uint8_t> out;
  io::Writer w(out);
  w.i64(stamp);
  put_vec3(w, position);
  put_vec3(w, velocity);
  w.f64(yaw);
  return out;
}

LocalPositionMsg LocalPositionMsg::decode(io::Reader& r) {
  LocalPositionMsg m;
  m.stamp = r.i64();
  m.position = get_vec3(r);
  m.velocity = get_vec3(r);
  m.yaw = r.f64();
  return m;
}

std::vector<uint8_t> HeartbeatMsg::encode() const {
  std::vector<uint8_t> out;
  io::Writer w(out);
  w.i64(stamp);
  w.u16(vehicle);
  w.u8(static_cast<uint8_t>(mode));
  put_vec3(w, position);
  put_vec3(w, velocity);
  w.f64(yaw);
  return out;
}

HeartbeatMsg HeartbeatMsg::decode(io::Reader& r) {
  HeartbeatMsg m;
  m.stamp = r.i64();
  m.vehicle = r.u16();
  m.mode = static_cast<FlightMode>(r.u8());
  m.position = get_vec3(r);
  m.velocity = get_vec3(r);
  m.yaw = r.f64();
  return m;
}

std::vector<uint8_t> CommandMsg::encode() const {
  std::vector<uint8_t> out;
  io::Writer w(out);
  w.u32(cmd_seq);
  w.u8(static_cast<uint8_t>(kind));
  w.u8(static_cast<uint8_t>(mode));
  w.f64(takeoff_alt_m);
  put_vec3(w, orbit_center);
  w.f64(orbit_radius_m);
  w.f64(orbit_speed_mps);
  w.u8(has_heading ? 1 : 0);
  w.f64(heading_rad);
  put_vec3(w, reposition_target);
  w.u8(static_cast<uint8_t>(offboard_mode));
  return out;
}

CommandMsg CommandMsg::decode(io::Reader& r) {
  CommandMsg m;
  m.cmd_seq = r.u32();
  m.kind = static_cast<CommandKind>(r.u8());
  m.mode = static_cast<ModeRequest>(r.u8());
  m.takeoff_alt_m = r.f64();
  m.orbit_center = get_vec3(r);
  m.orbit_radius_m = r.f64();
  m.orbit_speed_mps = r.f64();
  m.has_heading = r.u8() != 0;
  m.heading_rad = r.f64();
  m.reposition_target = get_vec3(r);
  m.offboard_mode = static_cast<SetpointMode>(r.u8());
  return m;
}

std::vector<uint8_t> Ack::encode() const {
  std::vector<uint8_t> out;
  io::Writer w(out);
  w.u32(cmd_seq);
  w.u8(accepted ? 1 : 0);
  w.str8(reason);
  return out;
}

Ack Ack::decode(io::Reader& r) {
  Ack a;
  a.cmd_seq = r.u32();
  a.accepted = r.u8() != 0;
  a.reason = r.str8();
  return a;
}

std::vector<uint8_t> VehicleStateMsg::encode() const {
  std::vector<uint8_t> out;
  io::Writer w(out);
  w.i64(stamp);
  w.u16(vehicle);
  w.u8(static_cast<uint8_t>(mode));
  put_vec3(w, position);
  put_vec3(w, velocity);
  put_quat(w, attitude);
  return out;
}

VehicleStateMsg VehicleStateMsg::decode(io::Reader& r) {
  VehicleStateMsg m;
  m.stamp = r.i64();
  m.vehicle = r.u16();
  m.mode = static_cast<FlightMode>(r.u8());
  m.position = get_vec3(r);
  m.velocity = get_vec3(r);
  m.attitude = get_quat(r);
  return m;
}

}  // namespace sky::fw
