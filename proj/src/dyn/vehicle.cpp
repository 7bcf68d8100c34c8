#include "sky/dyn/vehicle.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace sky::dyn {

void VehicleParams::validate() const {
  if (mass <= 0.0) throw std::invalid_argument("mass must be positive");
  if (kind == AirframeKind::Multicopter && max_thrust <= mass * kGravity)
    throw std::invalid_argument("multicopter max_thrust must exceed weight");
  if (kind == AirframeKind::QuadPlaneVtol) {
    if (!(fw_stall_speed < transition_airspeed && transition_airspeed <= fw_cruise_speed))
      throw std::invalid_argument("need fw_stall < transition_airspeed <= fw_cruise");
  }
  if (tau_rate <= 0.0) throw std::invalid_argument("tau_rate must be positive");
}

VehicleParams VehicleParams::preset(const std::string& name) {
  VehicleParams p;
  if (name == "x500") {
    p.kind = AirframeKind::Multicopter;
    p.mass = 1.5;
    p.max_thrust = 29.43;
    p.linear_drag = {0.25, 0.25, 0.35};
  } else if (name == "iris") {
    p.kind = AirframeKind::Multicopter;
    p.mass = 1.55;
    p.max_thrust = 30.4;
    p.linear_drag = {0.28, 0.28, 0.38};
  } else if (name == "standard_vtol") {
    p.kind = AirframeKind::QuadPlaneVtol;
    p.mass = 5.0;
    p.max_thrust = 98.1;
    p.linear_drag = {0.5, 0.5, 0.8};
    p.max_pusher_thrust = 30.0;
  } else if (name == "alti_transition") {
    p.kind = AirframeKind::QuadPlaneVtol;
    p.mass = 6.5;
    p.max_thrust = 127.5;
    p.linear_drag = {0.6, 0.6, 0.9};
    p.max_pusher_thrust = 40.0;
  } else {
    throw std::invalid_argument("unknown vehicle preset " + name);
  }
  p.validate();
  return p;
}

VehicleParams VehicleParams::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vehicle params " + path);
  nlohmann::json j;
  in >> j;

  VehicleParams p;
  const std::string kind = j.value("kind", "Multicopter");
  if (kind == "Multicopter")
    p.kind = AirframeKind::Multicopter;
  else if (kind == "QuadPlaneVtol")
    p.kind = AirframeKind::QuadPlaneVtol;
  else
    throw std::invalid_argument("kind must be Multicopter or QuadPlaneVtol");
  p.mass = j.at("mass").get<double>();
  p.max_thrust = j.at("max_thrust").get<double>();
  if (j.contains("linear_drag")) {
    const auto& d = j["linear_drag"];
    p.linear_drag = {d.at(0).get<double>(), d.at(1).get<double>(), d.at(2).get<double>()};
  }
  p.fw_cruise_speed = j.value("fw_cruise_speed", p.fw_cruise_speed);
  p.fw_stall_speed = j.value("fw_stall_speed", p.fw_stall_speed);
  p.transition_airspeed = j.value("transition_airspeed", p.transition_airspeed);
  p.max_pusher_thrust = j.value("max_pusher_thrust", p.max_pusher_thrust);
  p.tau_rate = j.value("tau_rate", p.tau_rate);
  p.validate();
  return p;
}

namespace {

// Track commanded body rates through the first-order actuator lag, integrate
// attitude, renormalize.
void integrate_rotation(RigidBodyState& next, const RigidBodyState& state,
                        const ActuatorCommand& cmd, const VehicleParams& params,
                        double dt) {
  const double alpha = 1.0 - std::exp(-dt / params.tau_rate);
  next.body_rate = state.body_rate + (cmd.body_rate_cmd - state.body_rate) * alpha;

  const double angle = next.body_rate.norm() * dt;
  if (angle > 0.0) {
    const Quat dq = Quat::from_axis_angle(next.body_rate, angle);
    next.attitude = (state.attitude * dq).normalized();
  } else {
    next.attitude = state.attitude.normalized();
  }
}

void integrate_translation(RigidBodyState& next, const RigidBodyState& state,
                           const Vec3& accel, double dt) {
  next.velocity = state.velocity + accel * dt;
  next.position = state.position + next.velocity * dt;

  // Ground contact: never below terrain, full stop on touchdown.
  if (next.position.z >= 0.0) {
    next.position.z = 0.0;
    if (state.position.z >= 0.0 || next.velocity.z > 0.0) {
      next.velocity = Vec3{};
      next.body_rate = Vec3{};
    }
  }
}

void check_finite(const RigidBodyState& s, const char* what) {
  if (!s.finite()) throw NonFiniteState(std::string("non-finite state after ") + what);
}

double clamp01(double v) { return clampd(v, 0.0, 1.0); }

}  // namespace

RigidBodyState step_multicopter(const RigidBodyState& state, const ActuatorCommand& cmd,
                                const VehicleParams& params, double dt) {
  RigidBodyState next;
  integrate_rotation(next, state, cmd, params, dt);

  const double thrust = clampd(cmd.collective_thrust, 0.0, params.max_thrust);
  const Vec3 thrust_accel =
      next.attitude.rotate(Vec3{0.0, 0.0, -thrust}) / params.mass;
  const Vec3 drag_accel = params.linear_drag.cwise(state.velocity) / params.mass;
  const Vec3 accel = Vec3{0.0, 0.0, kGravity} + thrust_accel - drag_accel;

  integrate_translation(next, state, accel, dt);
  check_finite(next, "multicopter step");
  return next;
}

RigidBodyState step_vtol(const RigidBodyState& state, const ActuatorCommand& cmd,
                         const VehicleParams& params, double dt) {
  if (cmd.mode_flag == VtolModeFlag::MC) return step_multicopter(state, cmd, params, dt);

  RigidBodyState next;
  integrate_rotation(next, state, cmd, params, dt);

  const double airspeed = state.velocity.norm();
  // Wing lift cancels gravity at or above stall, linearly scaled below.
  const double lift = clamp01(airspeed / params.fw_stall_speed);
  // Lift-motor authority blends out as airspeed approaches the transition
  // speed; zero in pure FW flight.
  double mc_authority = 0.0;
  if (cmd.mode_flag == VtolModeFlag::TransitionToFW ||
      cmd.mode_flag == VtolModeFlag::TransitionToMC)
    mc_authority = clamp01(1.0 - airspeed / params.transition_airspeed);

  const double collective =
      clampd(cmd.collective_thrust, 0.0, params.max_thrust) * mc_authority;
  const double pusher = clampd(cmd.pusher_thrust, 0.0, params.max_pusher_thrust);

  Vec3 accel = Vec3{0.0, 0.0, kGravity * (1.0 - lift)};
  accel += next.attitude.rotate(Vec3{0.0, 0.0, -collective}) / params.mass;
  accel += next.attitude.rotate(Vec3{pusher, 0.0, 0.0}) / params.mass;
  accel -= params.linear_drag.cwise(state.velocity) / params.mass;

  // Coordinated-turn kinematics: the wing rotates the velocity vector with
  // the yaw rate, and pitch commands a climb-rate target.
  const Vec3 omega_world = next.attitude.rotate(next.body_rate);
  const Vec3 v_h{state.velocity.x, state.velocity.y, 0.0};
  accel += lift * Vec3{0.0, 0.0, omega_world.z}.cross(v_h);

  const Vec3 x_body = next.attitude.rotate(Vec3{1.0, 0.0, 0.0});
  const double sin_pitch = clampd(-x_body.z, -1.0, 1.0);
  const double vz_target = -v_h.norm() * sin_pitch;
  constexpr double kTauClimb = 1.0;  // s
  accel.z += lift * (vz_target - state.velocity.z) / kTauClimb;

  integrate_translation(next, state, accel, dt);
  check_finite(next, "vtol step");
  return next;
}

RigidBodyState step(const RigidBodyState& state, const ActuatorCommand& cmd,
                    const VehicleParams& params, double dt) {
  return params.kind == AirframeKind::Multicopter
             ? step_multicopter(state, cmd, params, dt)
             : step_vtol(state, cmd, params, dt);
}

GroundTruth truth_sample(const RigidBodyState& state, const TruthNoise& noise, Rng& rng) {
  GroundTruth g{state.position, state.velocity, state.attitude};
  if (noise.sigma_pos > 0.0) {
    g.position.x += rng.normal(0.0, noise.sigma_pos);
    g.position.y += rng.normal(0.0, noise.sigma_pos);
    g.position.z += rng.normal(0.0, noise.sigma_pos);
  }
  if (noise.sigma_vel > 0.0) {
    g.velocity.x += rng.normal(0.0, noise.sigma_vel);
    g.velocity.y += rng.normal(0.0, noise.sigma_vel);
    g.velocity.z += rng.normal(0.0, noise.sigma_vel);
  }
  return g;
}

}  // namespace sky::dyn
