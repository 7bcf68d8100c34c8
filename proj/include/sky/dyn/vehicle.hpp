#pragma once

// Simplified 6-DOF rigid-body models for the two supported airframe classes,
// stepped at the physics rate with a semi-implicit Euler integrator
// (velocity first). NED local frame, down positive, ground plane at z = 0.

#include <stdexcept>
#include <string>

#include "sky/math.hpp"
#include "sky/rng.hpp"

namespace sky::dyn {

struct NonFiniteState : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class AirframeKind : uint8_t { Multicopter, QuadPlaneVtol };

struct RigidBodyState {
  Vec3 position;   // m, NED
  Vec3 velocity;   // m/s, NED
  Quat attitude;   // body -> NED
  Vec3 body_rate;  // rad/s, body frame

  bool finite() const {
    return position.finite() && velocity.finite() && attitude.finite() &&
           body_rate.finite();
  }
};

struct VehicleParams {
  AirframeKind kind{AirframeKind::Multicopter};
  double mass{1.5};            // kg
  double max_thrust{29.43};    // N, collective lift
  Vec3 linear_drag{0.25, 0.25, 0.35};  // N*s/m per axis (world frame)
  double fw_cruise_speed{20.0};        // m/s
  double fw_stall_speed{12.0};         // m/s
  double transition_airspeed{14.0};    // m/s
  double max_pusher_thrust{30.0};      // N (VTOL only)
  double tau_rate{0.05};               // s, body-rate tracking lag

  void validate() const;

  // Shipped presets: x500, iris, standard_vtol, alti_transition.
  static VehicleParams preset(const std::string& name);
  static VehicleParams from_json_file(const std::string& path);
};

enum class VtolModeFlag : uint8_t { MC, FW, TransitionToFW, TransitionToMC };

struct ActuatorCommand {
  double collective_thrust{0.0};  // N along -body_z
  Vec3 body_rate_cmd;             // rad/s, tracked through a first-order lag
  double pusher_thrust{0.0};      // N along +body_x (VTOL only)
  VtolModeFlag mode_flag{VtolModeFlag::MC};
};

RigidBodyState step_multicopter(const RigidBodyState& state, const ActuatorCommand& cmd,
                                const VehicleParams& params, double dt);

RigidBodyState step_vtol(const RigidBodyState& state, const ActuatorCommand& cmd,
                         const VehicleParams& params, double dt);

// Dispatches on params.kind.
RigidBodyState step(const RigidBodyState& state, const ActuatorCommand& cmd,
                    const VehicleParams& params, double dt);

struct GroundTruth {
  Vec3 position;
  Vec3 velocity;
  Quat attitude;
};

struct TruthNoise {
  double sigma_pos{0.0};  // m per axis
  double sigma_vel{0.0};  // m/s per axis
};

// The estimator stand-in: truth, optionally perturbed per-axis by seeded
// Gaussian noise from the caller's stream.
GroundTruth truth_sample(const RigidBodyState& state, const TruthNoise& noise, Rng& rng);

}  // namespace sky::dyn
