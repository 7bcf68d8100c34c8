#pragma once

// In-repo firmware flavors. Flavor A speaks streaming-setpoint semantics
// (status/local_position/setpoint_in topics, offboard keepalive); flavor B
// speaks command/ack guided semantics (explicit acks, latched targets, 1 Hz
// heartbeat). Both run the same mode machine and cascaded controllers at
// their native physics rate.

#include <optional>

#include "sky/dyn/vehicle.hpp"
#include "sky/fw/msgs.hpp"
#include "sky/net/network.hpp"
#include "sky/sim/kernel.hpp"

namespace sky::fw {

enum class Flavor : uint8_t { A = 0, B = 1 };

struct FlavorConfig {
  Flavor flavor{Flavor::A};
  int64_t control_dt_ns{sim::kDtFlavorA};
  double offboard_keepalive_hz{2.0};    // flavor A only
  int64_t guided_ack_timeout_ms{500};   // flavor B only

  static FlavorConfig for_flavor(Flavor f) {
    FlavorConfig c;
    c.flavor = f;
    c.control_dt_ns = (f == Flavor::A) ? sim::kDtFlavorA : sim::kDtFlavorB;
    return c;
  }
};

struct ControllerGains {
  double pos_p{1.5};                  // 1/s
  double vel_p{3.0};                  // 1/s
  double vel_i{0.4};                  // 1/s^2
  double yaw_p{2.5};                  // 1/s
  double accel_to_tilt_limit{0.6};    // rad
};

struct NavigatorState {
  Vec3 orbit_center;        // NED; z is the hold altitude (down negative)
  double orbit_radius{0.0};
  double orbit_speed{0.0};
  Vec3 reposition_target;
  double takeoff_alt{0.0};  // meters above ground (positive up)
  Vec3 loiter_point;
  double loiter_yaw{0.0};
  Vec3 land_point;
  double transition_heading{0.0};
};

bool mode_transition_legal(FlightMode from, FlightMode to);
bool mode_is_airborne(FlightMode m);
bool mode_is_fixed_wing(FlightMode m);

class Firmware {
 public:
  Firmware(uint16_t vehicle_id, FlavorConfig cfg, dyn::VehicleParams params,
           ControllerGains gains);

  // Optional transport attachment; without it the firmware is silent and
  // commands go through handle_command directly (unit tests).
  void attach_network(net::Network* net, net::NodeId self);

  // One control tick. The estimate is this tick's sensor view of truth.
  dyn::ActuatorCommand step(const dyn::GroundTruth& estimate, sim::SimTime now);

  Ack handle_command(const CommandMsg& cmd, sim::SimTime now, net::NodeId reply_to = 0);
  void handle_setpoint(const Setpoint& sp, sim::SimTime now);
  // Drains the firmware's inbox (command/set_target/setpoint_in envelopes).
  void poll_transport(sim::SimTime now);

  FlightMode mode() const { return mode_; }
  const NavigatorState& nav() const { return nav_; }
  bool offboard_starved() const { return starved_; }
  uint16_t vehicle_id() const { return vehicle_id_; }
  Flavor flavor() const { return cfg_.flavor; }
  const dyn::VehicleParams& params() const { return params_; }

  // Observed mode changes, e.g. for logging: (from, to, sim time).
  using ModeHook = std::function<void(FlightMode, FlightMode, sim::SimTime)>;
  void on_mode_change(ModeHook hook) { mode_hook_ = std::move(hook); }

 private:
  void switch_mode(FlightMode to, sim::SimTime now);
  void auto_transitions(sim::SimTime now);
  dyn::ActuatorCommand control(sim::SimTime now);

  // Cascade stages.
  dyn::ActuatorCommand cascade_position(const Vec3& pos_target, const Vec3& vel_ff,
                                        double yaw_sp, double dt);
  dyn::ActuatorCommand cascade_velocity(const Vec3& vel_sp, const Vec3& accel_ff,
                                        double yaw_sp, double dt);
  dyn::ActuatorCommand cascade_acceleration(const Vec3& accel_sp, double yaw_sp,
                                            double dt);
  dyn::ActuatorCommand attitude_to_rates(const Quat& att_sp, double thrust) const;
  dyn::ActuatorCommand fixed_wing_control(double dt);
  dyn::ActuatorCommand transition_control(sim::SimTime now, double dt);
  dyn::ActuatorCommand offboard_control(double dt);

  void publish_streams(sim::SimTime now);

  uint16_t vehicle_id_;
  FlavorConfig cfg_;
  dyn::VehicleParams params_;
  ControllerGains gains_;

  FlightMode mode_{FlightMode::Disarmed};
  NavigatorState nav_;
  dyn::GroundTruth est_;
  bool have_estimate_{false};

  Vec3 vel_integ_;
  double pusher_integ_{0.0};

  std::optional<Setpoint> offboard_sp_;
  sim::SimTime offboard_deadline_ns_{0};
  double offboard_yaw_{0.0};
  bool starved_{false};

  bool transition_yaw_done_{false};

  StatusMsg status_;
  ModeHook mode_hook_;

  net::Network* net_{nullptr};
  net::NodeId self_{0};
};

}  // namespace sky::fw
