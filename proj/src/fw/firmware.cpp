#include "sky/fw/firmware.hpp"

#include <cmath>

namespace sky::fw {

namespace {

// Inner-loop constants shared by both flavors; the per-airframe knobs live in
// ControllerGains.
constexpr double kAttP = 9.0;           // 1/s, tilt-axis attitude loop
constexpr double kMaxTiltRate = 3.5;    // rad/s
constexpr double kMaxYawRate = 2.0;     // rad/s
constexpr double kVmaxHorizontal = 12.0;  // m/s
constexpr double kVmaxClimb = 3.0;        // m/s (up)
constexpr double kVmaxDescent = 1.5;      // m/s (down)
constexpr double kAccelMaxH = 8.0;        // m/s^2
constexpr double kLandSpeed = 1.2;        // m/s
constexpr double kMinUpForce = 0.5;       // m/s^2, keep the thrust vector up
constexpr double kIntegClamp = 3.0;       // m/s^2 per axis

// Fixed-wing guidance constants.
constexpr double kFwHeadingP = 1.2;
constexpr double kFwCrossTrack = 0.03;  // rad per meter of radial error
constexpr double kFwPitchP = 4.0;
constexpr double kFwPitchLimit = 0.35;  // rad
constexpr double kFwPusherP = 2.0;
constexpr double kFwPusherI = 0.5;

Quat quat_from_axes(const Vec3& xb, const Vec3& yb, const Vec3& zb) {
  const double m00 = xb.x, m01 = yb.x, m02 = zb.x;
  const double m10 = xb.y, m11 = yb.y, m12 = zb.y;
  const double m20 = xb.z, m21 = yb.z, m22 = zb.z;
  const double tr = m00 + m11 + m22;
  Quat q;
  if (tr > 0.0) {
    const double s = std::sqrt(tr + 1.0) * 2.0;
    q = {0.25 * s, (m21 - m12) / s, (m02 - m20) / s, (m10 - m01) / s};
  } else if (m00 > m11 && m00 > m22) {
    const double s = std::sqrt(1.0 + m00 - m11 - m22) * 2.0;
    q = {(m21 - m12) / s, 0.25 * s, (m01 + m10) / s, (m02 + m20) / s};
  } else if (m11 > m22) {
    const double s = std::sqrt(1.0 + m11 - m00 - m22) * 2.0;
    q = {(m02 - m20) / s, (m01 + m10) / s, 0.25 * s, (m12 + m21) / s};
  } else {
    const double s = std::sqrt(1.0 + m22 - m00 - m11) * 2.0;
    q = {(m10 - m01) / s, (m02 + m20) / s, (m12 + m21) / s, 0.25 * s};
  }
  return q.normalized();
}

Quat attitude_from_thrust_dir(const Vec3& zb_unit, double yaw) {
  const Vec3 x_c{std::cos(yaw), std::sin(yaw), 0.0};
  Vec3 y_b = zb_unit.cross(x_c);
  if (y_b.norm() < 1e-6) y_b = zb_unit.cross(Vec3{-std::sin(yaw), std::cos(yaw), 0.0});
  y_b = y_b.normalized();
  const Vec3 x_b = y_b.cross(zb_unit);
  return quat_from_axes(x_b, y_b, zb_unit);
}

Vec3 clamp_horizontal(Vec3 v, double max_h) {
  const double h = v.norm_xy();
  if (h > max_h) {
    const double s = max_h / h;
    v.x *= s;
    v.y *= s;
  }
  return v;
}

}  // namespace

bool mode_is_airborne(FlightMode m) {
  switch (m) {
    case FlightMode::TakingOff:
    case FlightMode::Loiter:
    case FlightMode::OrbitNav:
    case FlightMode::OffboardActive:
    case FlightMode::RepositionNav:
    case FlightMode::TransitionFW:
    case FlightMode::TransitionMC:
    case FlightMode::FixedWingCruise:
    case FlightMode::LandingDescent:
      return true;
    default:
      return false;
  }
}

bool mode_is_fixed_wing(FlightMode m) {
  return m == FlightMode::TransitionFW || m == FlightMode::TransitionMC ||
         m == FlightMode::FixedWingCruise;
}

bool mode_transition_legal(FlightMode from, FlightMode to) {
  if (from == to) return true;
  using M = FlightMode;
  switch (from) {
    case M::Disarmed:
      return to == M::ArmedIdle;
    case M::ArmedIdle:
      return to == M::Disarmed || to == M::TakingOff;
    case M::TakingOff:
      return to == M::Loiter || to == M::LandingDescent;
    case M::Loiter:
      return to == M::OrbitNav || to == M::OffboardActive || to == M::RepositionNav ||
             to == M::LandingDescent || to == M::TransitionFW;
    case M::OrbitNav:
      return to == M::Loiter || to == M::RepositionNav || to == M::OffboardActive ||
             to == M::LandingDescent;
    case M::RepositionNav:
      return to == M::Loiter || to == M::OrbitNav || to == M::OffboardActive ||
             to == M::LandingDescent;
    case M::OffboardActive:
      return to == M::Loiter || to == M::LandingDescent;
    case M::TransitionFW:
      return to == M::FixedWingCruise;
    case M::TransitionMC:
      return to == M::Loiter;
    case M::FixedWingCruise:
      return to == M::TransitionMC;
    case M::LandingDescent:
      return to == M::Landed;
    case M::Landed:
      return to == M::Disarmed || to == M::ArmedIdle;
  }
  return false;
}

Firmware::Firmware(uint16_t vehicle_id, FlavorConfig cfg, dyn::VehicleParams params,
                   ControllerGains gains)
    : vehicle_id_(vehicle_id), cfg_(cfg), params_(std::move(params)), gains_(gains) {
  params_.validate();
  status_.vehicle = vehicle_id_;
}

void Firmware::attach_network(net::Network* net, net::NodeId self) {
  net_ = net;
  self_ = self;
}

void Firmware::switch_mode(FlightMode to, sim::SimTime now) {
  if (to == mode_) return;
  if (!mode_transition_legal(mode_, to))
    throw sim::SimError(std::string("illegal mode transition ") + to_string(mode_) +
                        " -> " + to_string(to));
  const FlightMode from = mode_;
  mode_ = to;
  vel_integ_ = Vec3{};
  if (to == FlightMode::Loiter && have_estimate_) {
    nav_.loiter_point = est_.position;
    nav_.loiter_yaw = est_.attitude.yaw();
    nav_.orbit_radius = 0.0;
  }
  if (to == FlightMode::TransitionFW) transition_yaw_done_ = false;
  if (mode_hook_) mode_hook_(from, to, now);
}

Ack Firmware::handle_command(const CommandMsg& cmd, sim::SimTime now,
                             net::NodeId reply_to) {
  Ack ack;
  ack.cmd_seq = cmd.cmd_seq;
  ack.accepted = false;

  const bool vtol = params_.kind == dyn::AirframeKind::QuadPlaneVtol;
  const bool airborne_mc = mode_ == FlightMode::Loiter || mode_ == FlightMode::OrbitNav ||
                           mode_ == FlightMode::RepositionNav;

  switch (cmd.kind) {
    case CommandKind::Arm:
      if (mode_ == FlightMode::Disarmed || mode_ == FlightMode::Landed) {
        switch_mode(FlightMode::ArmedIdle, now);
        ack.accepted = true;
      } else {
        ack.reason = mode_ == FlightMode::ArmedIdle ? "already armed" : "in-air";
      }
      break;

    case CommandKind::Disarm:
      if (mode_ == FlightMode::ArmedIdle || mode_ == FlightMode::Landed) {
        switch_mode(FlightMode::Disarmed, now);
        ack.accepted = true;
      } else {
        ack.reason = "in-air";
      }
      break;

    case CommandKind::RepositionTo:
      if (!mode_is_airborne(mode_)) {
        ack.reason = mode_ == FlightMode::Disarmed ? "not armed" : "not airborne";
      } else if (vtol && mode_is_fixed_wing(mode_)) {
        ack.reason = "wrong-airframe";
      } else if (!airborne_mc) {
        ack.reason = "busy";
      } else if (!cmd.reposition_target.finite() || cmd.reposition_target.z > 0.0) {
        ack.reason = "invalid target";
      } else {
        nav_.reposition_target = cmd.reposition_target;
        switch_mode(FlightMode::RepositionNav, now);
        ack.accepted = true;
      }
      break;

    case CommandKind::StartMission:
      if (mode_ == FlightMode::Disarmed) {
        ack.reason = "not armed";
      } else {
        ack.accepted = true;
      }
      break;

    case CommandKind::SetMode:
      switch (cmd.mode) {
        case ModeRequest::Takeoff:
          if (mode_ != FlightMode::ArmedIdle) {
            ack.reason = mode_ == FlightMode::Disarmed ? "not armed" : "busy/in-air";
          } else if (!(cmd.takeoff_alt_m > 0.0) || !std::isfinite(cmd.takeoff_alt_m)) {
            ack.reason = "invalid altitude";
          } else {
            nav_.takeoff_alt = cmd.takeoff_alt_m;
            nav_.loiter_point = est_.position;
            nav_.loiter_yaw = est_.attitude.yaw();
            switch_mode(FlightMode::TakingOff, now);
            ack.accepted = true;
          }
          break;

        case ModeRequest::Orbit: {
          const bool valid = cmd.orbit_radius_m > 0.0 && cmd.orbit_speed_mps > 0.0 &&
                             cmd.orbit_center.finite();
          if (!valid) {
            ack.reason = "invalid orbit";
          } else if (airborne_mc) {
            nav_.orbit_center = {cmd.orbit_center.x, cmd.orbit_center.y,
                                 -cmd.orbit_center.z};
            nav_.orbit_radius = cmd.orbit_radius_m;
            nav_.orbit_speed = cmd.orbit_speed_mps;
            switch_mode(FlightMode::OrbitNav, now);
            ack.accepted = true;
          } else if (mode_ == FlightMode::FixedWingCruise) {
            // Parking loiter: the cruise navigator circles the given center.
            nav_.orbit_center = {cmd.orbit_center.x, cmd.orbit_center.y,
                                 -cmd.orbit_center.z};
            nav_.orbit_radius = cmd.orbit_radius_m;
            nav_.orbit_speed = cmd.orbit_speed_mps;
            ack.accepted = true;
          } else {
            ack.reason = mode_ == FlightMode::Disarmed ? "not armed" : "not airborne";
          }
          break;
        }

        case ModeRequest::Land:
          if (mode_is_fixed_wing(mode_)) {
            ack.reason = "transition to MC first";
          } else if (mode_is_airborne(mode_)) {
            nav_.land_point = est_.position;
            switch_mode(FlightMode::LandingDescent, now);
            ack.accepted = true;
          } else {
            ack.reason = mode_ == FlightMode::Disarmed ? "not armed" : "not airborne";
          }
          break;

        case ModeRequest::Loiter:
          if (mode_ == FlightMode::Loiter) {
            ack.accepted = true;
          } else if (mode_is_fixed_wing(mode_)) {
            ack.reason = "transition to MC first";
          } else if (mode_is_airborne(mode_)) {
            switch_mode(FlightMode::Loiter, now);
            ack.accepted = true;
          } else {
            ack.reason = mode_ == FlightMode::Disarmed ? "not armed" : "not airborne";
          }
          break;

        case ModeRequest::TransitionFW:
          if (!vtol) {
            ack.reason = "wrong-airframe";
          } else if (mode_ != FlightMode::Loiter) {
            ack.reason = "must be loitering";
          } else {
            nav_.transition_heading =
                cmd.has_heading ? cmd.heading_rad : est_.attitude.yaw();
            switch_mode(FlightMode::TransitionFW, now);
            ack.accepted = true;
          }
          break;

        case ModeRequest::TransitionMC:
          if (!vtol) {
            ack.reason = "wrong-airframe";
          } else if (mode_ != FlightMode::FixedWingCruise) {
            ack.reason = "not in cruise";
          } else {
            nav_.transition_heading =
                cmd.has_heading ? cmd.heading_rad : est_.attitude.yaw();
            switch_mode(FlightMode::TransitionMC, now);
            ack.accepted = true;
          }
          break;

        case ModeRequest::OffboardStart:
          if (!airborne_mc) {
            ack.reason = mode_is_airborne(mode_) ? "busy" : "not airborne";
          } else if (cfg_.flavor == Flavor::A &&
                     !setpoint_mode_native_to_flavor_a(cmd.offboard_mode)) {
            ack.reason = "mode unsupported by flavor";
          } else if (cfg_.flavor == Flavor::B &&
                     setpoint_mode_native_to_flavor_a(cmd.offboard_mode)) {
            ack.reason = "mode unsupported by flavor";
          } else {
            offboard_sp_.reset();
            starved_ = false;
            offboard_yaw_ = est_.attitude.yaw();
            offboard_deadline_ns_ =
                now + static_cast<int64_t>(1e9 / cfg_.offboard_keepalive_hz);
            switch_mode(FlightMode::OffboardActive, now);
            ack.accepted = true;
          }
          break;

        case ModeRequest::OffboardStop:
          if (mode_ == FlightMode::OffboardActive) {
            switch_mode(FlightMode::Loiter, now);
            ack.accepted = true;
          } else {
            ack.reason = "offboard not active";
          }
          break;
      }
      break;
  }

  status_.last_cmd_seq = cmd.cmd_seq;
  status_.last_cmd_accepted = ack.accepted;
  status_.last_cmd_reason = ack.reason;

  // Flavor B replies with an explicit ack; flavor A reflects the result in
  // the streamed status only.
  if (cfg_.flavor == Flavor::B && net_ && reply_to != 0)
    net_->unicast(self_, reply_to, kTopicCommandAck, ack.encode(), now, net::kSimLink);
  return ack;
}

void Firmware::handle_setpoint(const Setpoint& sp, sim::SimTime now) {
  if (!sp.finite()) return;
  offboard_sp_ = sp;
  if (cfg_.flavor == Flavor::A)
    offboard_deadline_ns_ = now + static_cast<int64_t>(1e9 / cfg_.offboard_keepalive_hz);
}

void Firmware::poll_transport(sim::SimTime now) {
  if (!net_) return;
  auto& in = net_->inbox(self_);
  while (!in.empty()) {
    net::Envelope env = std::move(in.front());
    in.pop_front();
    io::Reader r(env.payload);
    if (env.topic == kTopicCommand) {
      handle_command(CommandMsg::decode(r), now, env.src);
    } else if (env.topic == kTopicSetpointIn && cfg_.flavor == Flavor::A) {
      handle_setpoint(Setpoint::decode(r), now);
    } else if (env.topic == kTopicSetTarget && cfg_.flavor == Flavor::B) {
      const Setpoint sp = Setpoint::decode(r);
      Ack ack;
      ack.accepted = sp.finite() && !setpoint_mode_native_to_flavor_a(sp.mode);
      if (ack.accepted)
        handle_setpoint(sp, now);
      else
        ack.reason = "bad target";
      net_->unicast(self_, env.src, kTopicSetTargetAck, ack.encode(), now,
                    net::kSimLink);
    }
  }
}

void Firmware::auto_transitions(sim::SimTime now) {
  const double airspeed = est_.velocity.norm();
  switch (mode_) {
    case FlightMode::Landed:
      switch_mode(FlightMode::Disarmed, now);
      break;
    case FlightMode::TakingOff: {
      const double alt_err = std::abs(-est_.position.z - nav_.takeoff_alt);
      if (alt_err < 0.3 && std::abs(est_.velocity.z) < 0.3) {
        switch_mode(FlightMode::Loiter, now);
        nav_.loiter_point = {nav_.loiter_point.x, nav_.loiter_point.y,
                             -nav_.takeoff_alt};
      }
      break;
    }
    case FlightMode::RepositionNav: {
      const double dist = (nav_.reposition_target - est_.position).norm();
      if (dist < 1.0 && est_.velocity.norm() < 0.5) {
        switch_mode(FlightMode::Loiter, now);
        nav_.loiter_point = nav_.reposition_target;
      }
      break;
    }
    case FlightMode::TransitionFW:
      if (airspeed >= params_.transition_airspeed)
        switch_mode(FlightMode::FixedWingCruise, now);
      break;
    case FlightMode::TransitionMC:
      if (airspeed < params_.fw_stall_speed) switch_mode(FlightMode::Loiter, now);
      break;
    case FlightMode::LandingDescent:
      if (est_.position.z > -0.05 && est_.velocity.norm() < 0.1)
        switch_mode(FlightMode::Landed, now);
      break;
    case FlightMode::OffboardActive:
      if (cfg_.flavor == Flavor::A && now > offboard_deadline_ns_) {
        starved_ = true;  // the keepalive failsafe: loiter, never disarm
        switch_mode(FlightMode::Loiter, now);
      }
      break;
    default:
      break;
  }
}

dyn::ActuatorCommand Firmware::attitude_to_rates(const Quat& att_sp,
                                                 double thrust) const {
  Quat err = est_.attitude.conjugate() * att_sp;
  if (err.w < 0.0) err = {-err.w, -err.x, -err.y, -err.z};
  dyn::ActuatorCommand cmd;
  cmd.body_rate_cmd = {2.0 * kAttP * err.x, 2.0 * kAttP * err.y,
                       2.0 * gains_.yaw_p * err.z};
  const double xy = cmd.body_rate_cmd.norm_xy();
  if (xy > kMaxTiltRate) {
    const double s = kMaxTiltRate / xy;
    cmd.body_rate_cmd.x *= s;
    cmd.body_rate_cmd.y *= s;
  }
  cmd.body_rate_cmd.z = clampd(cmd.body_rate_cmd.z, -kMaxYawRate, kMaxYawRate);
  cmd.collective_thrust = clampd(thrust, 0.0, params_.max_thrust);
  return cmd;
}

dyn::ActuatorCommand Firmware::cascade_acceleration(const Vec3& accel_sp_in,
                                                    double yaw_sp, double) {
  Vec3 accel_sp = clamp_horizontal(accel_sp_in, kAccelMaxH);
  accel_sp.z = clampd(accel_sp.z, -15.0, 8.0);

  // Specific force the thrust vector must supply.
  Vec3 f = accel_sp - Vec3{0.0, 0.0, kGravity};
  if (f.z > -kMinUpForce) f.z = -kMinUpForce;
  const double tan_limit = std::tan(gains_.accel_to_tilt_limit);
  const double max_h = std::abs(f.z) * tan_limit;
  f = clamp_horizontal(f, max_h);

  const double thrust = params_.mass * f.norm();
  const Vec3 zb = (f * -1.0).normalized();  // thrust acts along -body_z
  const Quat att_sp = attitude_from_thrust_dir(zb, yaw_sp);
  return attitude_to_rates(att_sp, thrust);
}

dyn::ActuatorCommand Firmware::cascade_velocity(const Vec3& vel_sp_in,
                                                const Vec3& accel_ff, double yaw_sp,
                                                double dt) {
  Vec3 vel_sp = clamp_horizontal(vel_sp_in, kVmaxHorizontal);
  vel_sp.z = clampd(vel_sp.z, -kVmaxClimb, kVmaxDescent);

  const Vec3 err = vel_sp - est_.velocity;
  vel_integ_ += err * (gains_.vel_i * dt);
  vel_integ_.x = clampd(vel_integ_.x, -kIntegClamp, kIntegClamp);
  vel_integ_.y = clampd(vel_integ_.y, -kIntegClamp, kIntegClamp);
  vel_integ_.z = clampd(vel_integ_.z, -kIntegClamp, kIntegClamp);

  const Vec3 accel_sp = err * gains_.vel_p + vel_integ_ + accel_ff;
  return cascade_acceleration(accel_sp, yaw_sp, dt);
}

dyn::ActuatorCommand Firmware::cascade_position(const Vec3& pos_target,
                                                const Vec3& vel_ff, double yaw_sp,
                                                double dt) {
  const Vec3 vel_sp = (pos_target - est_.position) * gains_.pos_p + vel_ff;
  return cascade_velocity(vel_sp, Vec3{}, yaw_sp, dt);
}

dyn::ActuatorCommand Firmware::offboard_control(double dt) {
  if (!offboard_sp_) {
    // Grace window before the first setpoint: hold position.
    return cascade_position(nav_.loiter_point, Vec3{}, nav_.loiter_yaw, dt);
  }
  const Setpoint& sp = *offboard_sp_;
  switch (sp.mode) {
    case SetpointMode::Trajectory:
      return cascade_position(sp.position, sp.velocity, sp.yaw, dt);
    case SetpointMode::Velocity:
      offboard_yaw_ = wrap_pi(offboard_yaw_ + sp.yaw_rate * dt);
      return cascade_velocity(sp.velocity, Vec3{}, offboard_yaw_, dt);
    case SetpointMode::Acceleration:
      return cascade_acceleration(sp.acceleration, offboard_yaw_, dt);
    case SetpointMode::Attitude:
      return attitude_to_rates(sp.attitude.normalized(),
                               clampd(sp.thrust_norm, 0.0, 1.0) * params_.max_thrust);
    case SetpointMode::Rates: {
      dyn::ActuatorCommand cmd;
      cmd.body_rate_cmd = sp.body_rates;
      cmd.collective_thrust = clampd(sp.thrust_norm, 0.0, 1.0) * params_.max_thrust;
      return cmd;
    }
  }
  return {};
}

dyn::ActuatorCommand Firmware::fixed_wing_control(double dt) {
  const Vec3 v = est_.velocity;
  const double v_h = v.norm_xy();
  const double yaw = est_.attitude.yaw();
  const double course = v_h > 1.0 ? std::atan2(v.y, v.x) : yaw;

  double yaw_rate_cmd;
  double hold_z;
  if (nav_.orbit_radius > 0.0) {
    Vec3 d = est_.position - nav_.orbit_center;
    d.z = 0.0;
    double rho = d.norm();
    Vec3 u = rho > 1e-3 ? d / rho : Vec3{1.0, 0.0, 0.0};
    if (rho < 1e-3) rho = 1e-3;
    const Vec3 t = Vec3{0.0, 0.0, 1.0}.cross(u);
    const double course_tangent = std::atan2(t.y, t.x);
    const double correction =
        clampd(kFwCrossTrack * (rho - nav_.orbit_radius), -0.9, 0.9);
    const double course_des = course_tangent + correction;
    yaw_rate_cmd = kFwHeadingP * wrap_pi(course_des - course) +
                   v_h / std::max(rho, 10.0);
    hold_z = nav_.orbit_center.z;
  } else {
    yaw_rate_cmd = kFwHeadingP * wrap_pi(nav_.transition_heading - course);
    hold_z = nav_.loiter_point.z;
  }
  yaw_rate_cmd = clampd(yaw_rate_cmd, -1.0, 1.0);

  const double vz_sp = clampd(gains_.pos_p * (hold_z - est_.position.z), -3.0, 3.0);
  const Vec3 x_body = est_.attitude.rotate(Vec3{1.0, 0.0, 0.0});
  const double pitch = std::asin(clampd(-x_body.z, -1.0, 1.0));
  const double pitch_sp =
      clampd(std::asin(clampd(-vz_sp / std::max(v_h, 5.0), -0.45, 0.45)),
             -kFwPitchLimit, kFwPitchLimit);
  const Vec3 y_body = est_.attitude.rotate(Vec3{0.0, 1.0, 0.0});
  const double roll = std::asin(clampd(y_body.z, -1.0, 1.0));

  dyn::ActuatorCommand cmd;
  cmd.mode_flag = dyn::VtolModeFlag::FW;
  cmd.body_rate_cmd = {kFwPitchP * (0.0 - roll), kFwPitchP * (pitch_sp - pitch),
                       yaw_rate_cmd};

  const double speed_err = params_.fw_cruise_speed - v_h;
  pusher_integ_ = clampd(pusher_integ_ + kFwPusherI * speed_err * dt, 0.0,
                         params_.max_pusher_thrust);
  cmd.pusher_thrust =
      clampd(kFwPusherP * speed_err * params_.mass / 5.0 + pusher_integ_, 0.0,
             params_.max_pusher_thrust);
  cmd.collective_thrust = 0.0;
  return cmd;
}

dyn::ActuatorCommand Firmware::transition_control(sim::SimTime, double dt) {
  dyn::ActuatorCommand cmd;
  const double yaw = est_.attitude.yaw();

  if (mode_ == FlightMode::TransitionFW) {
    cmd.mode_flag = dyn::VtolModeFlag::TransitionToFW;
    if (!transition_yaw_done_) {
      if (std::abs(wrap_pi(nav_.transition_heading - yaw)) < 0.05) {
        transition_yaw_done_ = true;
      } else {
        // Yaw to the transition heading while holding position.
        cmd = cascade_position(nav_.loiter_point, Vec3{}, nav_.transition_heading, dt);
        cmd.mode_flag = dyn::VtolModeFlag::TransitionToFW;
        return cmd;
      }
    }
    // Pusher ramp: full forward thrust, altitude held on the lift motors,
    // wings level at the transition heading.
    const double vz_sp = clampd(gains_.pos_p * (nav_.loiter_point.z - est_.position.z),
                                -2.0, 2.0);
    const double az = gains_.vel_p * (vz_sp - est_.velocity.z);
    cmd = cascade_acceleration(Vec3{0.0, 0.0, az}, nav_.transition_heading, dt);
    cmd.mode_flag = dyn::VtolModeFlag::TransitionToFW;
    cmd.pusher_thrust = params_.max_pusher_thrust;
    return cmd;
  }

  // TransitionMC: cut the pusher, decelerate, blend the lift motors back in.
  cmd.mode_flag = dyn::VtolModeFlag::TransitionToMC;
  const double vz_sp = clampd(gains_.pos_p * (nav_.loiter_point.z - est_.position.z),
                              -2.0, 2.0);
  const double az = gains_.vel_p * (vz_sp - est_.velocity.z);
  cmd = cascade_acceleration(Vec3{0.0, 0.0, az}, nav_.transition_heading, dt);
  cmd.mode_flag = dyn::VtolModeFlag::TransitionToMC;
  cmd.pusher_thrust = 0.0;
  return cmd;
}

dyn::ActuatorCommand Firmware::control(sim::SimTime now) {
  const double dt = static_cast<double>(cfg_.control_dt_ns) * 1e-9;
  switch (mode_) {
    case FlightMode::Disarmed:
    case FlightMode::ArmedIdle:
    case FlightMode::Landed:
      return {};

    case FlightMode::TakingOff: {
      const Vec3 target{nav_.loiter_point.x, nav_.loiter_point.y, -nav_.takeoff_alt};
      return cascade_position(target, Vec3{}, nav_.loiter_yaw, dt);
    }

    case FlightMode::Loiter:
      return cascade_position(nav_.loiter_point, Vec3{}, nav_.loiter_yaw, dt);

    case FlightMode::OrbitNav: {
      Vec3 d = est_.position - nav_.orbit_center;
      d.z = 0.0;
      double rho = d.norm();
      const Vec3 u = rho > 1e-3 ? d / rho : Vec3{1.0, 0.0, 0.0};
      if (rho < 1e-3) rho = 1.0;
      const Vec3 tangent = Vec3{0.0, 0.0, 1.0}.cross(u);
      Vec3 vel_sp = tangent * nav_.orbit_speed +
                    u * (gains_.pos_p * (nav_.orbit_radius - rho));
      vel_sp.z = gains_.pos_p * (nav_.orbit_center.z - est_.position.z);
      const Vec3 accel_ff =
          u * (-(nav_.orbit_speed * nav_.orbit_speed) / std::max(rho, 1.0));
      // Multicopter orbit keeps the nose on the center.
      const double yaw_sp = std::atan2(-u.y, -u.x);
      return cascade_velocity(vel_sp, accel_ff, yaw_sp, dt);
    }

    case FlightMode::RepositionNav:
      return cascade_position(nav_.reposition_target, Vec3{}, nav_.loiter_yaw, dt);

    case FlightMode::OffboardActive:
      return offboard_control(dt);

    case FlightMode::LandingDescent: {
      Vec3 vel_sp{gains_.pos_p * (nav_.land_point.x - est_.position.x),
                  gains_.pos_p * (nav_.land_point.y - est_.position.y), kLandSpeed};
      return cascade_velocity(vel_sp, Vec3{}, nav_.loiter_yaw, dt);
    }

    case FlightMode::TransitionFW:
    case FlightMode::TransitionMC:
      return transition_control(now, dt);

    case FlightMode::FixedWingCruise:
      return fixed_wing_control(dt);
  }
  return {};
}

dyn::ActuatorCommand Firmware::step(const dyn::GroundTruth& estimate, sim::SimTime now) {
  if (!estimate.position.finite() || !estimate.velocity.finite() ||
      !estimate.attitude.finite())
    throw dyn::NonFiniteState("firmware received non-finite estimate");
  est_ = estimate;
  have_estimate_ = true;

  poll_transport(now);
  auto_transitions(now);
  dyn::ActuatorCommand cmd = control(now);
  if (params_.kind == dyn::AirframeKind::Multicopter)
    cmd.mode_flag = dyn::VtolModeFlag::MC;
  else if (mode_ == FlightMode::Loiter || mode_ == FlightMode::OrbitNav ||
           mode_ == FlightMode::RepositionNav || mode_ == FlightMode::OffboardActive ||
           mode_ == FlightMode::TakingOff || mode_ == FlightMode::LandingDescent ||
           !mode_is_airborne(mode_))
    cmd.mode_flag = dyn::VtolModeFlag::MC;

  publish_streams(now);
  return cmd;
}

void Firmware::publish_streams(sim::SimTime now) {
  if (!net_) return;
  status_.stamp = now;
  status_.mode = mode_;
  status_.offboard_starved = starved_;

  if (cfg_.flavor == Flavor::A) {
    if (now % 100'000'000 == 0) {
      net_->publish(self_, kTopicStatus, status_.encode(), now);
      LocalPositionMsg lp;
      lp.stamp = now;
      lp.position = est_.position;
      lp.velocity = est_.velocity;
      lp.yaw = est_.attitude.yaw();
      net_->publish(self_, kTopicLocalPosition, lp.encode(), now);
    }
  } else {
    if (now % 1'000'000'000 == 0) {
      HeartbeatMsg hb;
      hb.stamp = now;
      hb.vehicle = vehicle_id_;
      hb.mode = mode_;
      hb.position = est_.position;
      hb.velocity = est_.velocity;
      hb.yaw = est_.attitude.yaw();
      net_->publish(self_, kTopicHeartbeat, hb.encode(), now);
    }
  }
}

}  // namespace sky::fw
