#pragma once

#include <Eigen/Core>

#include <array>

namespace deform_swarm {

/// Rigid-body quadcopter parameters; defaults are the shipped airframe.
struct QuadParams {
    double m = 0.5;          // kg
    double g = 9.81;         // m/s^2
    double l = 0.25;         // arm length, m
    double I_r = 3.357e-5;   // rotor inertia, kg m^2
    double I_x = 0.0196;     // kg m^2
    double I_y = 0.0196;
    double I_z = 0.0264;
    double b = 3e-5;         // thrust coefficient, N s^2/rad^2
    double k = 1.1e-6;       // drag-torque coefficient, units as printed

    Eigen::Vector3d inertia() const { return {I_x, I_y, I_z}; }
};

/// Cascade gains. The attitude loop is critically damped with poles ten times
/// faster than the position loop (s^2 + 4s + 4 vs s^2 + 40s + 400).
struct ControllerGains {
    double kp = 4.0;
    double kd = 4.0;
    double att_kp = 400.0;
    double att_kd = 40.0;
    double max_rotor_speed = 1000.0;  // rad/s
    double max_tilt = 1.2;            // rad, limit on commanded roll/pitch
};

struct QuadState {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
    Eigen::Vector3d attitude = Eigen::Vector3d::Zero();  // roll, pitch, yaw (ZYX)
    Eigen::Vector3d rates = Eigen::Vector3d::Zero();     // body p, q, r

    bool finite() const;
};

struct ControlOutput {
    double thrust = 0.0;                                 // N
    Eigen::Vector3d torque = Eigen::Vector3d::Zero();    // N m
    std::array<double, 4> rotor_speeds{};                // rad/s
};

struct DesiredMotion {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
    Eigen::Vector3d acceleration = Eigen::Vector3d::Zero();
    double yaw = 0.0;
};

inline constexpr double kMaxStep = 0.01;

/// Body-to-world rotation for ZYX Euler angles.
Eigen::Matrix3d rotation(const Eigen::Vector3d& attitude);

double wrap_angle(double angle);

/// One RK4 step of the Newton-Euler model with the control held constant.
/// Throws std::invalid_argument unless 0 < dt <= 0.01, NonFiniteState on blow-up.
QuadState dynamics_step(const QuadState& state, const ControlOutput& control, const QuadParams& params,
                        double dt, int agent = 0, double time = 0.0);

/// Plus-configuration mixer. Squared speeds are clamped to [0, max_speed^2].
std::array<double, 4> rotor_mixer(double thrust, const Eigen::Vector3d& torque, const QuadParams& params,
                                  double max_speed = 1000.0);

/// Thrust and torques actually produced by a set of rotor speeds.
ControlOutput rotor_forces(const std::array<double, 4>& rotor_speeds, const QuadParams& params);

ControlOutput tracking_controller(const QuadState& state, const DesiredMotion& desired,
                                  const QuadParams& params, const ControllerGains& gains = {});

}  // namespace deform_swarm
