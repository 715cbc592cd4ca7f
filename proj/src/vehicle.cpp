#include "deform_swarm/vehicle.hpp"

#include "deform_swarm/errors.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace deform_swarm {

using Eigen::Matrix3d;
using Eigen::Vector3d;

namespace {

struct StateRate {
    Vector3d position, velocity, attitude, rates;
};

// Maps body rates to Euler angle rates.
Matrix3d euler_rate_map(const Vector3d& att)
{
    const double sp = std::sin(att.x()), cp = std::cos(att.x());
    const double tt = std::tan(att.y()), ct = std::cos(att.y());
    Matrix3d w;
    w << 1.0, sp * tt, cp * tt,
         0.0, cp, -sp,
         0.0, sp / ct, cp / ct;
    return w;
}

Matrix3d euler_rate_map_inverse(const Vector3d& att)
{
    const double sp = std::sin(att.x()), cp = std::cos(att.x());
    const double st = std::sin(att.y()), ct = std::cos(att.y());
    Matrix3d w;
    w << 1.0, 0.0, -st,
         0.0, cp, sp * ct,
         0.0, -sp, cp * ct;
    return w;
}

// Time derivative of euler_rate_map along the current Euler angle rates.
Matrix3d euler_rate_map_dot(const Vector3d& att, const Vector3d& att_rate)
{
    const double sp = std::sin(att.x()), cp = std::cos(att.x());
    const double tt = std::tan(att.y()), ct = std::cos(att.y());
    const double sec2 = 1.0 / (ct * ct);
    Matrix3d d_roll;
    d_roll << 0.0, cp * tt, -sp * tt,
              0.0, -sp, -cp,
              0.0, cp / ct, -sp / ct;
    Matrix3d d_pitch;
    d_pitch << 0.0, sp * sec2, cp * sec2,
               0.0, 0.0, 0.0,
               0.0, sp * tt / ct, cp * tt / ct;
    return d_roll * att_rate.x() + d_pitch * att_rate.y();
}

StateRate derivative(const QuadState& s, const ControlOutput& u, const QuadParams& p)
{
    const Vector3d inertia = p.inertia();
    const auto& w = u.rotor_speeds;
    const double rotor_net = w[0] - w[1] + w[2] - w[3];

    StateRate r;
    r.position = s.velocity;
    r.velocity = rotation(s.attitude).col(2) * (u.thrust / p.m) - Vector3d(0.0, 0.0, p.g);
    r.attitude = euler_rate_map(s.attitude) * s.rates;
    const Vector3d gyro = p.I_r * s.rates.cross(Vector3d(0.0, 0.0, rotor_net));
    const Vector3d coriolis = s.rates.cross(inertia.cwiseProduct(s.rates));
    r.rates = (u.torque - coriolis - gyro).cwiseQuotient(inertia);
    return r;
}

QuadState advance(const QuadState& s, const StateRate& r, double h)
{
    QuadState out;
    out.position = s.position + h * r.position;
    out.velocity = s.velocity + h * r.velocity;
    out.attitude = s.attitude + h * r.attitude;
    out.rates = s.rates + h * r.rates;
    return out;
}

}  // namespace

bool QuadState::finite() const
{
    return position.allFinite() && velocity.allFinite() && attitude.allFinite() && rates.allFinite();
}

Matrix3d rotation(const Vector3d& attitude)
{
    return (Eigen::AngleAxisd(attitude.z(), Vector3d::UnitZ()) *
            Eigen::AngleAxisd(attitude.y(), Vector3d::UnitY()) *
            Eigen::AngleAxisd(attitude.x(), Vector3d::UnitX()))
        .toRotationMatrix();
}

double wrap_angle(double angle)
{
    constexpr double pi = std::numbers::pi;
    double wrapped = std::remainder(angle, 2.0 * pi);  // [-pi, pi]
    if (wrapped <= -pi)
        wrapped += 2.0 * pi;
    return wrapped;
}

QuadState dynamics_step(const QuadState& state, const ControlOutput& control, const QuadParams& params,
                        double dt, int agent, double time)
{
    if (!(dt > 0.0 && dt <= kMaxStep))
        throw std::invalid_argument("dynamics_step: dt must lie in (0, 0.01]");

    const StateRate k1 = derivative(state, control, params);
    const StateRate k2 = derivative(advance(state, k1, 0.5 * dt), control, params);
    const StateRate k3 = derivative(advance(state, k2, 0.5 * dt), control, params);
    const StateRate k4 = derivative(advance(state, k3, dt), control, params);

    const double w = dt / 6.0;
    QuadState next;
    next.position = state.position + w * (k1.position + 2.0 * k2.position + 2.0 * k3.position + k4.position);
    next.velocity = state.velocity + w * (k1.velocity + 2.0 * k2.velocity + 2.0 * k3.velocity + k4.velocity);
    next.attitude = state.attitude + w * (k1.attitude + 2.0 * k2.attitude + 2.0 * k3.attitude + k4.attitude);
    next.rates = state.rates + w * (k1.rates + 2.0 * k2.rates + 2.0 * k3.rates + k4.rates);
    if (!next.finite())
        throw NonFiniteState(agent, time + dt);
    for (int i = 0; i < 3; ++i)
        next.attitude[i] = wrap_angle(next.attitude[i]);
    return next;
}

std::array<double, 4> rotor_mixer(double thrust, const Vector3d& torque, const QuadParams& p,
                                  double max_speed)
{
    // F = b sum(w^2), tau_x = l b (w4^2 - w2^2), tau_y = l b (w3^2 - w1^2),
    // tau_z = k (w1^2 - w2^2 + w3^2 - w4^2)
    const double total = thrust / p.b;
    const double yaw = torque.z() / p.k;
    const double odd = 0.5 * (total + yaw);   // w1^2 + w3^2
    const double even = 0.5 * (total - yaw);  // w2^2 + w4^2
    const double roll = torque.x() / (p.l * p.b);
    const double pitch = torque.y() / (p.l * p.b);
    const std::array<double, 4> squared{
        0.5 * (odd - pitch),
        0.5 * (even - roll),
        0.5 * (odd + pitch),
        0.5 * (even + roll),
    };
    const double ceiling = max_speed * max_speed;
    std::array<double, 4> speeds{};
    for (std::size_t i = 0; i < 4; ++i)
        speeds[i] = std::sqrt(std::clamp(squared[i], 0.0, ceiling));
    return speeds;
}

ControlOutput rotor_forces(const std::array<double, 4>& w, const QuadParams& p)
{
    const double s1 = w[0] * w[0], s2 = w[1] * w[1], s3 = w[2] * w[2], s4 = w[3] * w[3];
    ControlOutput out;
    out.rotor_speeds = w;
    out.thrust = p.b * (s1 + s2 + s3 + s4);
    out.torque = Vector3d(p.l * p.b * (s4 - s2), p.l * p.b * (s3 - s1), p.k * (s1 - s2 + s3 - s4));
    return out;
}

ControlOutput tracking_controller(const QuadState& state, const DesiredMotion& desired,
                                  const QuadParams& params, const ControllerGains& gains)
{
    // Outer loop: commanded acceleration, then the force direction it requires.
    const Vector3d accel = desired.acceleration + gains.kd * (desired.velocity - state.velocity) +
                           gains.kp * (desired.position - state.position);
    Vector3d force = params.m * (accel + Vector3d(0.0, 0.0, params.g));
    if (force.z() < 1e-6 * params.m * params.g)
        force.z() = 1e-6 * params.m * params.g;
    const double horizontal = force.head<2>().norm();
    const double max_horizontal = force.z() * std::tan(gains.max_tilt);
    if (horizontal > max_horizontal)
        force.head<2>() *= max_horizontal / horizontal;

    const Matrix3d body = rotation(state.attitude);
    const double thrust = std::max(0.0, force.dot(body.col(2)));

    // Desired roll/pitch aligning body z with the force, at the desired yaw.
    const Vector3d n = force.normalized();
    const double cy = std::cos(desired.yaw), sy = std::sin(desired.yaw);
    const Vector3d heading_frame(cy * n.x() + sy * n.y(), -sy * n.x() + cy * n.y(), n.z());
    const Vector3d att_des(std::asin(std::clamp(-heading_frame.y(), -1.0, 1.0)),
                           std::atan2(heading_frame.x(), heading_frame.z()), desired.yaw);

    // Inner loop: feedback-linearize the Euler angle dynamics.
    const Vector3d att_rate = euler_rate_map(state.attitude) * state.rates;
    Vector3d att_err;
    for (int i = 0; i < 3; ++i)
        att_err[i] = wrap_angle(att_des[i] - state.attitude[i]);
    const Vector3d att_accel = gains.att_kp * att_err - gains.att_kd * att_rate;
    const Vector3d rates_dot =
        euler_rate_map_inverse(state.attitude) * (att_accel - euler_rate_map_dot(state.attitude, att_rate) * state.rates);
    const Vector3d inertia = params.inertia();
    const Vector3d torque =
        inertia.cwiseProduct(rates_dot) + state.rates.cross(inertia.cwiseProduct(state.rates));

    return rotor_forces(rotor_mixer(thrust, torque, params, gains.max_rotor_speed), params);
}

}  // namespace deform_swarm
