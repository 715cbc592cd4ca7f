#include "doctest.h"

#include "deform_swarm/errors.hpp"
#include "deform_swarm/vehicle.hpp"

#include <Eigen/LU>

#include <cmath>
#include <numbers>

using namespace deform_swarm;

namespace {

QuadState run_closed_loop(QuadState s, const DesiredMotion& target, double seconds, double dt)
{
    const QuadParams p;
    const int steps = static_cast<int>(std::lround(seconds / dt));
    for (int i = 0; i < steps; ++i)
        s = dynamics_step(s, tracking_controller(s, target, p), p, dt);
    return s;
}

QuadState integrate_open_loop(QuadState s, const ControlOutput& u, double seconds, double dt)
{
    const QuadParams p;
    const int steps = static_cast<int>(std::lround(seconds / dt));
    for (int i = 0; i < steps; ++i)
        s = dynamics_step(s, u, p, dt);
    return s;
}

}  // namespace

TEST_CASE("hover is an equilibrium of one step")
{
    const QuadParams p;
    QuadState s;
    s.position = {1, 2, 10};
    ControlOutput u;
    u.thrust = p.m * p.g;
    const QuadState n = dynamics_step(s, u, p, 0.01);
    CHECK((n.position - s.position).norm() <= 1e-12);
    CHECK(n.velocity.norm() <= 1e-12);
    CHECK(n.attitude.norm() <= 1e-12);
    CHECK(n.rates.norm() <= 1e-12);
}

TEST_CASE("free fall from rest")
{
    const QuadState n = dynamics_step(QuadState{}, ControlOutput{}, QuadParams{}, 0.01);
    CHECK(n.position.z() == doctest::Approx(-4.905e-4).epsilon(1e-12));
    CHECK(n.velocity.z() == doctest::Approx(-0.0981).epsilon(1e-12));
}

TEST_CASE("ballistic arc matches the closed form")
{
    QuadState s;
    s.position = {1, -2, 30};
    s.velocity = {3, 0.5, 12};
    const double T = 2.0;
    const QuadState n = integrate_open_loop(s, ControlOutput{}, T, 0.01);
    const Eigen::Vector3d expect = s.position + s.velocity * T + 0.5 * Eigen::Vector3d(0, 0, -9.81) * T * T;
    CHECK((n.position - expect).norm() <= 1e-9);
}

TEST_CASE("fourth-order convergence on a tumbling vehicle")
{
    QuadState s;
    s.attitude = {0.3, -0.2, 0.1};
    s.rates = {1.0, -0.5, 2.0};
    ControlOutput u;
    u.thrust = 6.0;
    u.torque = {0.01, -0.02, 0.005};
    const double T = 1.0;
    const QuadState ref = integrate_open_loop(s, u, T, 1e-4);
    const double e1 = (integrate_open_loop(s, u, T, 0.01).position - ref.position).norm();
    const double e2 = (integrate_open_loop(s, u, T, 0.005).position - ref.position).norm();
    const double order = std::log2(e1 / e2);
    CHECK(order > 3.5);
    CHECK(order < 4.5);
}

TEST_CASE("step size limits")
{
    CHECK_THROWS_AS(dynamics_step({}, {}, {}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(dynamics_step({}, {}, {}, 0.02), std::invalid_argument);
    QuadState bad;
    bad.velocity.x() = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(dynamics_step(bad, {}, {}, 0.01, 3, 1.5), NonFiniteState);
}

TEST_CASE("mixer round trip and hover speed")
{
    const QuadParams p;
    const double hover = p.m * p.g;
    const auto w = rotor_mixer(hover, Eigen::Vector3d::Zero(), p);
    const double expect = std::sqrt(hover / (4 * p.b));
    for (double x : w) {
        CHECK(x == doctest::Approx(expect).epsilon(1e-12));
        CHECK(std::fabs(x - 202.2) <= 0.1);
    }

    const Eigen::Vector3d tau(0.05, -0.03, 0.002);
    const auto spun = rotor_mixer(6.0, tau, p);
    const ControlOutput back = rotor_forces(spun, p);
    CHECK(back.thrust == doctest::Approx(6.0).epsilon(1e-12));
    CHECK((back.torque - tau).norm() <= 1e-9);

    const auto off = rotor_mixer(0.0, Eigen::Vector3d::Zero(), p);
    for (double x : off)
        CHECK(x == 0.0);

    const auto capped = rotor_mixer(1e6, Eigen::Vector3d::Zero(), p);
    for (double x : capped)
        CHECK(x == doctest::Approx(1000.0));
}

TEST_CASE("controller on the setpoint commands hover")
{
    const QuadParams p;
    QuadState s;
    s.position = {3, 4, 10};
    DesiredMotion target;
    target.position = s.position;
    const ControlOutput u = tracking_controller(s, target, p);
    CHECK(u.thrust == doctest::Approx(p.m * p.g).epsilon(1e-12));
    CHECK(u.torque.norm() <= 1e-12);
}

TEST_CASE("altitude offset commands descent")
{
    const QuadParams p;
    const ControllerGains g;
    QuadState s;
    s.position = {0, 0, 11};
    DesiredMotion target;
    target.position = {0, 0, 10};
    const ControlOutput u = tracking_controller(s, target, p, g);
    CHECK(u.thrust < p.m * p.g);
    CHECK(u.thrust == doctest::Approx(p.m * (p.g - g.kp * 1.0)).epsilon(1e-12));
}

TEST_CASE("closed loop settles onto a fixed setpoint")
{
    QuadState s;
    s.position = {0.1, -0.1, 10.1};
    DesiredMotion target;
    target.position = {0, 0, 10};
    const QuadState end = run_closed_loop(s, target, 10.0, 0.002);
    CHECK((end.position - target.position).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("rotation and angle wrapping")
{
    const Eigen::Matrix3d R = rotation({0.2, -0.4, 1.3});
    CHECK((R.transpose() * R - Eigen::Matrix3d::Identity()).norm() <= 1e-12);
    CHECK(R.determinant() == doctest::Approx(1.0));
    const Eigen::Matrix3d yaw = rotation({0, 0, std::numbers::pi / 2});
    CHECK((yaw * Eigen::Vector3d::UnitX() - Eigen::Vector3d::UnitY()).norm() <= 1e-12);
    CHECK(wrap_angle(3 * std::numbers::pi) == doctest::Approx(std::numbers::pi));
    CHECK(wrap_angle(-0.5) == -0.5);
}
