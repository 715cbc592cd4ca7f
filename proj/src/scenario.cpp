#include "deform_swarm/scenario.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace deform_swarm {

NominalSample ellipse_d(const EllipseTrajectory& traj, double t)
{
    const double rate = 2.0 * std::numbers::pi / traj.period;
    const double theta = rate * t + traj.phase;
    const double c = std::cos(theta), s = std::sin(theta);
    NominalSample out;
    out.d = Vec3(traj.semi_major * c, traj.semi_minor * s, traj.altitude);
    out.d_dot = Vec3(-traj.semi_major * s * rate, traj.semi_minor * c * rate, 0.0);
    out.d_ddot = Vec3(-traj.semi_major * c * rate * rate, -traj.semi_minor * s * rate * rate, 0.0);
    return out;
}

TeamConfigSpec reference_team_spec()
{
    TeamConfigSpec spec;
    spec.n_agents = 16;
    spec.boundary = {1, 2, 3};
    spec.core = {4};
    spec.interior = {5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16};
    spec.layers = {{1, 2, 3, 4}, {5, 6, 7}, {8, 9, 10, 11, 12, 13, 14, 15, 16}};
    spec.reference_positions = {
        {1, Vec3(0.0, 14.0, 0.0)},
        {2, Vec3(-12.0, -6.0, 0.0)},
        {3, Vec3(11.0, -8.0, 0.0)},
        {4, Vec3(0.0, 0.0, 0.0)},
    };
    spec.in_neighbors = {
        {5, {1, 2, 4}},
        {6, {2, 3, 4}},
        {7, {1, 3, 4}},
        {8, {5, 1}},
        {9, {5, 2}},
        {10, {6, 2}},
        {11, {6, 3}},
        {12, {7, 3}},
        {13, {7, 1}},
        {14, {5, 4}},
        {15, {6, 4}},
        {16, {7, 4}},
    };
    spec.beta_bounds = {{0.2, 0.6}, {0.35, 0.65}};
    spec.alpha_min = 0.5;
    spec.alpha_max = 1.0;
    spec.eps = 0.15;
    spec.delta = 0.1;
    return spec;
}

TeamConfig reference_team() { return validate_config(reference_team_spec()); }

SimLog run_simulation(const TeamConfig& config, const WeightSet& weights, const EllipseTrajectory& traj,
                      const QuadParams& params, const ControllerGains& gains, const SimSettings& settings)
{
    if (!(settings.dt > 0.0 && settings.dt <= kMaxStep))
        throw std::invalid_argument("simulation step must lie in (0, 0.01]");
    if (settings.t_final < 0.0)
        throw std::invalid_argument("simulation duration must be nonnegative");
    const int stride = std::max(1, settings.log_stride);
    const auto steps = static_cast<long>(std::llround(settings.t_final / settings.dt));
    const auto n = static_cast<std::size_t>(config.n_agents);

    SimLog log;
    log.frames.reserve(static_cast<std::size_t>(steps / stride + 2));

    std::vector<QuadState> states(n);
    std::vector<ControlOutput> controls(n);
    {
        const NominalSample start = ellipse_d(traj, 0.0);
        const auto snap = forward_pass(config, weights, start.d, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            states[i].position = snap.positions[i];
    }

    std::vector<DesiredMotion> desired(n);
    for (long step = 0;; ++step) {
        const double t = static_cast<double>(step) * settings.dt;
        const NominalSample nominal = ellipse_d(traj, t);
        const auto snap = forward_pass(config, weights, nominal.d, t);
        const auto vel = forward_rates(config, weights, nominal.d_dot);
        const auto acc = forward_rates(config, weights, nominal.d_ddot);
        for (std::size_t i = 0; i < n; ++i) {
            desired[i] = {snap.positions[i], vel[i], acc[i], 0.0};
            controls[i] = tracking_controller(states[i], desired[i], params, gains);
        }
        if (step % stride == 0)
            log.frames.push_back({t, snap.positions, states, controls});
        if (step >= steps)
            break;
        for (std::size_t i = 0; i < n; ++i)
            states[i] = dynamics_step(states[i], controls[i], params, settings.dt, static_cast<int>(i) + 1, t);
    }
    return log;
}

TrackingReport tracking_report(const SimLog& log, double transient, double delta)
{
    TrackingReport report;
    report.delta = delta;
    const auto n = static_cast<std::size_t>(log.agent_count());
    report.max_error.assign(n, Vec3::Zero());
    if (!log.has_actual())
        return report;
    for (const auto& frame : log.frames) {
        if (frame.time < transient)
            continue;
        for (std::size_t i = 0; i < n; ++i)
            report.max_error[i] =
                report.max_error[i].cwiseMax((frame.desired[i] - frame.states[i].position).cwiseAbs());
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (int a = 0; a < 3; ++a) {
            if (report.max_error[i][a] > report.worst || (i == 0 && a == 0)) {
                report.worst = report.max_error[i][a];
                report.worst_agent = AgentId{static_cast<int>(i) + 1};
                report.worst_axis = a;
            }
        }
    }
    return report;
}

}  // namespace deform_swarm
