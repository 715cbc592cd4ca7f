#pragma once

#include "deform_swarm/core_model.hpp"
#include "deform_swarm/sim_log.hpp"
#include "deform_swarm/vehicle.hpp"

#include <vector>

namespace deform_swarm {

/// Constant-rate, counterclockwise ellipse in a horizontal plane.
struct EllipseTrajectory {
    double semi_major = 100.0;  // m, along x
    double semi_minor = 80.0;   // m, along y
    double period = 60.0;       // s
    double altitude = 10.0;     // m
    double phase = 0.0;         // rad
};

struct NominalSample {
    Vec3 d;
    Vec3 d_dot;
    Vec3 d_ddot;
};

NominalSample ellipse_d(const EllipseTrajectory& traj, double t);

/// The bundled 16-agent team. Reference positions are an approximate
/// hand placement, not measured coordinates.
TeamConfigSpec reference_team_spec();
TeamConfig reference_team();

struct SimSettings {
    double dt = 0.002;
    double t_final = 60.0;
    int log_stride = 5;  // integration steps per logged frame
};

/// Closed loop: nominal trajectory -> forward pass -> per-vehicle controller and dynamics.
/// Vehicles start on their desired positions, at rest and level.
SimLog run_simulation(const TeamConfig& config, const WeightSet& weights, const EllipseTrajectory& traj,
                      const QuadParams& params, const ControllerGains& gains, const SimSettings& settings);

struct TrackingReport {
    std::vector<Vec3> max_error;  // per agent, per axis, over t >= transient
    double delta = 0.0;
    double worst = 0.0;
    AgentId worst_agent;
    int worst_axis = 0;

    bool within_bound() const { return worst <= delta; }
};

TrackingReport tracking_report(const SimLog& log, double transient, double delta);

}  // namespace deform_swarm
