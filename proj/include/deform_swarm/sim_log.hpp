#pragma once

#include "deform_swarm/core_model.hpp"
#include "deform_swarm/vehicle.hpp"

#include <vector>

namespace deform_swarm {

/// One logged instant. `states` and `controls` are empty for a desired-only trajectory.
struct SimFrame {
    double time = 0.0;
    std::vector<Vec3> desired;  // indexed by AgentId::index()
    std::vector<QuadState> states;
    std::vector<ControlOutput> controls;
};

struct SimLog {
    std::vector<SimFrame> frames;

    bool empty() const { return frames.empty(); }
    bool has_actual() const { return !frames.empty() && !frames.front().states.empty(); }
    int agent_count() const
    {
        return frames.empty() ? 0 : static_cast<int>(frames.front().desired.size());
    }
    /// Spacing of the (uniform) time grid, 0 for a single frame.
    double interval() const
    {
        return frames.size() < 2 ? 0.0 : frames[1].time - frames[0].time;
    }
};

}  // namespace deform_swarm
