#pragma once

#include "deform_swarm/core_model.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace deform_swarm {

struct TrainSettings {
    int epochs = 6000;
    double learning_rate = 0.01;
    std::uint64_t seed = 0;
    double projection_tolerance = 1e-9;
    int log_every = 1;
};

struct TraceRow {
    int epoch = 0;
    double loss = 0.0;
    double max_residual = 0.0;

    friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

struct TrainTrace {
    std::vector<TraceRow> rows;
};

struct TrainResult {
    WeightSet weights;
    TrainTrace trace;
};

/// Gradient with the same layout as the weights it differentiates.
using WeightGradient = WeightSet;

/// Euclidean projection of `v` onto { w : lo <= w_j <= hi, sum w_j = 1 }.
/// Rows that are already feasible (to 1e-12) are returned unchanged.
std::vector<double> project_box_simplex(std::span<const double> v, double lo, double hi);

/// Deterministic feasible starting point: alpha = 1 clamped into its bounds,
/// each beta row the projection of the uniform row.
WeightSet uniform_weights(const TeamConfig& config);

/// Clamps every alpha and projects every beta row in place.
void project_weights(const TeamConfig& config, WeightSet& weights);

/// Analytic gradient of the team-output loss by reverse accumulation through the layer maps.
WeightGradient grad_loss(const TeamConfig& config, const WeightSet& weights, const Vec3& d);

/// Full-batch projected gradient descent starting from uniform_weights().
TrainResult train(const TeamConfig& config, const Vec3& d_reference, const TrainSettings& settings);

/// Same as above but from caller-supplied feasible weights.
TrainResult train_from(const TeamConfig& config, WeightSet initial, const Vec3& d_reference,
                       const TrainSettings& settings);

}  // namespace deform_swarm
