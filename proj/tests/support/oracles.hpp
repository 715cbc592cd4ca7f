#pragma once

// Reference implementations used only by the tests. They follow the textbook
// formulas directly and share no code with the library beyond plain types.

#include "deform_swarm/core_model.hpp"
#include "deform_swarm/scenario.hpp"
#include "deform_swarm/vehicle.hpp"

#include <random>
#include <span>
#include <vector>

namespace oracle {

using deform_swarm::Vec3;

/// Desired positions by direct substitution, without any feasibility checks.
std::vector<Vec3> naive_positions(const deform_swarm::TeamConfig& config, const deform_swarm::WeightSet& w,
                                  const Vec3& d);

double naive_loss(const deform_swarm::TeamConfig& config, const deform_swarm::WeightSet& w, const Vec3& d);

/// True if `p` is a convex combination of at most four of `points`
/// (Caratheodory in three dimensions), found by enumerating subsets.
bool in_hull(const Vec3& p, std::span<const Vec3> points, double tol = 1e-9);

/// Box-simplex projection by nested grid refinement over the free coordinates (n <= 3).
std::vector<double> grid_projection(std::span<const double> v, double lo, double hi);

/// Per-axis sum of |(bi_j - bh_j) q_j| by explicit scalar loops.
std::array<double, 3> naive_margin(std::span<const Vec3> leaders, std::span<const double> bi,
                                   std::span<const double> bh);

struct RandomTeamOptions {
    int boundary_min = 3;
    int boundary_max = 6;
    int layers_min = 2;  // follower layers
    int layers_max = 3;
    int per_layer_min = 1;
    int per_layer_max = 5;
    double extent = 20.0;
    bool planar = false;
};

/// Random valid team: core at the origin, random in-neighbor subsets, feasible bounds.
deform_swarm::TeamConfigSpec random_team(std::mt19937_64& rng, const RandomTeamOptions& opts = {});

/// Random feasible weights for `config`.
deform_swarm::WeightSet random_weights(const deform_swarm::TeamConfig& config, std::mt19937_64& rng);

/// The bundled sixteen-agent topology with randomized reference positions.
deform_swarm::TeamConfig random_reference_team(std::mt19937_64& rng);

Vec3 random_vec(std::mt19937_64& rng, double extent);

}  // namespace oracle
