#pragma once

#include <Eigen/Core>

#include <compare>
#include <cstddef>
#include <map>
#include <ostream>
#include <span>
#include <vector>

namespace deform_swarm {

using Vec3 = Eigen::Vector3d;

/// One-based agent identifier, stable across every module.
struct AgentId {
    int value = 0;

    constexpr std::size_t index() const { return static_cast<std::size_t>(value - 1); }
    friend constexpr auto operator<=>(AgentId, AgentId) = default;
};

inline std::ostream& operator<<(std::ostream& os, AgentId id) { return os << id.value; }

struct BetaBounds {
    double lo = 0.0;
    double hi = 1.0;
};

/// An agent of layer >= 2 together with the leaders its position is blended from.
struct Follower {
    AgentId id;
    int layer = 0;  // one-based planning layer
    std::vector<AgentId> leaders;
};

/// Unvalidated team description as read from a configuration file.
/// An empty `interior` is derived as the complement of boundary and core;
/// a follower missing from `in_neighbors` draws on every agent of the earlier layers.
struct TeamConfigSpec {
    int n_agents = 0;
    std::map<int, Vec3> reference_positions;
    std::vector<int> boundary;
    std::vector<int> core;
    std::vector<int> interior;
    std::vector<std::vector<int>> layers;
    std::map<int, std::vector<int>> in_neighbors;
    std::vector<BetaBounds> beta_bounds;  // entry k bounds the followers of layer k + 2
    double alpha_min = 0.5;
    double alpha_max = 1.0;
    double eps = 0.15;
    double delta = 0.1;
};

/// Validated team. Layers are disjoint planning sets; layers[0] holds the
/// primary leaders (boundary plus core). Followers are stored in planning order
/// so that every leader is evaluated before the agents that blend it.
struct TeamConfig {
    int n_agents = 0;
    std::vector<Vec3> reference;  // indexed by AgentId::index()
    std::vector<AgentId> boundary;
    AgentId core;
    std::vector<AgentId> interior;
    std::vector<std::vector<AgentId>> layers;
    std::vector<Follower> followers;
    std::vector<BetaBounds> beta_bounds;
    double alpha_min = 0.5;
    double alpha_max = 1.0;
    double eps = 0.15;    // half side of the box enclosing one agent
    double delta = 0.1;   // per-axis tracking error bound

    const std::vector<AgentId>& primary_leaders() const { return layers.front(); }
    const std::vector<AgentId>& last_layer() const { return layers.back(); }
    int layer_count() const { return static_cast<int>(layers.size()); }
    const BetaBounds& bounds_for(const Follower& f) const { return beta_bounds.at(f.layer - 2); }
    int layer_of(AgentId id) const;
    /// Position of `id` within `followers`, or -1 for primary leaders.
    int follower_index(AgentId id) const;
};

/// Trainable parameters. `alpha` is aligned with `primary_leaders()`,
/// `beta[f]` with `followers[f].leaders`.
struct WeightSet {
    std::vector<double> alpha;
    std::vector<std::vector<double>> beta;

    friend bool operator==(const WeightSet&, const WeightSet&) = default;
};

struct DesiredSnapshot {
    double time = 0.0;
    std::vector<Vec3> positions;  // indexed by AgentId::index()

    const Vec3& at(AgentId id) const { return positions.at(id.index()); }
};

inline constexpr double kWeightSumTolerance = 1e-9;

TeamConfig validate_config(const TeamConfigSpec& raw);

/// Throws std::invalid_argument when `weights` does not match the shape of `config`.
void check_weight_shape(const TeamConfig& config, const WeightSet& weights);

/// Largest violation of the box bounds or of the sum-to-one rows.
double constraint_residual(const TeamConfig& config, const WeightSet& weights);

Vec3 leader_desired(const Vec3& reference, double alpha, const Vec3& d);

Vec3 follower_desired(std::span<const double> betas, std::span<const Vec3> leader_positions,
                      AgentId follower = {});

DesiredSnapshot forward_pass(const TeamConfig& config, const WeightSet& weights, const Vec3& d,
                             double t);

/// Pushes a time derivative of the nominal trajectory through the layer maps.
/// With static weights every agent inherits `d_rate` exactly.
std::vector<Vec3> forward_rates(const TeamConfig& config, const WeightSet& weights,
                                const Vec3& d_rate);

Vec3 team_output(const DesiredSnapshot& snapshot, std::span<const AgentId> last_layer);

double loss(const DesiredSnapshot& snapshot, std::span<const AgentId> last_layer, const Vec3& d);

}  // namespace deform_swarm
