#pragma once

#include "deform_swarm/core_model.hpp"
#include "deform_swarm/sim_log.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace deform_swarm {

struct SeparationReport {
    AgentId first;
    AgentId second;
    Vec3 gaps;               // |q_first - q_second| per axis
    bool box_separated;      // max gap > threshold: the enclosing boxes are disjoint
    bool strict_all_axes;    // min gap > threshold: literal every-axis reading

    int widest_axis() const;
};

/// One report per unordered pair of `positions` (indexed by AgentId::index()).
/// Use threshold 2 eps for actual positions, 2 (delta + eps) for desired ones.
std::vector<SeparationReport> pairwise_separation(std::span<const Vec3> positions, double threshold);

struct ContainmentViolation {
    AgentId follower;
    std::optional<AgentId> leader;  // absent for a row-sum violation
    int layer = 0;
    double value = 0.0;             // offending weight, or the row sum
};

struct ContainmentResult {
    bool contained = true;
    std::vector<ContainmentViolation> violations;
};

/// Every stored weight nonnegative and every row summing to one (1e-9).
ContainmentResult containment_check(const TeamConfig& config, const WeightSet& weights);

struct AxisMargins {
    std::array<double, 3> axis{};

    double min() const;
    double max() const;
    int widest_axis() const;
};

/// Per-axis sum_j |(beta_i[j] - beta_h[j]) q_j| over rows aligned with `leader_positions`.
AxisMargins weight_margin(std::span<const Vec3> leader_positions, std::span<const double> beta_i,
                          std::span<const double> beta_h);

struct SamplerOptions {
    enum class Kind { Grid, Random };
    Kind kind = Kind::Grid;
    int grid_points = 5;          // per beta interval
    int random_samples = 32;      // rows per follower for the random sampler
    std::uint64_t seed = 0;
    double min_row_difference = 0.05;  // row pairs closer than this (max-norm) are skipped
    int threads = 1;
    std::uint64_t shuffle_seed = 0;    // nonzero permutes each follower's rows
};

/// Feasible rows of length n drawn from [lo, hi] with unit sum.
std::vector<std::vector<double>> sample_rows(std::size_t n, const BetaBounds& bounds,
                                             const SamplerOptions& sampler, std::uint64_t stream = 0);

struct CheckRecord {
    std::string check;
    double time = 0.0;
    AgentId first;
    AgentId second;
    int axis = -1;  // -1 when the check is not axis-specific
    double margin = 0.0;
    double threshold = 0.0;
    bool passed = true;
    AxisMargins axis_margins{};
};

struct CertificateParameters {
    double delta = 0.0;
    double eps = 0.0;
    double delta_alpha = 0.0;
    std::vector<BetaBounds> beta_bounds;
    double sampling_interval = 0.0;
};

struct SafetyCertificate {
    bool passed = true;
    std::optional<double> alpha_min;
    CertificateParameters parameters;
    std::vector<CheckRecord> checks;
    std::size_t violation_count = 0;  // may exceed the number of violating records kept

    void add(CheckRecord record);
    void finalize();  // sorts records by time then pair and recomputes `passed`
};

/// Worst sampled inter-follower margin at a given contraction alpha.
struct WorstMargin {
    double margin = 0.0;  // widest-axis margin of the binding pair
    AxisMargins axis_margins{};
    int layer = 0;        // layer of the two followers
    AgentId first;
    AgentId second;
    bool any_pair = false;
};

/// Above this many joint row choices for the deep leaders of a follower pair,
/// each deep leader's coordinates are replaced by their smallest magnitude over
/// its rows. The resulting margin is a lower bound on the enumerated one.
inline constexpr std::size_t kMaxDeepCombinations = 4096;

WorstMargin worst_weight_margin(const TeamConfig& config, double alpha, const SamplerOptions& sampler);

struct AlphaSearchResult {
    double alpha_min = 1.0;
    SafetyCertificate certificate;
    WorstMargin worst_at_min;
};

/// Line search from alpha = 1 downward in steps of `delta_alpha`; returns the
/// smallest grid value at which every sampled follower pair keeps a margin
/// above 2 (delta + eps). Leader positions are alpha * reference (team frame).
AlphaSearchResult alpha_min_search(const TeamConfig& config, double delta_alpha,
                                   const SamplerOptions& sampler = {});

inline constexpr std::size_t kMaxViolationRecords = 1000;

/// Separation of desired (2 (delta + eps)) and, if logged, actual (2 eps)
/// positions at every frame, plus containment of `weights`.
SafetyCertificate certify_run(const TeamConfig& config, const WeightSet& weights, const SimLog& log);

}  // namespace deform_swarm
