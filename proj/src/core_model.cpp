#include "deform_swarm/core_model.hpp"

#include "deform_swarm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

namespace deform_swarm {

namespace {

constexpr double kFeasibilitySlack = 1e-12;

std::string list_ids(const std::vector<int>& ids)
{
    std::ostringstream out;
    out << '{';
    for (std::size_t i = 0; i < ids.size(); ++i)
        out << (i ? "," : "") << ids[i];
    out << '}';
    return out.str();
}

std::vector<AgentId> to_ids(const std::vector<int>& raw)
{
    std::vector<AgentId> ids;
    ids.reserve(raw.size());
    for (int v : raw)
        ids.push_back(AgentId{v});
    return ids;
}

}  // namespace

int TeamConfig::layer_of(AgentId id) const
{
    for (std::size_t k = 0; k < layers.size(); ++k)
        if (std::find(layers[k].begin(), layers[k].end(), id) != layers[k].end())
            return static_cast<int>(k) + 1;
    return 0;
}

int TeamConfig::follower_index(AgentId id) const
{
    for (std::size_t f = 0; f < followers.size(); ++f)
        if (followers[f].id == id)
            return static_cast<int>(f);
    return -1;
}

TeamConfig validate_config(const TeamConfigSpec& raw)
{
    std::vector<Diagnostic> issues;
    auto report = [&issues](DiagnosticKind kind, std::string message) {
        issues.push_back({kind, std::move(message)});
    };

    const int n = raw.n_agents;
    if (n <= 0) {
        report(DiagnosticKind::NonPositiveParameter, "n_agents must be positive");
        throw ValidationError(std::move(issues));
    }
    auto in_range = [n](int id) { return id >= 1 && id <= n; };
    auto check_ids = [&](const std::vector<int>& ids, const std::string& what) {
        for (int id : ids)
            if (!in_range(id))
                report(DiagnosticKind::UnknownAgent,
                       what + " references agent " + std::to_string(id) + " outside 1.." +
                           std::to_string(n));
    };

    check_ids(raw.boundary, "boundary");
    check_ids(raw.core, "core");
    check_ids(raw.interior, "interior");
    for (std::size_t k = 0; k < raw.layers.size(); ++k)
        check_ids(raw.layers[k], "layer " + std::to_string(k + 1));
    for (const auto& [follower, leaders] : raw.in_neighbors) {
        check_ids({follower}, "in-neighbor map key");
        check_ids(leaders, "in-neighbors of " + std::to_string(follower));
    }
    for (const auto& [id, pos] : raw.reference_positions)
        check_ids({id}, "reference positions");

    if (raw.core.size() != 1)
        report(DiagnosticKind::CoreNotSingleton,
               "core must hold exactly one agent, got " + list_ids(raw.core));

    // Boundary, core and interior: pairwise disjoint and covering 1..N.
    std::vector<int> interior = raw.interior;
    if (interior.empty()) {
        std::set<int> leaders(raw.boundary.begin(), raw.boundary.end());
        leaders.insert(raw.core.begin(), raw.core.end());
        for (int id = 1; id <= n; ++id)
            if (!leaders.count(id))
                interior.push_back(id);
    }
    std::vector<int> membership(static_cast<std::size_t>(n) + 1, 0);
    for (const std::vector<int>* set : std::initializer_list<const std::vector<int>*>{&raw.boundary, &raw.core, &interior})
        for (int id : *set)
            if (in_range(id))
                ++membership[static_cast<std::size_t>(id)];
    for (int id = 1; id <= n; ++id) {
        if (membership[static_cast<std::size_t>(id)] > 1)
            report(DiagnosticKind::PartitionOverlap,
                   "agent " + std::to_string(id) + " appears in more than one of boundary/core/interior");
        else if (membership[static_cast<std::size_t>(id)] == 0)
            report(DiagnosticKind::PartitionIncomplete,
                   "agent " + std::to_string(id) + " is in none of boundary/core/interior");
    }

    // Reference positions are required for primary leaders; the core sits at the origin.
    std::set<int> primary(raw.boundary.begin(), raw.boundary.end());
    primary.insert(raw.core.begin(), raw.core.end());
    for (int id : primary) {
        if (in_range(id) && !raw.reference_positions.count(id))
            report(DiagnosticKind::MissingReference,
                   "primary leader " + std::to_string(id) + " has no reference position");
    }
    if (raw.core.size() == 1) {
        auto it = raw.reference_positions.find(raw.core.front());
        if (it != raw.reference_positions.end() && it->second.norm() != 0.0)
            report(DiagnosticKind::CoreNotAtOrigin,
                   "core agent " + std::to_string(raw.core.front()) +
                       " must have reference position (0, 0, 0)");
    }

    // Layers: disjoint planning sets, the first equal to B u C.
    std::vector<int> layer_of(static_cast<std::size_t>(n) + 1, 0);
    if (raw.layers.empty()) {
        report(DiagnosticKind::LayerMismatch, "at least one layer is required");
    }
    for (std::size_t k = 0; k < raw.layers.size(); ++k) {
        if (raw.layers[k].empty())
            report(DiagnosticKind::LayerMismatch, "layer " + std::to_string(k + 1) + " is empty");
        for (int id : raw.layers[k]) {
            if (!in_range(id))
                continue;
            auto& slot = layer_of[static_cast<std::size_t>(id)];
            if (slot != 0)
                report(DiagnosticKind::LayerMismatch,
                       "agent " + std::to_string(id) + " appears in layers " + std::to_string(slot) +
                           " and " + std::to_string(k + 1));
            else
                slot = static_cast<int>(k) + 1;
        }
    }
    if (!raw.layers.empty()) {
        for (int id = 1; id <= n; ++id)
            if (layer_of[static_cast<std::size_t>(id)] == 0)
                report(DiagnosticKind::LayerMismatch,
                       "agent " + std::to_string(id) + " belongs to no layer");
        std::set<int> first(raw.layers.front().begin(), raw.layers.front().end());
        if (first != primary)
            report(DiagnosticKind::LayerMismatch,
                   "layer 1 must equal boundary u core " +
                       list_ids(std::vector<int>(primary.begin(), primary.end())));
    }

    // Bounds.
    const std::size_t needed = raw.layers.empty() ? 0 : raw.layers.size() - 1;
    if (raw.beta_bounds.size() < needed)
        report(DiagnosticKind::InvalidBounds,
               "expected " + std::to_string(needed) + " beta bound pairs, got " +
                   std::to_string(raw.beta_bounds.size()));
    for (std::size_t k = 0; k < raw.beta_bounds.size(); ++k) {
        const auto& b = raw.beta_bounds[k];
        if (!(b.lo >= 0.0 && b.lo <= b.hi && b.hi <= 1.0))
            report(DiagnosticKind::InvalidBounds,
                   "beta bounds of layer " + std::to_string(k + 1) + " must satisfy 0 <= lo <= hi <= 1");
    }
    if (!(raw.alpha_min > 0.0 && raw.alpha_min <= raw.alpha_max))
        report(DiagnosticKind::InvalidBounds, "alpha bounds must satisfy 0 < alpha_min <= alpha_max");
    if (!(raw.eps > 0.0))
        report(DiagnosticKind::NonPositiveParameter, "eps must be positive");
    if (!(raw.delta > 0.0))
        report(DiagnosticKind::NonPositiveParameter, "delta must be positive");

    // Followers and their in-neighbor sets.
    std::vector<Follower> followers;
    for (const auto& [id, leaders] : raw.in_neighbors)
        if (in_range(id) && layer_of[static_cast<std::size_t>(id)] == 1)
            report(DiagnosticKind::LayerMismatch,
                   "primary leader " + std::to_string(id) + " cannot have in-neighbors");
    for (std::size_t k = 1; k < raw.layers.size(); ++k) {
        const int layer = static_cast<int>(k) + 1;
        for (int id : raw.layers[k]) {
            if (!in_range(id))
                continue;
            std::vector<int> leaders;
            if (auto it = raw.in_neighbors.find(id); it != raw.in_neighbors.end()) {
                leaders = it->second;
            } else {
                for (std::size_t j = 0; j < k; ++j)
                    leaders.insert(leaders.end(), raw.layers[j].begin(), raw.layers[j].end());
            }
            if (leaders.empty()) {
                report(DiagnosticKind::EmptyNeighborSet,
                       "follower " + std::to_string(id) + " has no in-neighbors");
                continue;
            }
            std::set<int> seen;
            for (int j : leaders) {
                if (!in_range(j))
                    continue;
                if (!seen.insert(j).second)
                    report(DiagnosticKind::NeighborOutOfOrder,
                           "follower " + std::to_string(id) + " lists leader " + std::to_string(j) +
                               " twice");
                const int lj = layer_of[static_cast<std::size_t>(j)];
                if (lj == 0 || lj >= layer)
                    report(DiagnosticKind::NeighborOutOfOrder,
                           "leader " + std::to_string(j) + " of follower " + std::to_string(id) +
                               " is not in an earlier layer");
            }
            if (k - 1 < raw.beta_bounds.size()) {
                const auto& b = raw.beta_bounds[k - 1];
                const double count = static_cast<double>(leaders.size());
                if (count * b.lo > 1.0 + kFeasibilitySlack || count * b.hi < 1.0 - kFeasibilitySlack) {
                    std::ostringstream msg;
                    msg << "follower " << id << " has " << leaders.size() << " in-neighbors but bounds ["
                        << b.lo << ", " << b.hi << "] need " << leaders.size() << "*lo <= 1 <= "
                        << leaders.size() << "*hi";
                    report(DiagnosticKind::InfeasibleBounds, msg.str());
                }
            }
            followers.push_back({AgentId{id}, layer, to_ids(leaders)});
        }
    }

    if (!issues.empty())
        throw ValidationError(std::move(issues));

    TeamConfig config;
    config.n_agents = n;
    config.reference.assign(static_cast<std::size_t>(n), Vec3::Zero());
    for (const auto& [id, pos] : raw.reference_positions)
        config.reference[static_cast<std::size_t>(id - 1)] = pos;
    config.boundary = to_ids(raw.boundary);
    config.core = AgentId{raw.core.front()};
    config.interior = to_ids(interior);
    for (const auto& layer : raw.layers)
        config.layers.push_back(to_ids(layer));
    config.followers = std::move(followers);
    config.beta_bounds.assign(raw.beta_bounds.begin(),
                              raw.beta_bounds.begin() + static_cast<std::ptrdiff_t>(needed));
    config.alpha_min = raw.alpha_min;
    config.alpha_max = raw.alpha_max;
    config.eps = raw.eps;
    config.delta = raw.delta;
    return config;
}

void check_weight_shape(const TeamConfig& config, const WeightSet& weights)
{
    if (weights.alpha.size() != config.primary_leaders().size())
        throw std::invalid_argument("weight set holds " + std::to_string(weights.alpha.size()) +
                                    " alphas, config has " +
                                    std::to_string(config.primary_leaders().size()) + " primary leaders");
    if (weights.beta.size() != config.followers.size())
        throw std::invalid_argument("weight set holds " + std::to_string(weights.beta.size()) +
                                    " beta rows, config has " + std::to_string(config.followers.size()) +
                                    " followers");
    for (std::size_t f = 0; f < config.followers.size(); ++f)
        if (weights.beta[f].size() != config.followers[f].leaders.size())
            throw std::invalid_argument("beta row of follower " +
                                        std::to_string(config.followers[f].id.value) +
                                        " does not match its in-neighbor set");
}

double constraint_residual(const TeamConfig& config, const WeightSet& weights)
{
    check_weight_shape(config, weights);
    double worst = 0.0;
    for (double a : weights.alpha)
        worst = std::max({worst, config.alpha_min - a, a - config.alpha_max});
    for (std::size_t f = 0; f < config.followers.size(); ++f) {
        const auto& b = config.bounds_for(config.followers[f]);
        double sum = 0.0;
        for (double w : weights.beta[f]) {
            worst = std::max({worst, b.lo - w, w - b.hi});
            sum += w;
        }
        worst = std::max(worst, std::abs(sum - 1.0));
    }
    return worst;
}

Vec3 leader_desired(const Vec3& reference, double alpha, const Vec3& d)
{
    return alpha * reference + d;
}

Vec3 follower_desired(std::span<const double> betas, std::span<const Vec3> leader_positions,
                      AgentId follower)
{
    if (betas.size() != leader_positions.size())
        throw std::invalid_argument("follower_desired: weight and leader counts differ");
    double sum = 0.0;
    Vec3 p = Vec3::Zero();
    for (std::size_t j = 0; j < betas.size(); ++j) {
        sum += betas[j];
        p += betas[j] * leader_positions[j];
    }
    if (std::abs(sum - 1.0) > kWeightSumTolerance)
        throw WeightSumViolation(follower.value, sum);
    return p;
}

namespace {

// Evaluates the layer maps with the given leader offset and first-layer reference scale.
std::vector<Vec3> propagate(const TeamConfig& config, const WeightSet& weights, const Vec3& d,
                            bool with_reference)
{
    check_weight_shape(config, weights);
    std::vector<Vec3> out(static_cast<std::size_t>(config.n_agents), Vec3::Zero());
    const auto& leaders = config.primary_leaders();
    for (std::size_t i = 0; i < leaders.size(); ++i) {
        const Vec3 ref = with_reference ? config.reference[leaders[i].index()] : Vec3::Zero();
        out[leaders[i].index()] = leader_desired(ref, weights.alpha[i], d);
    }
    std::vector<Vec3> gathered;
    for (std::size_t f = 0; f < config.followers.size(); ++f) {
        const auto& fol = config.followers[f];
        gathered.clear();
        for (AgentId j : fol.leaders)
            gathered.push_back(out[j.index()]);
        out[fol.id.index()] = follower_desired(weights.beta[f], gathered, fol.id);
    }
    return out;
}

}  // namespace

DesiredSnapshot forward_pass(const TeamConfig& config, const WeightSet& weights, const Vec3& d,
                             double t)
{
    return DesiredSnapshot{t, propagate(config, weights, d, true)};
}

std::vector<Vec3> forward_rates(const TeamConfig& config, const WeightSet& weights,
                                const Vec3& d_rate)
{
    return propagate(config, weights, d_rate, false);
}

Vec3 team_output(const DesiredSnapshot& snapshot, std::span<const AgentId> last_layer)
{
    if (last_layer.empty())
        throw EmptyLayer();
    Vec3 sum = Vec3::Zero();
    for (AgentId id : last_layer)
        sum += snapshot.at(id);
    return sum / static_cast<double>(last_layer.size());
}

double loss(const DesiredSnapshot& snapshot, std::span<const AgentId> last_layer, const Vec3& d)
{
    return (team_output(snapshot, last_layer) - d).squaredNorm();
}

}  // namespace deform_swarm
