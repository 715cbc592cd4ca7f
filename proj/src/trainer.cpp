#include "deform_swarm/trainer.hpp"

#include "deform_swarm/errors.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <stdexcept>

namespace deform_swarm {

namespace {

constexpr double kRowTolerance = 1e-12;

bool row_feasible(std::span<const double> v, double lo, double hi)
{
    double sum = 0.0;
    for (double x : v) {
        if (x < lo || x > hi)
            return false;
        sum += x;
    }
    return std::abs(sum - 1.0) <= kRowTolerance;
}

double clamped_sum(std::span<const double> v, double shift, double lo, double hi)
{
    double sum = 0.0;
    for (double x : v)
        sum += std::clamp(x - shift, lo, hi);
    return sum;
}

bool all_finite(const WeightSet& w)
{
    for (double a : w.alpha)
        if (!std::isfinite(a))
            return false;
    for (const auto& row : w.beta)
        for (double b : row)
            if (!std::isfinite(b))
                return false;
    return true;
}

}  // namespace

std::vector<double> project_box_simplex(std::span<const double> v, double lo, double hi)
{
    const std::size_t n = v.size();
    const double count = static_cast<double>(n);
    if (n == 0 || lo > hi || count * lo > 1.0 + kRowTolerance || count * hi < 1.0 - kRowTolerance)
        throw InfeasibleBounds(n, lo, hi);
    if (row_feasible(v, lo, hi))
        return {v.begin(), v.end()};

    // The clamped sum is non-increasing in the multiplier; bracket and bisect.
    double below = *std::min_element(v.begin(), v.end()) - hi;  // sum = n*hi >= 1
    double above = *std::max_element(v.begin(), v.end()) - lo;  // sum = n*lo <= 1
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (below + above);
        if (mid <= below || mid >= above)
            break;
        if (clamped_sum(v, mid, lo, hi) > 1.0)
            below = mid;
        else
            above = mid;
    }
    double shift = 0.5 * (below + above);

    // Solve exactly for the multiplier on the active pattern found by bisection.
    double free_sum = 0.0;
    double fixed_sum = 0.0;
    std::size_t free_count = 0;
    for (double x : v) {
        const double y = x - shift;
        if (y <= lo)
            fixed_sum += lo;
        else if (y >= hi)
            fixed_sum += hi;
        else {
            free_sum += x;
            ++free_count;
        }
    }
    if (free_count > 0) {
        const double exact = (free_sum + fixed_sum - 1.0) / static_cast<double>(free_count);
        if (std::abs(clamped_sum(v, exact, lo, hi) - 1.0) <= std::abs(clamped_sum(v, shift, lo, hi) - 1.0))
            shift = exact;
    }

    std::vector<double> w(n);
    for (std::size_t j = 0; j < n; ++j)
        w[j] = std::clamp(v[j] - shift, lo, hi);
    return w;
}

WeightSet uniform_weights(const TeamConfig& config)
{
    WeightSet w;
    w.alpha.assign(config.primary_leaders().size(), std::clamp(1.0, config.alpha_min, config.alpha_max));
    w.beta.reserve(config.followers.size());
    for (const auto& f : config.followers) {
        const auto& b = config.bounds_for(f);
        std::vector<double> row(f.leaders.size(), 1.0 / static_cast<double>(f.leaders.size()));
        w.beta.push_back(project_box_simplex(row, b.lo, b.hi));
    }
    return w;
}

void project_weights(const TeamConfig& config, WeightSet& weights)
{
    check_weight_shape(config, weights);
    for (double& a : weights.alpha)
        a = std::clamp(a, config.alpha_min, config.alpha_max);
    for (std::size_t f = 0; f < config.followers.size(); ++f) {
        const auto& b = config.bounds_for(config.followers[f]);
        weights.beta[f] = project_box_simplex(weights.beta[f], b.lo, b.hi);
    }
}

WeightGradient grad_loss(const TeamConfig& config, const WeightSet& weights, const Vec3& d)
{
    const DesiredSnapshot snap = forward_pass(config, weights, d, 0.0);
    const auto& last = config.last_layer();
    const Vec3 residual = team_output(snap, last) - d;

    // adjoint[i] = dLoss/dp_i
    std::vector<Vec3> adjoint(static_cast<std::size_t>(config.n_agents), Vec3::Zero());
    const Vec3 seed = 2.0 * residual / static_cast<double>(last.size());
    for (AgentId id : last)
        adjoint[id.index()] += seed;

    WeightGradient grad;
    grad.alpha.assign(weights.alpha.size(), 0.0);
    grad.beta.resize(weights.beta.size());
    for (std::size_t f = config.followers.size(); f-- > 0;) {
        const auto& fol = config.followers[f];
        const Vec3 g = adjoint[fol.id.index()];
        grad.beta[f].resize(fol.leaders.size());
        for (std::size_t j = 0; j < fol.leaders.size(); ++j) {
            const AgentId leader = fol.leaders[j];
            grad.beta[f][j] = g.dot(snap.at(leader));
            adjoint[leader.index()] += weights.beta[f][j] * g;
        }
    }
    const auto& leaders = config.primary_leaders();
    for (std::size_t i = 0; i < leaders.size(); ++i)
        grad.alpha[i] = adjoint[leaders[i].index()].dot(config.reference[leaders[i].index()]);
    return grad;
}

TrainResult train(const TeamConfig& config, const Vec3& d_reference, const TrainSettings& settings)
{
    return train_from(config, uniform_weights(config), d_reference, settings);
}

TrainResult train_from(const TeamConfig& config, WeightSet weights, const Vec3& d_reference,
                       const TrainSettings& settings)
{
    if (settings.epochs <= 0)
        throw std::invalid_argument("epochs must be positive");
    if (!(settings.learning_rate > 0.0))
        throw std::invalid_argument("learning rate must be positive");
    check_weight_shape(config, weights);

    const auto& last = config.last_layer();
    const int log_every = std::max(1, settings.log_every);
    TrainResult result;

    auto current_loss = [&](int epoch) {
        const double value = loss(forward_pass(config, weights, d_reference, 0.0), last, d_reference);
        if (!std::isfinite(value))
            throw NonFiniteLoss(epoch, value);
        return value;
    };

    for (int epoch = 0; epoch < settings.epochs; ++epoch) {
        if (epoch % log_every == 0)
            result.trace.rows.push_back(
                {epoch, current_loss(epoch), constraint_residual(config, weights)});

        const WeightGradient g = grad_loss(config, weights, d_reference);
        for (std::size_t i = 0; i < weights.alpha.size(); ++i)
            weights.alpha[i] -= settings.learning_rate * g.alpha[i];
        for (std::size_t f = 0; f < weights.beta.size(); ++f)
            for (std::size_t j = 0; j < weights.beta[f].size(); ++j)
                weights.beta[f][j] -= settings.learning_rate * g.beta[f][j];
        if (!all_finite(weights))
            throw NonFiniteLoss(epoch, std::numeric_limits<double>::quiet_NaN());
        project_weights(config, weights);
    }
    result.trace.rows.push_back(
        {settings.epochs, current_loss(settings.epochs), constraint_residual(config, weights)});
    result.weights = std::move(weights);
    return result;
}

}  // namespace deform_swarm
