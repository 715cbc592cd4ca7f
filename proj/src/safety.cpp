#include "deform_swarm/safety.hpp"

#include "deform_swarm/errors.hpp"
#include "deform_swarm/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>
#include <tuple>

namespace deform_swarm {

namespace {

int argmax_axis(const Vec3& v)
{
    int best = 0;
    for (int a = 1; a < 3; ++a)
        if (v[a] > v[best])
            best = a;
    return best;
}

}  // namespace

int SeparationReport::widest_axis() const { return argmax_axis(gaps); }

std::vector<SeparationReport> pairwise_separation(std::span<const Vec3> positions, double threshold)
{
    std::vector<SeparationReport> out;
    const std::size_t n = positions.size();
    if (n >= 2)
        out.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const Vec3 gaps = (positions[i] - positions[j]).cwiseAbs();
            out.push_back({AgentId{static_cast<int>(i) + 1}, AgentId{static_cast<int>(j) + 1}, gaps,
                           gaps.maxCoeff() > threshold, gaps.minCoeff() > threshold});
        }
    }
    return out;
}

ContainmentResult containment_check(const TeamConfig& config, const WeightSet& weights)
{
    check_weight_shape(config, weights);
    ContainmentResult result;
    for (std::size_t f = 0; f < config.followers.size(); ++f) {
        const auto& fol = config.followers[f];
        double sum = 0.0;
        for (std::size_t j = 0; j < fol.leaders.size(); ++j) {
            const double w = weights.beta[f][j];
            sum += w;
            if (!(w >= 0.0))
                result.violations.push_back({fol.id, fol.leaders[j], fol.layer, w});
        }
        if (!(std::abs(sum - 1.0) <= kWeightSumTolerance))
            result.violations.push_back({fol.id, std::nullopt, fol.layer, sum});
    }
    result.contained = result.violations.empty();
    return result;
}

double AxisMargins::min() const { return *std::min_element(axis.begin(), axis.end()); }
double AxisMargins::max() const { return *std::max_element(axis.begin(), axis.end()); }
int AxisMargins::widest_axis() const { return argmax_axis(Vec3(axis[0], axis[1], axis[2])); }

AxisMargins weight_margin(std::span<const Vec3> leader_positions, std::span<const double> beta_i,
                          std::span<const double> beta_h)
{
    if (beta_i.size() != leader_positions.size() || beta_h.size() != leader_positions.size())
        throw std::invalid_argument("weight_margin: rows must align with the leader positions");
    Vec3 sum = Vec3::Zero();
    for (std::size_t j = 0; j < leader_positions.size(); ++j)
        sum += ((beta_i[j] - beta_h[j]) * leader_positions[j]).cwiseAbs();
    return AxisMargins{{sum.x(), sum.y(), sum.z()}};
}

std::vector<std::vector<double>> sample_rows(std::size_t n, const BetaBounds& bounds,
                                             const SamplerOptions& sampler, std::uint64_t stream)
{
    std::vector<std::vector<double>> rows;
    if (n == 0)
        return rows;
    constexpr double slack = 1e-12;

    if (sampler.kind == SamplerOptions::Kind::Random) {
        std::mt19937_64 rng(sampler.seed * 0x9E3779B97F4A7C15ULL + stream);
        std::uniform_real_distribution<double> draw(bounds.lo, bounds.hi);
        std::vector<double> v(n);
        for (int s = 0; s < sampler.random_samples; ++s) {
            for (double& x : v)
                x = draw(rng);
            rows.push_back(project_box_simplex(v, bounds.lo, bounds.hi));
        }
    } else {
        const int points = std::max(1, sampler.grid_points);
        std::vector<double> grid;
        if (points == 1)
            grid.push_back(0.5 * (bounds.lo + bounds.hi));
        else
            for (int m = 0; m < points; ++m)
                grid.push_back(bounds.lo + (bounds.hi - bounds.lo) * m / (points - 1));

        const double combos = std::pow(static_cast<double>(grid.size()), static_cast<double>(n - 1));
        if (combos > 1e6)
            throw std::invalid_argument("grid sampler would enumerate more than 1e6 rows; use the random sampler");
        std::vector<std::size_t> digit(n - 1, 0);
        while (true) {
            std::vector<double> row(n);
            double sum = 0.0;
            for (std::size_t j = 0; j + 1 < n; ++j) {
                row[j] = grid[digit[j]];
                sum += row[j];
            }
            const double last = 1.0 - sum;
            if (last >= bounds.lo - slack && last <= bounds.hi + slack) {
                row[n - 1] = std::clamp(last, bounds.lo, bounds.hi);
                rows.push_back(std::move(row));
            }
            std::size_t pos = 0;
            while (pos < digit.size() && ++digit[pos] == grid.size())
                digit[pos++] = 0;
            if (pos == digit.size())
                break;
        }
    }

    if (sampler.shuffle_seed != 0) {
        std::mt19937_64 rng(sampler.shuffle_seed + stream);
        std::shuffle(rows.begin(), rows.end(), rng);
    }
    return rows;
}

namespace {

struct PairTask {
    std::size_t first;   // follower indices
    std::size_t second;
};

struct PairResult {
    double margin = std::numeric_limits<double>::infinity();
    AxisMargins axis_margins{};
    bool evaluated = false;
};

class MarginSweep {
public:
    MarginSweep(const TeamConfig& config, double alpha, const SamplerOptions& sampler)
        : config_(config), alpha_(alpha), sampler_(sampler)
    {
        WeightSet nominal = uniform_weights(config);
        std::fill(nominal.alpha.begin(), nominal.alpha.end(), alpha);
        nominal_ = forward_pass(config, nominal, Vec3::Zero(), 0.0).positions;
        rows_.reserve(config.followers.size());
        for (const auto& f : config.followers)
            rows_.push_back(sample_rows(f.leaders.size(), config.bounds_for(f), sampler,
                                        static_cast<std::uint64_t>(f.id.value)));
    }

    PairResult evaluate(const PairTask& task) const
    {
        const auto& fi = config_.followers[task.first];
        const auto& fh = config_.followers[task.second];

        std::vector<AgentId> uni = fi.leaders;
        for (AgentId j : fh.leaders)
            if (std::find(uni.begin(), uni.end(), j) == uni.end())
                uni.push_back(j);
        auto slot_of = [&uni](AgentId j) {
            return static_cast<std::size_t>(std::find(uni.begin(), uni.end(), j) - uni.begin());
        };

        // Leaders that are followers themselves take every sampled row of their own.
        std::vector<std::size_t> deep_slot;
        std::vector<std::size_t> deep_follower;
        std::vector<Vec3> positions(uni.size());
        for (std::size_t s = 0; s < uni.size(); ++s) {
            const int fidx = config_.follower_index(uni[s]);
            if (fidx < 0) {
                positions[s] = alpha_ * config_.reference[uni[s].index()];
            } else {
                deep_slot.push_back(s);
                deep_follower.push_back(static_cast<std::size_t>(fidx));
            }
        }

        auto align = [&](const Follower& f, const std::vector<std::vector<double>>& rows) {
            std::vector<std::vector<double>> aligned;
            aligned.reserve(rows.size());
            for (const auto& row : rows) {
                std::vector<double> a(uni.size(), 0.0);
                for (std::size_t j = 0; j < f.leaders.size(); ++j)
                    a[slot_of(f.leaders[j])] = row[j];
                aligned.push_back(std::move(a));
            }
            return aligned;
        };
        const auto rows_i = align(fi, rows_[task.first]);
        const auto rows_h = align(fh, rows_[task.second]);

        PairResult result;
        std::vector<std::size_t> pick(deep_slot.size(), 0);
        std::size_t combinations = 1;
        for (std::size_t d = 0; d < deep_slot.size(); ++d) {
            const std::size_t n = rows_[deep_follower[d]].size();
            if (n == 0)
                return result;
            combinations = std::min(combinations * n, kMaxDeepCombinations + 1);
        }
        const bool bounded = combinations > kMaxDeepCombinations;
        if (bounded) {
            // Each axis sum is sum_s |db_s| |q_s|; taking the smallest |q_s| per
            // axis over a deep leader's rows bounds every combination from below.
            for (std::size_t d = 0; d < deep_slot.size(); ++d) {
                Vec3 low = Vec3::Constant(std::numeric_limits<double>::infinity());
                for (std::size_t r = 0; r < rows_[deep_follower[d]].size(); ++r)
                    low = low.cwiseMin(deep_position(deep_follower[d], r).cwiseAbs());
                positions[deep_slot[d]] = low;
            }
        }
        while (true) {
            if (!bounded)
                for (std::size_t d = 0; d < deep_slot.size(); ++d)
                    positions[deep_slot[d]] = deep_position(deep_follower[d], pick[d]);
            for (const auto& ri : rows_i) {
                for (const auto& rh : rows_h) {
                    double diff = 0.0;
                    for (std::size_t s = 0; s < uni.size(); ++s)
                        diff = std::max(diff, std::abs(ri[s] - rh[s]));
                    if (diff < sampler_.min_row_difference)
                        continue;
                    const AxisMargins m = weight_margin(positions, ri, rh);
                    if (!result.evaluated || m.max() < result.margin) {
                        result.margin = m.max();
                        result.axis_margins = m;
                        result.evaluated = true;
                    }
                }
            }
            if (bounded)
                break;
            std::size_t pos = 0;
            while (pos < pick.size() && ++pick[pos] == rows_[deep_follower[pos]].size())
                pick[pos++] = 0;
            if (pos == pick.size())
                break;
        }
        return result;
    }

private:
    Vec3 deep_position(std::size_t follower, std::size_t row_index) const
    {
        const auto& leader = config_.followers[follower];
        const auto& row = rows_[follower][row_index];
        Vec3 p = Vec3::Zero();
        for (std::size_t j = 0; j < leader.leaders.size(); ++j)
            p += row[j] * nominal_[leader.leaders[j].index()];
        return p;
    }

    const TeamConfig& config_;
    double alpha_;
    SamplerOptions sampler_;
    std::vector<Vec3> nominal_;
    std::vector<std::vector<std::vector<double>>> rows_;
};

}  // namespace

WorstMargin worst_weight_margin(const TeamConfig& config, double alpha, const SamplerOptions& sampler)
{
    std::vector<PairTask> tasks;
    for (std::size_t a = 0; a < config.followers.size(); ++a)
        for (std::size_t b = a + 1; b < config.followers.size(); ++b)
            if (config.followers[a].layer == config.followers[b].layer)
                tasks.push_back({a, b});

    const MarginSweep sweep(config, alpha, sampler);
    std::vector<PairResult> results(tasks.size());
    const std::size_t workers =
        std::clamp<std::size_t>(static_cast<std::size_t>(std::max(1, sampler.threads)), 1, std::max<std::size_t>(1, tasks.size()));
    if (workers == 1) {
        for (std::size_t t = 0; t < tasks.size(); ++t)
            results[t] = sweep.evaluate(tasks[t]);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t t = next++; t < tasks.size(); t = next++)
                    results[t] = sweep.evaluate(tasks[t]);
            });
    }

    WorstMargin worst;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        const auto& r = results[t];
        if (!r.evaluated)
            continue;
        if (!worst.any_pair || r.margin < worst.margin) {
            const auto& fa = config.followers[tasks[t].first];
            worst = {r.margin, r.axis_margins, fa.layer, fa.id, config.followers[tasks[t].second].id, true};
        }
    }
    return worst;
}

void SafetyCertificate::add(CheckRecord record)
{
    if (!record.passed) {
        ++violation_count;
        if (violation_count > kMaxViolationRecords)
            return;
    }
    checks.push_back(std::move(record));
}

void SafetyCertificate::finalize()
{
    std::stable_sort(checks.begin(), checks.end(), [](const CheckRecord& a, const CheckRecord& b) {
        return std::tie(a.time, a.first, a.second) < std::tie(b.time, b.first, b.second);
    });
    passed = violation_count == 0 &&
             std::all_of(checks.begin(), checks.end(), [](const CheckRecord& r) { return r.passed; });
}

AlphaSearchResult alpha_min_search(const TeamConfig& config, double delta_alpha, const SamplerOptions& sampler)
{
    if (!(delta_alpha > 0.0 && delta_alpha < 1.0))
        throw InvalidStep(delta_alpha);
    const double threshold = 2.0 * (config.delta + config.eps);
    auto holds = [threshold](const WorstMargin& w) { return !w.any_pair || w.margin > threshold; };

    WorstMargin current = worst_weight_margin(config, 1.0, sampler);
    if (!holds(current))
        throw NeverFeasible(current.margin, threshold);

    double alpha = 1.0;
    for (int step = 1;; ++step) {
        const double next = 1.0 - step * delta_alpha;
        if (next <= 1e-9 * delta_alpha)
            break;
        WorstMargin trial = worst_weight_margin(config, next, sampler);
        if (!holds(trial))
            break;
        alpha = next;
        current = trial;
    }

    AlphaSearchResult result;
    result.alpha_min = alpha;
    result.worst_at_min = current;
    auto& cert = result.certificate;
    cert.alpha_min = alpha;
    cert.parameters = {config.delta, config.eps, delta_alpha, config.beta_bounds, 0.0};
    if (current.any_pair) {
        CheckRecord rec;
        rec.check = "weight_margin";
        rec.first = current.first;
        rec.second = current.second;
        rec.axis = current.axis_margins.widest_axis();
        rec.margin = current.margin;
        rec.threshold = threshold;
        rec.passed = current.margin > threshold;
        rec.axis_margins = current.axis_margins;
        cert.add(rec);
    }
    cert.finalize();
    return result;
}

namespace {

// Keeps the tightest pair over the whole run and every violating (time, pair).
void sweep_separation(SafetyCertificate& cert, const std::string& name, double time,
                      std::span<const Vec3> positions, double threshold, std::optional<CheckRecord>& worst)
{
    for (const auto& rep : pairwise_separation(positions, threshold)) {
        const int axis = rep.widest_axis();
        CheckRecord rec;
        rec.check = name;
        rec.time = time;
        rec.first = rep.first;
        rec.second = rep.second;
        rec.axis = axis;
        rec.margin = rep.gaps[axis];
        rec.threshold = threshold;
        rec.passed = rep.box_separated;
        rec.axis_margins = AxisMargins{{rep.gaps.x(), rep.gaps.y(), rep.gaps.z()}};
        if (!worst || rec.margin < worst->margin)
            worst = rec;
        if (!rec.passed)
            cert.add(rec);
    }
}

}  // namespace

SafetyCertificate certify_run(const TeamConfig& config, const WeightSet& weights, const SimLog& log)
{
    if (log.empty())
        throw EmptyLog();

    SafetyCertificate cert;
    cert.parameters = {config.delta, config.eps, 0.0, config.beta_bounds, log.interval()};
    const double desired_threshold = 2.0 * (config.delta + config.eps);
    const double actual_threshold = 2.0 * config.eps;

    std::optional<CheckRecord> worst_desired;
    std::optional<CheckRecord> worst_actual;
    std::vector<Vec3> actual;
    for (const auto& frame : log.frames) {
        sweep_separation(cert, "desired_separation", frame.time, frame.desired, desired_threshold,
                         worst_desired);
        if (!frame.states.empty()) {
            actual.clear();
            for (const auto& s : frame.states)
                actual.push_back(s.position);
            sweep_separation(cert, "actual_separation", frame.time, actual, actual_threshold, worst_actual);
        }
    }
    if (worst_desired && worst_desired->passed) {
        worst_desired->check = "desired_separation_min";
        cert.add(*worst_desired);
    }
    if (worst_actual && worst_actual->passed) {
        worst_actual->check = "actual_separation_min";
        cert.add(*worst_actual);
    }

    const ContainmentResult containment = containment_check(config, weights);
    if (containment.contained) {
        CheckRecord rec;
        rec.check = "containment";
        rec.threshold = kWeightSumTolerance;
        rec.margin = constraint_residual(config, weights);
        rec.passed = true;
        cert.add(rec);
    }
    for (const auto& v : containment.violations) {
        CheckRecord rec;
        rec.check = v.leader ? "containment_nonnegative" : "containment_sum";
        rec.first = v.follower;
        rec.second = v.leader.value_or(AgentId{});
        rec.margin = v.value;
        rec.threshold = v.leader ? 0.0 : 1.0;
        rec.passed = false;
        cert.add(rec);
    }
    cert.finalize();
    return cert;
}

}  // namespace deform_swarm
