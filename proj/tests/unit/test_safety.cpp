#include "doctest.h"

#include "deform_swarm/errors.hpp"
#include "deform_swarm/safety.hpp"
#include "deform_swarm/scenario.hpp"
#include "deform_swarm/trainer.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace deform_swarm;

namespace {

/// Leader 1 at (10,0,0), core 2; followers 3 and 4 blend {1, 2} with bounds [0.3, 0.7].
/// On the 5-point grid the closest distinct rows differ by 0.1 in the first
/// weight, so the worst margin is 0.1 * 10 * alpha = alpha.
TeamConfig alpha_toy(double eps)
{
    TeamConfigSpec s;
    s.n_agents = 4;
    s.boundary = {1};
    s.core = {2};
    s.layers = {{1, 2}, {3, 4}};
    s.reference_positions = {{1, {10, 0, 0}}, {2, {0, 0, 0}}};
    s.in_neighbors = {{3, {1, 2}}, {4, {1, 2}}};
    s.beta_bounds = {{0.3, 0.7}};
    s.eps = eps;
    s.delta = 0.1;
    return validate_config(s);
}

SimLog static_log(std::vector<Vec3> positions, int frames = 3)
{
    SimLog log;
    for (int i = 0; i < frames; ++i)
        log.frames.push_back({0.01 * i, positions, {}, {}});
    return log;
}

}  // namespace

TEST_CASE("box separation verdicts")
{
    const std::vector<Vec3> p{{0, 0, 10}, {1, 0, 10}};
    const auto r = pairwise_separation(p, 0.6);
    REQUIRE(r.size() == 1);
    CHECK(r[0].box_separated);
    CHECK_FALSE(r[0].strict_all_axes);
    CHECK(r[0].widest_axis() == 0);

    const std::vector<Vec3> same{{2, 2, 2}, {2, 2, 2}};
    const auto c = pairwise_separation(same, 0.6);
    CHECK_FALSE(c[0].box_separated);
    CHECK_FALSE(c[0].strict_all_axes);

    const std::vector<Vec3> three{{0, 0, 0}, {1, 1, 1}, {5, 5, 5}};
    CHECK(pairwise_separation(three, 0.1).size() == 3);
}

TEST_CASE("containment of projected and corrupted weights")
{
    const TeamConfig cfg = reference_team();
    WeightSet w = uniform_weights(cfg);
    CHECK(containment_check(cfg, w).contained);

    w.beta[2][1] = -0.01;
    const auto neg = containment_check(cfg, w);
    CHECK_FALSE(neg.contained);
    bool listed = false;
    for (const auto& v : neg.violations)
        listed = listed || (v.follower == cfg.followers[2].id && v.leader == cfg.followers[2].leaders[1] &&
                            v.layer == 2 && v.value == -0.01);
    CHECK(listed);

    w = uniform_weights(cfg);
    const int f = cfg.follower_index(AgentId{8});
    w.beta[f] = {0.5, 0.6};
    const auto over = containment_check(cfg, w);
    CHECK_FALSE(over.contained);
    bool sum_listed = false;
    for (const auto& v : over.violations)
        sum_listed = sum_listed || (v.follower == AgentId{8} && !v.leader && std::fabs(v.value - 1.1) < 1e-12);
    CHECK(sum_listed);
}

TEST_CASE("weight margin examples")
{
    const std::vector<Vec3> q{{0, 0, 0}, {10, 0, 0}};
    const std::vector<double> bi{0.6, 0.4}, bh{0.4, 0.6};
    const auto m = weight_margin(q, bi, bh);
    CHECK(m.axis[0] == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(m.axis[1] == 0.0);
    CHECK(m.max() == doctest::Approx(2.0));
    CHECK(m.min() == 0.0);
    CHECK(m.widest_axis() == 0);

    const auto zero = weight_margin(q, bi, bi);
    CHECK(zero.max() == 0.0);
}

TEST_CASE("weight margin against the scalar loop")
{
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + trial % 7;
        std::vector<Vec3> q(n);
        std::vector<double> bi(n), bh(n);
        for (std::size_t j = 0; j < n; ++j) {
            q[j] = oracle::random_vec(rng, 50.0);
            bi[j] = u(rng);
            bh[j] = u(rng);
        }
        const auto m = weight_margin(q, bi, bh);
        const auto o = oracle::naive_margin(q, bi, bh);
        for (int a = 0; a < 3; ++a)
            CHECK(std::fabs(m.axis[a] - o[a]) <= 1e-12);
    }
}

TEST_CASE("sampled rows are feasible")
{
    SamplerOptions grid;
    const auto rows = sample_rows(3, {0.2, 0.6}, grid);
    CHECK_FALSE(rows.empty());
    for (const auto& r : rows) {
        double s = 0;
        for (double x : r) {
            CHECK(x >= 0.2 - 1e-12);
            CHECK(x <= 0.6 + 1e-12);
            s += x;
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }

    SamplerOptions random;
    random.kind = SamplerOptions::Kind::Random;
    random.seed = 4;
    const auto a = sample_rows(4, {0.1, 0.5}, random, 2);
    const auto b = sample_rows(4, {0.1, 0.5}, random, 2);
    CHECK(a == b);
    CHECK(a.size() == static_cast<std::size_t>(random.random_samples));
}

TEST_CASE("alpha search on the two-follower toy")
{
    // Margin alpha against threshold 2 (0.1 + 0.123) = 0.446: the crossing is at
    // alpha* = 0.446 and the smallest safe grid value is 0.45.
    const TeamConfig cfg = alpha_toy(0.123);
    const double threshold = 2 * (cfg.delta + cfg.eps);
    for (double alpha : {1.0, 0.7, 0.45})
        CHECK(worst_weight_margin(cfg, alpha, {}).margin == doctest::Approx(alpha).epsilon(1e-12));

    const auto r = alpha_min_search(cfg, 0.01);
    CHECK(r.alpha_min == doctest::Approx(0.45).epsilon(1e-12));
    CHECK(r.alpha_min >= threshold);
    CHECK(r.alpha_min - threshold <= 0.01);
    REQUIRE(r.certificate.alpha_min);
    CHECK(*r.certificate.alpha_min == r.alpha_min);
    CHECK(r.certificate.passed);
}

TEST_CASE("alpha search gates")
{
    CHECK_THROWS_AS(alpha_min_search(alpha_toy(0.5), 0.01), NeverFeasible);
    CHECK_THROWS_AS(alpha_min_search(alpha_toy(0.123), 0.0), InvalidStep);
    CHECK_THROWS_AS(alpha_min_search(alpha_toy(0.123), 1.0), InvalidStep);
}

TEST_CASE("alpha search is thread-count independent")
{
    const TeamConfig cfg = reference_team();
    SamplerOptions one, many;
    many.threads = 4;
    const auto a = alpha_min_search(cfg, 0.05, one);
    const auto b = alpha_min_search(cfg, 0.05, many);
    CHECK(a.alpha_min == b.alpha_min);
    CHECK(a.worst_at_min.margin == b.worst_at_min.margin);
}

TEST_CASE("certificate on small logs")
{
    const TeamConfig cfg = reference_team();
    const WeightSet w = uniform_weights(cfg);

    CHECK_THROWS_AS(certify_run(cfg, w, SimLog{}), EmptyLog);

    std::vector<Vec3> spread(16);
    for (int i = 0; i < 16; ++i)
        spread[i] = {5.0 * i, 0, 10};
    const auto ok = certify_run(cfg, w, static_log(spread));
    CHECK(ok.passed);

    SimLog log = static_log(spread);
    log.frames[1].desired[6] = log.frames[1].desired[2];
    const auto bad = certify_run(cfg, w, log);
    CHECK_FALSE(bad.passed);
    bool pinpointed = false;
    for (const auto& c : bad.checks)
        pinpointed = pinpointed || (!c.passed && c.time == 0.01 && c.first == AgentId{3} && c.second == AgentId{7});
    CHECK(pinpointed);
}

TEST_CASE("single-agent log passes vacuously")
{
    TeamConfigSpec s;
    s.n_agents = 1;
    s.core = {1};
    s.layers = {{1}};
    s.reference_positions = {{1, {0, 0, 0}}};
    const TeamConfig cfg = validate_config(s);
    WeightSet w;
    w.alpha = {1.0};
    CHECK(certify_run(cfg, w, static_log({{0, 0, 0}})).passed);
}

TEST_CASE("bounded deep-leader sweep never exceeds the enumerated margin")
{
    // Followers 8 and 9 each blend three second-layer agents, so the exact sweep
    // would need more joint choices than the enumeration cap allows.
    TeamConfigSpec s;
    s.n_agents = 9;
    s.boundary = {1, 2, 3};
    s.core = {4};
    s.layers = {{1, 2, 3, 4}, {5, 6, 7}, {8, 9}};
    s.reference_positions = {{1, {12, 1, 0}}, {2, {-9, 8, 0}}, {3, {-2, -11, 0}}, {4, {0, 0, 0}}};
    s.in_neighbors = {{5, {1, 2, 4}}, {6, {2, 3, 4}}, {7, {1, 3, 4}}, {8, {5, 6, 7}}, {9, {5, 6, 7}}};
    s.beta_bounds = {{0.1, 0.6}, {0.1, 0.6}};
    const TeamConfig cfg = validate_config(s);

    SamplerOptions sampler;
    sampler.grid_points = 7;
    const std::size_t rows = sample_rows(3, {0.1, 0.6}, sampler).size();
    REQUIRE(rows * rows * rows > kMaxDeepCombinations);

    const WorstMargin bounded = worst_weight_margin(cfg, 1.0, sampler);
    REQUIRE(bounded.any_pair);
    REQUIRE(bounded.layer == 3);

    // Exact minimum over every joint choice for the layer-three pair, by brute force.
    WeightSet w = uniform_weights(cfg);
    const auto grid = sample_rows(3, {0.1, 0.6}, sampler);
    const auto nominal = forward_pass(cfg, w, Vec3::Zero(), 0.0).positions;
    auto deep = [&](int follower_id, const std::vector<double>& row) {
        const auto& f = cfg.followers[cfg.follower_index(AgentId{follower_id})];
        Vec3 p = Vec3::Zero();
        for (std::size_t j = 0; j < f.leaders.size(); ++j)
            p += row[j] * nominal[f.leaders[j].index()];
        return p;
    };
    double exact = std::numeric_limits<double>::infinity();
    for (const auto& r5 : grid)
        for (const auto& r6 : grid)
            for (const auto& r7 : grid) {
                const std::vector<Vec3> q{deep(5, r5), deep(6, r6), deep(7, r7)};
                for (const auto& bi : grid)
                    for (const auto& bh : grid) {
                        double diff = 0;
                        for (int j = 0; j < 3; ++j)
                            diff = std::max(diff, std::fabs(bi[j] - bh[j]));
                        if (diff < sampler.min_row_difference)
                            continue;
                        exact = std::min(exact, weight_margin(q, bi, bh).max());
                    }
            }
    CHECK(bounded.margin <= exact + 1e-12);
}

TEST_CASE("weight margin is symmetric and absolutely homogeneous")
{
    std::mt19937_64 rng(44);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + trial % 4;
        std::vector<Vec3> q(n), scaled(n);
        std::vector<double> bi(n), bh(n);
        const double c = -3.0 + 6.0 * u(rng);
        for (std::size_t j = 0; j < n; ++j) {
            q[j] = oracle::random_vec(rng, 20.0);
            scaled[j] = c * q[j];
            bi[j] = u(rng);
            bh[j] = u(rng);
        }
        const auto a = weight_margin(q, bi, bh);
        const auto b = weight_margin(q, bh, bi);
        const auto s = weight_margin(scaled, bi, bh);
        for (int k = 0; k < 3; ++k) {
            CHECK(a.axis[k] == b.axis[k]);
            CHECK(s.axis[k] == doctest::Approx(std::fabs(c) * a.axis[k]).epsilon(1e-12));
        }
        CHECK(weight_margin(q, bi, bi).max() == 0.0);
    }
}

TEST_CASE("box separation means disjoint boxes")
{
    std::mt19937_64 rng(45);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 2000; ++trial) {
        const double eps = 0.05 + 0.5 * u(rng);
        const std::vector<Vec3> p{oracle::random_vec(rng, 1.0), oracle::random_vec(rng, 1.0)};
        const auto r = pairwise_separation(p, 2 * eps);
        // Intervals [c - eps, c + eps] overlap on an axis unless one ends before the other starts.
        bool overlap_all = true;
        for (int a = 0; a < 3; ++a) {
            const bool apart = p[0][a] + eps < p[1][a] - eps || p[1][a] + eps < p[0][a] - eps;
            overlap_all = overlap_all && !apart;
        }
        CHECK(r[0].box_separated == !overlap_all);
    }
}

TEST_CASE("grid search result does not depend on row order")
{
    const TeamConfig cfg = reference_team();
    SamplerOptions plain, shuffled;
    shuffled.shuffle_seed = 12345;
    const auto a = alpha_min_search(cfg, 0.02, plain);
    const auto b = alpha_min_search(cfg, 0.02, shuffled);
    CHECK(a.alpha_min == b.alpha_min);
    CHECK(a.worst_at_min.margin == b.worst_at_min.margin);
}
