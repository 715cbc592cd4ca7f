#include "doctest.h"

#include "deform_swarm/plots.hpp"
#include "deform_swarm/safety.hpp"
#include "deform_swarm/scenario.hpp"
#include "deform_swarm/trainer.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace deform_swarm;

namespace {

bool near(const Vec3& a, const Vec3& b, double tol) { return (a - b).cwiseAbs().maxCoeff() <= tol; }

}  // namespace

TEST_CASE("ellipse samples")
{
    const EllipseTrajectory e;
    CHECK(near(ellipse_d(e, 0).d, {100, 0, 10}, 1e-12));
    CHECK(near(ellipse_d(e, 15).d, {0, 80, 10}, 1e-12));
    CHECK(near(ellipse_d(e, 60).d, ellipse_d(e, 0).d, 1e-12));
}

TEST_CASE("ellipse derivatives match differences")
{
    const EllipseTrajectory e{40, 25, 20, 5, 0.3};
    const double h = 1e-5;
    for (double t : {0.0, 3.7, 11.2}) {
        const auto s = ellipse_d(e, t);
        const Vec3 v = (ellipse_d(e, t + h).d - ellipse_d(e, t - h).d) / (2 * h);
        const Vec3 a = (ellipse_d(e, t + h).d_dot - ellipse_d(e, t - h).d_dot) / (2 * h);
        CHECK(near(s.d_dot, v, 1e-6));
        CHECK(near(s.d_ddot, a, 1e-6));
    }
}

TEST_CASE("zero-duration run")
{
    const TeamConfig cfg = reference_team();
    SimSettings st;
    st.t_final = 0.0;
    const SimLog log = run_simulation(cfg, uniform_weights(cfg), {}, {}, {}, st);
    REQUIRE(log.frames.size() == 1);
    const auto& f = log.frames.front();
    for (int i = 0; i < cfg.n_agents; ++i) {
        CHECK(f.states[i].position == f.desired[i]);
        CHECK(f.states[i].velocity.norm() == 0.0);
    }
}

TEST_CASE("static nominal point gives zero tracking error")
{
    const TeamConfig cfg = reference_team();
    EllipseTrajectory still{0, 0, 60, 10, 0};
    SimSettings st;
    st.t_final = 2.0;
    const SimLog log = run_simulation(cfg, uniform_weights(cfg), still, {}, {}, st);
    const auto rep = tracking_report(log, 0.0, cfg.delta);
    CHECK(rep.worst <= 1e-12);
    CHECK(certify_run(cfg, uniform_weights(cfg), log).passed);
}

TEST_CASE("tracking report picks the injected offset")
{
    SimLog log;
    for (int i = 0; i < 3; ++i) {
        SimFrame f;
        f.time = i;
        f.desired = {{0, 0, 0}, {5, 5, 5}};
        f.states.resize(2);
        f.states[0].position = f.desired[0];
        f.states[1].position = f.desired[1];
        log.frames.push_back(f);
    }
    CHECK(tracking_report(log, 0.0, 0.1).worst == 0.0);
    log.frames[2].states[1].position.x() += 0.3;
    const auto rep = tracking_report(log, 0.0, 0.1);
    CHECK(rep.max_error[1].x() == doctest::Approx(0.3));
    CHECK(rep.worst_agent == AgentId{2});
    CHECK(rep.worst_axis == 0);
    CHECK_FALSE(rep.within_bound());
    // Before the transient nothing counts.
    CHECK(tracking_report(log, 2.5, 0.1).worst == 0.0);
}

TEST_CASE("short ellipse run stays on the plan")
{
    const TeamConfig cfg = reference_team();
    const TrainResult tr = train(cfg, ellipse_d({}, 0).d, {});
    SimSettings st;
    st.t_final = 8.0;
    const SimLog log = run_simulation(cfg, tr.weights, {}, {}, {}, st);
    CHECK(log.frames.size() == 801);
    CHECK(log.interval() == doctest::Approx(0.01));
    CHECK(tracking_report(log, 5.0, cfg.delta).within_bound());
    // Desired positions stay inside the hull of the primary leaders.
    for (std::size_t k = 0; k < log.frames.size(); k += 100) {
        const auto& f = log.frames[k];
        std::vector<Vec3> hull;
        for (const auto& id : cfg.primary_leaders())
            hull.push_back(f.desired[id.index()]);
        for (const auto& p : f.desired)
            CHECK(oracle::in_hull(p, hull));
    }
}

TEST_CASE("full lap is periodic and consistent with the analytic rates")
{
    const TeamConfig cfg = reference_team();
    std::mt19937_64 rng(31);
    const WeightSet w = oracle::random_weights(cfg, rng);
    const EllipseTrajectory e;
    const SimLog log = run_simulation(cfg, w, e, {}, {}, {});
    REQUIRE(log.frames.back().time == doctest::Approx(e.period));
    for (int i = 0; i < cfg.n_agents; ++i)
        CHECK(near(log.frames.front().desired[i], log.frames.back().desired[i], 1e-9));

    // Central differences of the logged positions against the propagated rate.
    // The truncation term is h^2 / 6 times the third derivative, about 2e-6 m/s here.
    const double h = log.interval();
    for (std::size_t k = 1; k + 1 < log.frames.size(); k += 250) {
        const auto rates = forward_rates(cfg, w, ellipse_d(e, log.frames[k].time).d_dot);
        for (int i = 0; i < cfg.n_agents; ++i) {
            const Vec3 fd = (log.frames[k + 1].desired[i] - log.frames[k - 1].desired[i]) / (2 * h);
            CHECK(near(fd, rates[i], 1e-5));
        }
    }
}

TEST_CASE("separation series stays above the threshold on a passing run")
{
    const TeamConfig cfg = reference_team();
    const TrainResult tr = train(cfg, ellipse_d({}, 0).d, {});
    SimSettings st;
    st.t_final = 10.0;
    const SimLog log = run_simulation(cfg, tr.weights, {}, {}, {}, st);
    REQUIRE(certify_run(cfg, tr.weights, log).passed);
    const double threshold = 2 * (cfg.delta + cfg.eps);
    const auto series = min_box_separation(log, false);
    CHECK(series.size() == log.frames.size());
    for (double m : series)
        CHECK(m > threshold);
    for (double m : min_box_separation(log, true))
        CHECK(m > 2 * cfg.eps);
}
