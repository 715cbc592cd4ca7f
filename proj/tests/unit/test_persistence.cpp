#include "doctest.h"

#include "deform_swarm/errors.hpp"
#include "deform_swarm/persistence.hpp"
#include "deform_swarm/plots.hpp"
#include "deform_swarm/scenario.hpp"
#include "oracles.hpp"

#include <filesystem>
#include <fstream>
#include <random>

using namespace deform_swarm;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("deform_swarm_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

// Nine significant digits: half a unit in the last place.
bool digits_match(double a, double b) { return std::fabs(a - b) <= 5e-9 * std::fabs(a) + 1e-300; }

bool digits_match(const Vec3& a, const Vec3& b)
{
    return digits_match(a.x(), b.x()) && digits_match(a.y(), b.y()) && digits_match(a.z(), b.z());
}

int count_lines(const fs::path& p)
{
    std::ifstream in(p);
    int n = 0;
    for (std::string line; std::getline(in, line);)
        ++n;
    return n;
}

SimLog short_run(double t_final = 0.5)
{
    const TeamConfig cfg = reference_team();
    std::mt19937_64 rng(2);
    SimSettings st;
    st.t_final = t_final;
    return run_simulation(cfg, oracle::random_weights(cfg, rng), {}, {}, {}, st);
}

}  // namespace

TEST_CASE("number formatting")
{
    CHECK(format_csv_number(0.1) == "0.1");
    CHECK(format_csv_number(1.0 / 3.0) == "0.333333333");
    CHECK(format_csv_number(-2.5e-12) == "-2.5e-12");
}

TEST_CASE("trace round trip")
{
    const fs::path dir = scratch_dir("trace");
    TrainTrace t;
    t.rows = {{0, 1.25, 0.0}, {1, 0.123456789, 1e-13}, {2, 3e-20, 0.0}};
    write_trace_csv(t, dir / "t.csv");
    const TrainTrace back = read_trace_csv(dir / "t.csv");
    REQUIRE(back.rows.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back.rows[i].epoch == t.rows[i].epoch);
        CHECK(digits_match(t.rows[i].loss, back.rows[i].loss));
    }
    CHECK_THROWS_AS(write_trace_csv(TrainTrace{}, dir / "e.csv"), std::invalid_argument);
}

TEST_CASE("one-snapshot log has one row per agent")
{
    const fs::path dir = scratch_dir("one");
    SimLog log = short_run(0.0);
    write_desired_csv(log, dir / "d.csv");
    write_vehicle_csv(log, dir / "v.csv");
    CHECK(count_lines(dir / "d.csv") == 1 + 16);
    CHECK(count_lines(dir / "v.csv") == 1 + 16);
    CHECK_THROWS_AS(write_desired_csv(SimLog{}, dir / "x.csv"), std::invalid_argument);
}

TEST_CASE("simulation log round trip")
{
    const fs::path dir = scratch_dir("log");
    const SimLog log = short_run();
    write_desired_csv(log, dir / "d.csv");
    write_vehicle_csv(log, dir / "v.csv");
    CHECK(count_lines(dir / "d.csv") == 1 + 16 * static_cast<int>(log.frames.size()));

    const SimLog back = read_sim_log(dir / "d.csv", dir / "v.csv");
    REQUIRE(back.frames.size() == log.frames.size());
    for (std::size_t k = 0; k < log.frames.size(); ++k) {
        const auto& a = log.frames[k];
        const auto& b = back.frames[k];
        CHECK(std::fabs(a.time - b.time) <= 1e-9);
        for (std::size_t i = 0; i < a.desired.size(); ++i) {
            CHECK(digits_match(a.desired[i], b.desired[i]));
            CHECK(digits_match(a.states[i].position, b.states[i].position));
            CHECK(digits_match(a.states[i].attitude, b.states[i].attitude));
            CHECK(digits_match(a.controls[i].thrust, b.controls[i].thrust));
            for (int r = 0; r < 4; ++r)
                CHECK(digits_match(a.controls[i].rotor_speeds[r], b.controls[i].rotor_speeds[r]));
        }
    }
    const SimLog desired_only = read_sim_log(dir / "d.csv");
    CHECK_FALSE(desired_only.has_actual());
}

TEST_CASE("malformed csv reports the line")
{
    const fs::path dir = scratch_dir("bad");
    {
        std::ofstream out(dir / "d.csv");
        out << "t,agent_id,x_d,y_d,z_d\n0,1,0,0,0\n0,2,zz,0,0\n";
    }
    try {
        read_sim_log(dir / "d.csv");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    CHECK_THROWS_AS(read_sim_log(dir / "missing.csv"), IoError);
}

TEST_CASE("weights json round trip")
{
    const TeamConfig cfg = reference_team();
    std::mt19937_64 rng(9);
    const WeightSet w = oracle::random_weights(cfg, rng);
    const auto doc = weights_to_json(cfg, w);
    CHECK(weights_from_json(cfg, doc) == w);

    const fs::path dir = scratch_dir("json");
    write_json(doc, dir / "w.json");
    CHECK(weights_from_json(cfg, read_json(dir / "w.json")) == w);

    auto broken = doc;
    broken["beta"].erase(0);
    CHECK_THROWS_AS(weights_from_json(cfg, broken), std::invalid_argument);
}

TEST_CASE("plot set")
{
    const fs::path dir = scratch_dir("plots");
    const TeamConfig cfg = reference_team();
    const SimLog log = short_run();
    const SafetyCertificate cert;

    const auto none = emit_plots(cfg, log, cert, {{}, {0.0}, std::nullopt}, dir / "a");
    for (const auto& f : none)
        CHECK(f.filename().string().rfind("agent_", 0) != 0);
    CHECK(fs::exists(dir / "a" / "configuration_snapshots.svg"));

    const auto six = emit_plots(cfg, log, cert, {{6}, {0.0, 0.25}, std::nullopt}, dir / "b");
    for (const char* name : {"agent_6_x.svg", "agent_6_y.svg", "agent_6_thrust.svg", "agent_6_rotor_speeds.svg",
                             "min_separation.svg"}) {
        CHECK(fs::exists(dir / "b" / name));
        std::ifstream in(dir / "b" / name);
        std::string head;
        std::getline(in, head);
        CHECK(head.find("<svg") != std::string::npos);
    }
    CHECK(six.size() == none.size() + 4);
}
